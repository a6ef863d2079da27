use super::pulse::PulseSampler;
use super::{LindbladConfig, EXCITED_DOWN, EXCITED_UP, MINUS_DOWN, MINUS_UP, NV_MINUS, PLUS_DOWN, PLUS_UP};
use crate::units::TWO_PI;
use crate::{Error, Result};
use nalgebra::{DMatrix, SMatrix, SymmetricEigen};
use num_complex::Complex64;

pub type Mat7 = SMatrix<Complex64, 7, 7>;

/// MHz → rad/ns.
pub(crate) const RAD_PER_NS_PER_MHZ: f64 = TWO_PI * 1e-3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Density matrix over 6 levels, or 7 with the NV⁻ sink. Storage is always
/// 7×7; unused rows and columns stay zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    rho: Mat7,
}

impl DensityMatrix {
    pub(crate) fn from_parts(dim: usize, rho: Mat7) -> Self {
        Self { dim, rho }
    }

    /// Build from an explicit `dim × dim` matrix (6 or 7).
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Result<Self> {
        let dim = m.nrows();
        if m.ncols() != dim || !(dim == 6 || dim == 7) {
            return Err(Error::invalid("rho", "must be 6×6 or 7×7"));
        }
        let mut rho = Mat7::zeros();
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] = m[(i, j)];
            }
        }
        let out = Self { dim, rho };
        let tr = out.trace();
        if (tr - 1.0).abs() > 1e-8 {
            return Err(Error::NotNormalized { deficit: 1.0 - tr });
        }
        if out.hermitian_residual() > 1e-10 {
            return Err(Error::NotHermitian { residual: out.hermitian_residual() });
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn raw(&self) -> &Mat7 {
        &self.rho
    }

    pub fn matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.rho[(i, j)])
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim).map(|k| self.rho[(k, k)].re).collect()
    }

    pub fn population(&self, level: usize) -> f64 {
        self.rho[(level, level)].re
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|k| self.rho[(k, k)].re).sum()
    }

    pub fn hermitian_residual(&self) -> f64 {
        (self.rho - self.rho.adjoint()).norm()
    }

    /// tr ρ².
    pub fn purity(&self) -> f64 {
        (self.rho * self.rho).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.matrix();
        let h = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Extend a 6-level state with an empty NV⁻ level.
    pub fn with_sink(&self) -> Self {
        Self { dim: 7, rho: self.rho }
    }
}

/// Diagonal state with the given level probabilities (6 or 7 entries).
pub fn initial_mixed_state(probabilities: &[f64]) -> Result<DensityMatrix> {
    let dim = probabilities.len();
    if !(dim == 6 || dim == 7) {
        return Err(Error::invalid("probabilities", format!("need 6 or 7 entries, got {dim}")));
    }
    if let Some(p) = probabilities.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::invalid("probabilities", format!("negative or NaN entry {p}")));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::NotNormalized { deficit: 1.0 - total });
    }
    let mut rho = Mat7::zeros();
    for (k, &p) in probabilities.iter().enumerate() {
        rho[(k, k)] = Complex64::new(p, 0.0);
    }
    Ok(DensityMatrix { dim, rho })
}

/// Orbitally mixed ↓ state left by the charge-resonance herald.
pub fn heralded_down_state(dim: usize) -> DensityMatrix {
    let mut p = vec![0.0; dim];
    p[PLUS_DOWN] = 0.5;
    p[MINUS_DOWN] = 0.5;
    initial_mixed_state(&p).expect("valid probabilities")
}

/// Rotating-frame drive Hamiltonian at time `t` (ns), in rad/µs (2π × MHz).
pub fn build_drive_hamiltonian(t: f64, cfg: &LindbladConfig, delta_mhz: f64) -> DMatrix<Complex64> {
    let omega = cfg.rabi_slope * cfg.pulse.power(t).sqrt();
    let h = hamiltonian_mhz(cfg, delta_mhz, omega) * Complex64::new(TWO_PI, 0.0);
    DMatrix::from_fn(cfg.dim(), cfg.dim(), |i, j| h[(i, j)])
}

/// Hamiltonian in MHz for Rabi frequency `omega` (MHz).
fn hamiltonian_mhz(cfg: &LindbladConfig, delta: f64, omega: f64) -> Mat7 {
    let mut h = static_hamiltonian_mhz(cfg, delta);
    h += drive_pattern(cfg) * Complex64::new(omega, 0.0);
    h
}

fn static_hamiltonian_mhz(cfg: &LindbladConfig, delta: f64) -> Mat7 {
    let mut h = Mat7::zeros();
    h[(EXCITED_DOWN, EXCITED_DOWN)] = Complex64::new(delta, 0.0);
    h[(EXCITED_UP, EXCITED_UP)] = Complex64::new(cfg.delta_opposite_mhz + delta, 0.0);
    h
}

/// Drive couplings per unit Rabi frequency: Ω/2 on both lower-branch lines.
fn drive_pattern(cfg: &LindbladConfig) -> Mat7 {
    let mut d = Mat7::zeros();
    let half = Complex64::new(0.5, 0.0);
    let opp = Complex64::new(0.5 * cfg.opposite_line_coupling, 0.0);
    d[(PLUS_DOWN, EXCITED_DOWN)] = half;
    d[(EXCITED_DOWN, PLUS_DOWN)] = half;
    d[(MINUS_UP, EXCITED_UP)] = opp;
    d[(EXCITED_UP, MINUS_UP)] = opp;
    d
}

/// Single-element jump `|target⟩⟨source|` with rate in 1/ns. Power-scaled
/// channels carry a rate per nW multiplied by the instantaneous power.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CollapseOp {
    pub target: usize,
    pub source: usize,
    pub rate: f64,
    pub power_scaled: bool,
}

impl CollapseOp {
    /// `√γ |target⟩⟨source|` as a dense matrix at drive power `power_nw`.
    pub fn to_matrix(&self, dim: usize, power_nw: f64) -> DMatrix<Complex64> {
        let mut m = DMatrix::zeros(dim, dim);
        m[(self.target, self.source)] = Complex64::new(self.effective_rate(power_nw).sqrt(), 0.0);
        m
    }

    pub fn effective_rate(&self, power_nw: f64) -> f64 {
        if self.power_scaled {
            self.rate * power_nw
        } else {
            self.rate
        }
    }
}

/// One operator per directed relaxation channel, each at half the inverse
/// timescale so that population differences relax at the full inverse
/// timescale. Channels with infinite timescale or zero rate are omitted.
pub fn build_collapse_operators(cfg: &LindbladConfig) -> Vec<CollapseOp> {
    let mut ops = Vec::new();
    let mut pair = |a: usize, b: usize, rate: f64| {
        if rate > 0.0 {
            ops.push(CollapseOp { target: a, source: b, rate, power_scaled: false });
            ops.push(CollapseOp { target: b, source: a, rate, power_scaled: false });
        }
    };
    let orbit = 0.5 / cfg.tau_orbit_ns;
    pair(PLUS_DOWN, MINUS_DOWN, orbit);
    pair(PLUS_UP, MINUS_UP, orbit);
    let spin = 0.5 / (cfg.tau_spin_s * 1e9);
    pair(PLUS_DOWN, PLUS_UP, spin);
    pair(MINUS_DOWN, MINUS_UP, spin);
    let exc_spin = 0.5 / (cfg.tau_exc_spin_s * 1e9);
    pair(EXCITED_DOWN, EXCITED_UP, exc_spin);

    let rad = 0.5 / cfg.tau_exc_ns;
    if rad > 0.0 {
        for (t, s) in
            [(PLUS_DOWN, EXCITED_DOWN), (MINUS_DOWN, EXCITED_DOWN), (MINUS_UP, EXCITED_UP), (PLUS_UP, EXCITED_UP)]
        {
            ops.push(CollapseOp { target: t, source: s, rate: rad, power_scaled: false });
        }
    }
    if let Some(r) = &cfg.recharge {
        let k = r.rate_per_nw * 1e-9;
        if k > 0.0 {
            for s in [EXCITED_DOWN, EXCITED_UP] {
                ops.push(CollapseOp { target: NV_MINUS, source: s, rate: k, power_scaled: true });
            }
        }
    }
    ops
}

/// Precomputed right-hand side `dρ/dt = −i(H_eff ρ − ρ H_eff†) + Σ γ ρ_ss |t⟩⟨t|`
/// with `H_eff = H − (i/2) Σ C†C`, in rad/ns.
pub(crate) struct Generator {
    h_static: Mat7,
    drive: Mat7,
    alpha: f64,
    power_loss: [f64; 7],
    static_jumps: Vec<(usize, usize, f64)>,
    power_jumps: Vec<(usize, usize, f64)>,
    pulse: PulseSampler,
}

impl Generator {
    pub fn new(cfg: &LindbladConfig, delta_mhz: f64) -> Self {
        Self::with_ops(cfg, delta_mhz, &build_collapse_operators(cfg))
    }

    pub fn with_ops(cfg: &LindbladConfig, delta_mhz: f64, ops: &[CollapseOp]) -> Self {
        let s = Complex64::new(RAD_PER_NS_PER_MHZ, 0.0);
        let mut h_static = static_hamiltonian_mhz(cfg, delta_mhz) * s;
        let drive = drive_pattern(cfg) * s;
        let mut power_loss = [0.0; 7];
        let mut static_jumps = Vec::new();
        let mut power_jumps = Vec::new();
        for op in ops {
            if op.power_scaled {
                power_loss[op.source] += op.rate;
                power_jumps.push((op.target, op.source, op.rate));
            } else {
                h_static[(op.source, op.source)] -= Complex64::new(0.0, 0.5 * op.rate);
                static_jumps.push((op.target, op.source, op.rate));
            }
        }
        Self {
            h_static,
            drive,
            alpha: cfg.rabi_slope,
            power_loss,
            static_jumps,
            power_jumps,
            pulse: cfg.pulse.sampler(),
        }
    }

    pub fn rhs(&self, t: f64, rho: &Mat7) -> Mat7 {
        let p = self.pulse.power(t);
        let mut heff = self.h_static;
        if p > 0.0 {
            heff += self.drive * Complex64::new(self.alpha * p.sqrt(), 0.0);
            for (k, &g) in self.power_loss.iter().enumerate() {
                if g > 0.0 {
                    heff[(k, k)] -= Complex64::new(0.0, 0.5 * g * p);
                }
            }
        }
        let a = heff * rho;
        // −i(A − A†) for Hermitian ρ
        let mut out = Mat7::from_fn(|i, j| {
            let d = a[(i, j)] - a[(j, i)].conj();
            Complex64::new(d.im, -d.re)
        });
        for &(t_, s, g) in &self.static_jumps {
            out[(t_, t_)] += Complex64::new(g * rho[(s, s)].re, 0.0);
        }
        if p > 0.0 {
            for &(t_, s, g) in &self.power_jumps {
                out[(t_, t_)] += Complex64::new(g * p * rho[(s, s)].re, 0.0);
            }
        }
        out
    }

    /// Dense Liouvillian on `vec(ρ)` (column-major) over `levels`, at
    /// constant power `p`. Jumps leaving the subset are dropped entirely,
    /// including their loss term.
    pub fn liouvillian(&self, levels: &[usize], p: f64) -> DMatrix<Complex64> {
        let n = levels.len();
        let inside = |k: usize| levels.iter().position(|&l| l == k);
        let mut heff = DMatrix::<Complex64>::zeros(n, n);
        let mut h = self.h_static;
        // undo static losses, re-add only those that stay inside
        for k in 0..7 {
            h[(k, k)] = Complex64::new(h[(k, k)].re, 0.0);
        }
        h += self.drive * Complex64::new(self.alpha * p.max(0.0).sqrt(), 0.0);
        for (a, &la) in levels.iter().enumerate() {
            for (b, &lb) in levels.iter().enumerate() {
                heff[(a, b)] = h[(la, lb)];
            }
        }
        let mut jumps = Vec::new();
        for &(t_, s, g) in &self.static_jumps {
            jumps.push((t_, s, g));
        }
        for &(t_, s, g) in &self.power_jumps {
            jumps.push((t_, s, g * p));
        }
        let mut kept = Vec::new();
        for (t_, s, g) in jumps {
            if let (Some(a), Some(b)) = (inside(t_), inside(s)) {
                heff[(b, b)] -= Complex64::new(0.0, 0.5 * g);
                kept.push((a, b, g));
            }
        }
        let nn = n * n;
        let mut l = DMatrix::<Complex64>::zeros(nn, nn);
        let idx = |i: usize, j: usize| i + j * n;
        let mi = Complex64::new(0.0, -1.0);
        for i in 0..n {
            for j in 0..n {
                // −i (Heff ρ)_{ij} = −i Σ_k Heff_{ik} ρ_{kj}
                for k in 0..n {
                    if heff[(i, k)] != ZERO {
                        l[(idx(i, j), idx(k, j))] += mi * heff[(i, k)];
                    }
                    // +i (ρ Heff†)_{ij} = +i Σ_k ρ_{ik} conj(Heff_{jk})
                    if heff[(j, k)] != ZERO {
                        l[(idx(i, j), idx(i, k))] -= mi * heff[(j, k)].conj();
                    }
                }
            }
        }
        for (a, b, g) in kept {
            l[(idx(a, a), idx(b, b))] += Complex64::new(g, 0.0);
        }
        l
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{PulseShape, RechargeConfig};

    #[test]
    fn initial_states() {
        let r = initial_mixed_state(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(r.population(0), 1.0);
        assert!((r.purity() - 1.0).abs() < 1e-15);
        let h = heralded_down_state(6);
        assert_eq!(h.populations(), vec![0.5, 0.0, 0.5, 0.0, 0.0, 0.0]);
        match initial_mixed_state(&[0.5, 0.0, 0.0, 0.0, 0.0, 0.0]) {
            Err(Error::NotNormalized { deficit }) => assert!((deficit - 0.5).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        assert!(initial_mixed_state(&[1.5, -0.5, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn hamiltonian_layout() {
        let cfg = LindbladConfig { pulse: PulseShape::constant(5.0), ..LindbladConfig::default() };
        let h = build_drive_hamiltonian(0.0, &cfg, 0.0);
        let omega = 5.3 * 5.0f64.sqrt();
        assert!((omega - 11.851).abs() < 1e-3);
        let w = |v: f64| Complex64::new(TWO_PI * v, 0.0);
        assert_eq!(h[(0, 4)], w(omega / 2.0));
        assert_eq!(h[(4, 0)], w(omega / 2.0));
        assert_eq!(h[(1, 5)], w(omega / 2.0));
        assert_eq!(h[(5, 5)], w(160.0));
        assert_eq!(h[(4, 4)], w(0.0));
        assert!((&h - h.adjoint()).norm() == 0.0);
        let off = LindbladConfig { pulse: PulseShape::default(), ..cfg };
        let h0 = build_drive_hamiltonian(0.0, &off, 3.0);
        assert_eq!(h0[(0, 4)], Complex64::new(0.0, 0.0));
        assert_eq!(h0[(4, 4)], w(3.0));
        assert_eq!(h0[(5, 5)], w(163.0));
    }

    #[test]
    fn collapse_channels() {
        let cfg = LindbladConfig::default();
        let ops = build_collapse_operators(&cfg);
        // 2 orbital pairs, 2 spin pairs, 4 radiative; excited spin mixing off
        assert_eq!(ops.len(), 12);
        let out_of_excited: f64 = ops.iter().filter(|o| o.source == EXCITED_DOWN).map(|o| o.rate).sum();
        assert!((out_of_excited - 1.0 / 22.0).abs() < 1e-15);
        let inf = LindbladConfig {
            tau_exc_ns: f64::INFINITY,
            tau_orbit_ns: f64::INFINITY,
            tau_spin_s: f64::INFINITY,
            ..cfg.clone()
        };
        assert!(build_collapse_operators(&inf).is_empty());
        let rc = LindbladConfig { recharge: Some(RechargeConfig { rate_per_nw: 10.0, rescale: 1.0 }), ..cfg };
        let ops = build_collapse_operators(&rc);
        assert_eq!(ops.iter().filter(|o| o.power_scaled).count(), 2);
        let m = ops.last().unwrap().to_matrix(7, 4.0);
        assert!((m[(NV_MINUS, EXCITED_UP)].re - (40e-9f64).sqrt()).abs() < 1e-18);
    }

    /// The orbital population difference relaxes at 1/τ_orbit: with
    /// p± the populations, d/dt (p+ − p−) = −2γ(p+ − p−), γ = 1/(2τ).
    #[test]
    fn orbital_difference_rate() {
        let cfg = LindbladConfig::default();
        let g = Generator::new(&cfg, 0.0);
        let rho = initial_mixed_state(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let d = g.rhs(0.0, rho.raw());
        let rate = -(d[(0, 0)].re - d[(2, 2)].re);
        let spin_leak = 1.0 / (2.0 * 1.51e9);
        assert!((rate - (1.0 / 430.0 + spin_leak)).abs() < 1e-15);
    }

    #[test]
    fn liouvillian_matches_rhs() {
        let cfg = LindbladConfig {
            pulse: PulseShape::constant(3.0),
            tau_exc_spin_s: 1e-6,
            recharge: Some(RechargeConfig { rate_per_nw: 1e6, rescale: 1.0 }),
            ..LindbladConfig::default()
        };
        let g = Generator::new(&cfg, 2.5);
        let levels: Vec<usize> = (0..7).collect();
        let l = g.liouvillian(&levels, 3.0);
        let mut rho = Mat7::zeros();
        for i in 0..7 {
            for j in 0..7 {
                let v = Complex64::new(((i * 7 + j) as f64 * 0.37).sin(), ((i + 2 * j) as f64).cos() * 0.1);
                rho[(i, j)] += v;
                rho[(j, i)] += v.conj();
            }
        }
        let direct = g.rhs(0.0, &rho);
        let v = nalgebra::DVector::from_fn(49, |k, _| rho[(k % 7, k / 7)]);
        let lv = &l * v;
        for k in 0..49 {
            assert!((lv[k] - direct[(k % 7, k / 7)]).norm() < 1e-12);
        }
    }
}
