use super::{transition_table, Branch, FineStructureParams, Polarization, Spin};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Angles per wave-plate sweep; one full modulation period.
pub const WAVE_PLATE_ANGLES: usize = 36;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Contrasts {
    /// Modulation depth under a circular (quarter-wave plate) sweep.
    pub orbit: f64,
    /// Modulation depth under a linear (half-wave plate) sweep.
    pub spin_orbit: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContrastOptions {
    /// Fraction of the light in the intended polarization; the rest is
    /// treated as unpolarized. 1 is ideal optics.
    pub polarization_purity: f64,
    pub angles: usize,
}

impl Default for ContrastOptions {
    fn default() -> Self {
        Self { polarization_purity: 1.0, angles: WAVE_PLATE_ANGLES }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepKind {
    /// Quarter-wave plate after a diagonal (45°) input, angles over [0, π).
    /// The diagonal input keeps the linear H/V admixture zero on average,
    /// so the sweep mean does not depend on strain.
    Circular,
    /// Half-wave plate after H input, angles over [0, π/2).
    Linear,
}

impl SweepKind {
    /// Modulation period in wave-plate angle.
    pub fn period(self) -> f64 {
        match self {
            SweepKind::Circular => PI,
            SweepKind::Linear => PI / 2.0,
        }
    }

    pub fn polarization(self, angle: f64) -> Polarization {
        match self {
            SweepKind::Circular => Polarization::quarter_wave_plate_with_input(PI / 4.0, angle),
            SweepKind::Linear => Polarization::half_wave_plate(angle),
        }
    }
}

/// Simulated amplitudes of the two lower-branch lines (↓ then ↑) versus
/// wave-plate angle.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PolarizationSweep {
    pub kind: SweepKind,
    pub angles: Vec<f64>,
    pub amp_down: Vec<f64>,
    pub amp_up: Vec<f64>,
}

pub fn polarization_sweep(
    p: &FineStructureParams,
    kind: SweepKind,
    opts: &ContrastOptions,
) -> Result<PolarizationSweep> {
    if !(0.0..=1.0).contains(&opts.polarization_purity) {
        return Err(Error::invalid("polarization_purity", "must lie in [0, 1]"));
    }
    if opts.angles < 4 {
        return Err(Error::invalid("angles", "need at least 4 angles for a 3-term sine fit"));
    }
    let table = transition_table(p)?;
    let down = table.get(Spin::Down, Branch::Lower);
    let up = table.get(Spin::Up, Branch::Lower);
    let purity = opts.polarization_purity;
    // Unpolarized light drives each orbital with weight ½.
    let mix = |a: f64| purity * a + 0.5 * (1.0 - purity);
    let step = kind.period() / opts.angles as f64;
    let angles: Vec<f64> = (0..opts.angles).map(|k| k as f64 * step).collect();
    let mut amp_down = Vec::with_capacity(angles.len());
    let mut amp_up = Vec::with_capacity(angles.len());
    for &a in &angles {
        let pol = kind.polarization(a);
        amp_down.push(mix(down.amplitude(&pol)));
        amp_up.push(mix(up.amplitude(&pol)));
    }
    Ok(PolarizationSweep { kind, angles, amp_down, amp_up })
}

/// Least-squares fit of `c0 + c1 sin(2πx/T) + c2 cos(2πx/T)`; returns
/// `(amplitude, phase, offset)`.
pub(crate) fn fixed_period_sine_fit(x: &[f64], y: &[f64], period: f64) -> Result<(f64, f64, f64)> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::invalid("sine fit", "need ≥3 paired samples"));
    }
    let w = 2.0 * PI / period;
    let mut ata = nalgebra::Matrix3::<f64>::zeros();
    let mut aty = nalgebra::Vector3::<f64>::zeros();
    for (&xi, &yi) in x.iter().zip(y) {
        let row = nalgebra::Vector3::new(1.0, (w * xi).sin(), (w * xi).cos());
        ata += row * row.transpose();
        aty += row * yi;
    }
    let c = ata.lu().solve(&aty).ok_or(Error::Underdetermined { rank: 2, required: 3 })?;
    Ok((c[1].hypot(c[2]), c[2].atan2(c[1]), c[0]))
}

/// Orbit contrast from a circular sweep: each line is normalized by the
/// mean over all angles of the summed amplitudes, and the contrast is the
/// sine amplitude of the normalized difference.
pub(crate) fn circular_contrast(angles: &[f64], a1: &[f64], a2: &[f64], period: f64) -> Result<f64> {
    let mean_sum = a1.iter().zip(a2).map(|(x, y)| x + y).sum::<f64>() / a1.len() as f64;
    if !(mean_sum > 0.0) {
        return Err(Error::invalid("amplitudes", "summed amplitude must be positive"));
    }
    let diff: Vec<f64> = a1.iter().zip(a2).map(|(x, y)| (x - y) / mean_sum).collect();
    Ok(fixed_period_sine_fit(angles, &diff, period)?.0)
}

/// Spin-orbit contrast from a linear sweep: the pairwise mean normalized by
/// its mean over all angles.
pub(crate) fn linear_contrast(angles: &[f64], a1: &[f64], a2: &[f64], period: f64) -> Result<f64> {
    let pair: Vec<f64> = a1.iter().zip(a2).map(|(x, y)| 0.5 * (x + y)).collect();
    let mean = pair.iter().sum::<f64>() / pair.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::invalid("amplitudes", "mean amplitude must be positive"));
    }
    let norm: Vec<f64> = pair.iter().map(|v| v / mean).collect();
    Ok(fixed_period_sine_fit(angles, &norm, period)?.0)
}

pub fn contrasts(p: &FineStructureParams) -> Result<Contrasts> {
    contrasts_with(p, &ContrastOptions::default())
}

pub fn contrasts_with(p: &FineStructureParams, opts: &ContrastOptions) -> Result<Contrasts> {
    let c = polarization_sweep(p, SweepKind::Circular, opts)?;
    let l = polarization_sweep(p, SweepKind::Linear, opts)?;
    let orbit = circular_contrast(&c.angles, &c.amp_down, &c.amp_up, c.kind.period())?;
    let spin_orbit = linear_contrast(&l.angles, &l.amp_down, &l.amp_up, l.kind.period())?;
    Ok(Contrasts { orbit: orbit.clamp(0.0, 1.0), spin_orbit: spin_orbit.clamp(0.0, 1.0) })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent closed form for real lower-branch eigenvectors
    /// `c₊|+⟩ + c₋|−⟩`: with z = c₊² − c₋² and q = c₊c₋, a line under Stokes
    /// parameters (S1, S3) has amplitude ½(1 + 2q·S1 + z·S3); S1 averages to
    /// zero over the circular sweep.
    fn oracle(p: &FineStructureParams) -> (f64, f64) {
        let lz = p.orbital_zeeman_mhz();
        let lam = p.lambda_so.mhz();
        let e = p.eps_perp.mhz();
        let lower = |a: f64| {
            // 2×2 block [[a, e], [e, -a]] in (|+⟩, |−⟩); lower eigenvector.
            let r = a.hypot(e);
            if r == 0.0 {
                return (1.0, 0.0);
            }
            let z = -a / r;
            let q = -e / (2.0 * r);
            (z, q)
        };
        let (z1, q1) = lower(lz - lam);
        let (z2, q2) = lower(lz + lam);
        // The ↑ block is written in (|+,↑⟩, |−,↑⟩) order too.
        ((z1 - z2).abs() / 2.0, (q1 + q2).abs())
    }

    #[test]
    fn limits() {
        let c = contrasts(&FineStructureParams::new(0.039, 4.9, 0.0)).unwrap();
        assert!((c.orbit - 1.0).abs() < 1e-9 && c.spin_orbit.abs() < 1e-9, "{c:?}");
        let c = contrasts(&FineStructureParams::new(0.039, 4.9, 49000.0)).unwrap();
        assert!(c.spin_orbit > 0.9999 && c.orbit < 1e-3, "{c:?}");
    }

    #[test]
    fn sweep_matches_closed_form() {
        for eps in [0.0, 0.3, 1.05, 1.9, 3.2, 4.35, 7.2, 12.0] {
            for (l, lam) in [(0.039, 4.9), (0.04, 4.5), (0.0186, 2.24)] {
                let p = FineStructureParams::new(l, lam, eps);
                let c = contrasts(&p).unwrap();
                let (o, so) = oracle(&p);
                assert!((c.orbit - o).abs() < 1e-10, "eps={eps} {c:?} vs {o}");
                assert!((c.spin_orbit - so).abs() < 1e-10, "eps={eps} {c:?} vs {so}");
            }
        }
    }

    #[test]
    fn orbit_contrast_monotone_in_strain() {
        let mut last = f64::INFINITY;
        for k in 0..=100 {
            let c = contrasts(&FineStructureParams::new(0.039, 4.9, 0.1 * k as f64)).unwrap();
            assert!(c.orbit <= last + 1e-12);
            last = c.orbit;
        }
    }

    #[test]
    fn purity_scales_modulation() {
        let p = FineStructureParams::default();
        let ideal = contrasts(&p).unwrap();
        let mixed = contrasts_with(&p, &ContrastOptions { polarization_purity: 0.8, ..Default::default() }).unwrap();
        assert!((mixed.orbit - 0.8 * ideal.orbit).abs() < 1e-10);
        assert!((mixed.spin_orbit - 0.8 * ideal.spin_orbit).abs() < 1e-10);
        assert!(contrasts_with(&p, &ContrastOptions { polarization_purity: 1.2, ..Default::default() }).is_err());
    }

    #[test]
    fn sine_fit_recovers_amplitude() {
        let x: Vec<f64> = (0..36).map(|k| k as f64 * PI / 36.0).collect();
        let y: Vec<f64> = x.iter().map(|t| 0.7 + 0.3 * (2.0 * t + 0.4).sin()).collect();
        let (a, ph, c0) = fixed_period_sine_fit(&x, &y, PI).unwrap();
        assert!((a - 0.3).abs() < 1e-12 && (ph - 0.4).abs() < 1e-12 && (c0 - 0.7).abs() < 1e-12);
    }
}
