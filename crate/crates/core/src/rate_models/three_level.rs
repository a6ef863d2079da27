//! Three-level NV⁰(↓), NV⁰(↑), NV⁻ kinetics under resonant yellow driving.
//!
//! Populations are `D` (NV⁰ ↓), `U` (NV⁰ ↑) and `N` (NV⁻). Processes:
//! recharging D → N at `r`, spin pumping D → U at `p`, spin relaxation
//! D ↔ U at `s` each way, and ionisation N → D, U at `i/2` each.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreeLevelRates {
    /// Recharging D → N, 1/s.
    pub r: f64,
    /// Spin pumping D → U, 1/s.
    pub p: f64,
    /// Spin relaxation D ↔ U, 1/s.
    pub s: f64,
    /// Ionisation N → (D, U)/2, 1/s.
    pub i: f64,
}

impl ThreeLevelRates {
    pub fn new(r: f64, p: f64, s: f64, i: f64) -> Result<Self> {
        let rates = Self { r, p, s, i };
        rates.validate()?;
        Ok(rates)
    }

    /// Build from timescales in seconds; `None` (or ∞) disables a process.
    pub fn from_timescales(tau_recharge: f64, tau_pump: f64, tau_spin: f64, tau_ion: Option<f64>) -> Result<Self> {
        let inv = |t: f64| if t.is_infinite() { 0.0 } else { 1.0 / t };
        for (name, t) in [("tau_recharge", tau_recharge), ("tau_pump", tau_pump), ("tau_spin", tau_spin)] {
            if !(t > 0.0) {
                return Err(Error::invalid(name, "must be > 0"));
            }
        }
        let i = match tau_ion {
            Some(t) if !(t > 0.0) => return Err(Error::invalid("tau_ion", "must be > 0")),
            Some(t) => inv(t),
            None => 0.0,
        };
        Self::new(inv(tau_recharge), inv(tau_pump), inv(tau_spin), i)
    }

    /// Fitted yellow-only rates of the spin-pumping experiment at 5 nW.
    pub fn spin_pumping_fit() -> Self {
        Self { r: 1.0 / 0.027, p: 1.0 / 0.090, s: 1.0 / 1.51, i: 0.0 }
    }

    /// Rates of the charge-cycling fit on the yellow-only time axis: the
    /// spin-pumping rates, relaxation doubled, and `1/i = 0.018 s`.
    pub fn charge_cycling_fit() -> Self {
        Self { s: 2.0 / 1.51, i: 1.0 / 0.018, ..Self::spin_pumping_fit() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("p", self.p), ("s", self.s), ("i", self.i)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, format!("rate must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Rates rescaled by `factor` (time axis compressed by the same factor).
    pub fn scaled(&self, factor: f64) -> Self {
        Self { r: self.r * factor, p: self.p * factor, s: self.s * factor, i: self.i * factor }
    }

    /// Generator of `(N, D, U)`: `d/dt x = A x`.
    pub fn generator(&self) -> [[f64; 3]; 3] {
        let Self { r, p, s, i } = *self;
        [[-i, r, 0.0], [0.5 * i, -(r + s + p), s], [0.5 * i, s + p, -s]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePopulations {
    pub n: f64,
    pub d: f64,
    pub u: f64,
}

impl RatePopulations {
    /// Start state with `D = c1`, `U = c2`, remainder in NV⁻.
    pub fn initial(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 >= 0.0 && c2 >= 0.0 && c1 + c2 <= 1.0 + 1e-12) {
            return Err(Error::invalid("c1/c2", format!("need c1, c2 >= 0 and c1 + c2 <= 1, got {c1}, {c2}")));
        }
        Ok(Self { n: (1.0 - c1 - c2).max(0.0), d: c1, u: c2 })
    }

    pub fn total(&self) -> f64 {
        self.n + self.d + self.u
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.n, self.d, self.u]
    }
}

/// `(e^{at} − e^{bt}) / (a − b)` for real `a ≥ b`, stable as `a → b`.
fn divided_exp(a: f64, b: f64, t: f64) -> f64 {
    let x = (a - b) * t;
    let phi = if x.abs() < 1e-300 { 1.0 } else { -(-x).exp_m1() / x };
    (a * t).exp() * t * phi
}

/// `e^{Mt}` for a real 2×2 matrix, written as `c·I + k·(M − τI)` with
/// `τ = tr M / 2`. Real, complex and coincident eigenvalues share one code
/// path; at coincidence it reduces to the repeated-root form
/// `e^{τt}(I + t(M − τI))`.
pub(crate) fn expm2(m: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let tau = 0.5 * (m[0][0] + m[1][1]);
    let d = 0.5 * (m[0][0] - m[1][1]);
    let g2 = d * d + m[0][1] * m[1][0];
    let (c, k) = if g2 >= 0.0 {
        let g = g2.sqrt();
        let (l1, l2) = (tau + g, tau - g);
        let k = divided_exp(l1, l2, t);
        // ½(e^{λ₁t} + e^{λ₂t}) = e^{λ₂t} + g·k
        ((l2 * t).exp() + g * k, k)
    } else {
        let w = (-g2).sqrt();
        let e = (tau * t).exp();
        let wt = w * t;
        let sinc = if wt.abs() < 1e-8 { 1.0 - wt * wt / 6.0 } else { wt.sin() / wt };
        (e * wt.cos(), e * t * sinc)
    };
    [[c + k * d, k * m[0][1]], [k * m[1][0], c - k * d]]
}

fn apply2(e: [[f64; 2]; 2], x: [f64; 2]) -> [f64; 2] {
    [e[0][0] * x[0] + e[0][1] * x[1], e[1][0] * x[0] + e[1][1] * x[1]]
}

/// Spin-pumping kinetics without ionisation (`i` must be 0).
pub fn solve_spin_pumping(rates: &ThreeLevelRates, c1: f64, c2: f64, t: f64) -> Result<RatePopulations> {
    rates.validate()?;
    if rates.i != 0.0 {
        return Err(Error::invalid("i", "spin-pumping scenario has no ionisation; use solve_charge_cycling"));
    }
    solve_charge_cycling(rates, c1, c2, t)
}

/// Full kinetics including ionisation, reduced to the affine 2×2 system in
/// `(D, U)` with `N = 1 − D − U`.
pub fn solve_charge_cycling(rates: &ThreeLevelRates, c1: f64, c2: f64, t: f64) -> Result<RatePopulations> {
    rates.validate()?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", "time must be finite and >= 0"));
    }
    let x0 = RatePopulations::initial(c1, c2)?;
    let ThreeLevelRates { r, p, s, i } = *rates;
    let h = 0.5 * i;
    let m = [[-(r + s + p + h), s - h], [s + p - h, -(s + h)]];
    let e = expm2(m, t);
    let x = if i == 0.0 {
        apply2(e, [x0.d, x0.u])
    } else {
        let det = r * s + h * (r + 4.0 * s + 2.0 * p);
        if det > 0.0 {
            let (d_inf, u_inf) = (i * s / det, h * (r + 2.0 * s + 2.0 * p) / det);
            let y = apply2(e, [x0.d - d_inf, x0.u - u_inf]);
            [d_inf + y[0], u_inf + y[1]]
        } else {
            // r = s = p = 0: NV⁻ decays at i and feeds D and U equally.
            let gain = 0.5 * x0.n * -(-i * t).exp_m1();
            [x0.d + gain, x0.u + gain]
        }
    };
    let n = if i == 0.0 && r == 0.0 { x0.n } else { 1.0 - x[0] - x[1] };
    Ok(RatePopulations { n, d: x[0], u: x[1] })
}

/// Long-time limit of [`solve_charge_cycling`]. With `i = 0` every
/// population ends in NV⁻ when `r > 0`.
pub fn charge_cycling_steady_state(rates: &ThreeLevelRates) -> Result<RatePopulations> {
    rates.validate()?;
    let ThreeLevelRates { r, p, s, i } = *rates;
    let h = 0.5 * i;
    let det = r * s + h * (r + 4.0 * s + 2.0 * p);
    if !(det > 0.0) {
        return Err(Error::invalid("rates", "steady state is not unique for these rates"));
    }
    Ok(RatePopulations { n: r * s / det, d: i * s / det, u: h * (r + 2.0 * s + 2.0 * p) / det })
}

/// Charge cycling on the yellow-only time axis (half the total sequence
/// time). `yellow_rates` are the rates as fitted on that axis; the solver
/// runs in total time with every rate halved.
pub fn solve_charge_cycling_yellow_axis(
    yellow_rates: &ThreeLevelRates,
    c1: f64,
    c2: f64,
    t_yellow: f64,
) -> Result<RatePopulations> {
    solve_charge_cycling(&yellow_rates.scaled(0.5), c1, c2, 2.0 * t_yellow)
}

/// Fixed-step RK4 integration of the full three-state system, used to
/// cross-check the closed forms. The step keeps `h·ρ(A) ≤ 2e-3`.
pub fn numeric_rate_oracle(
    rates: &ThreeLevelRates,
    init: RatePopulations,
    grid: &[f64],
) -> Result<Vec<RatePopulations>> {
    rates.validate()?;
    if grid.windows(2).any(|w| !(w[1] >= w[0])) || grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::invalid("grid", "must be non-decreasing and start at t >= 0"));
    }
    let a = rates.generator();
    let rho = a.iter().map(|row| row.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
    let rhs = |x: [f64; 3]| {
        let mut y = [0.0; 3];
        for (k, row) in a.iter().enumerate() {
            y[k] = row[0] * x[0] + row[1] * x[1] + row[2] * x[2];
        }
        y
    };
    let axpy = |x: [f64; 3], h: f64, k: [f64; 3]| [x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2]];
    let mut x = init.as_array();
    let mut t = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    for &target in grid {
        let span = target - t;
        if span > 0.0 {
            let n = if rho > 0.0 { (span * rho / 2e-3).ceil().max(1.0) as usize } else { 1 };
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = rhs(x);
                let k2 = rhs(axpy(x, 0.5 * h, k1));
                let k3 = rhs(axpy(x, 0.5 * h, k2));
                let k4 = rhs(axpy(x, h, k3));
                for j in 0..3 {
                    x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
            t = target;
        }
        out.push(RatePopulations { n: x[0], d: x[1], u: x[2] });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &RatePopulations, b: &RatePopulations, tol: f64) -> bool {
        a.as_array().iter().zip(b.as_array()).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn no_rates_is_constant() {
        let z = ThreeLevelRates::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let x = solve_spin_pumping(&z, 0.6, 0.3, 5.0).unwrap();
        assert!(close(&x, &RatePopulations { n: 0.1, d: 0.6, u: 0.3 }, 1e-15));
    }

    #[test]
    fn fitted_up_population_at_600_ms() {
        let x = solve_spin_pumping(&ThreeLevelRates::spin_pumping_fit(), 0.960, 0.012, 0.6).unwrap();
        assert!((0.17..=0.27).contains(&x.u), "U(0.6 s) = {}", x.u);
        assert!((x.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn up_population_rises_then_falls() {
        let rates = ThreeLevelRates::spin_pumping_fit();
        let u: Vec<f64> =
            (0..400).map(|k| solve_spin_pumping(&rates, 0.96, 0.012, 0.01 * k as f64).unwrap().u).collect();
        let kmax = u.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(kmax > 0 && kmax < 399);
    }

    #[test]
    fn ionisation_free_matches_spin_pumping() {
        let rates = ThreeLevelRates::spin_pumping_fit();
        for t in [0.0, 0.01, 0.3, 2.0] {
            let a = solve_spin_pumping(&rates, 0.9, 0.05, t).unwrap();
            let b = solve_charge_cycling(&rates, 0.9, 0.05, t).unwrap();
            assert!(close(&a, &b, 0.0));
        }
    }

    #[test]
    fn charge_cycling_inverts_and_balances() {
        let rates = ThreeLevelRates::charge_cycling_fit();
        let n: Vec<f64> =
            (0..300).map(|k| solve_charge_cycling(&rates, 0.96, 0.012, 0.002 * k as f64).unwrap().n).collect();
        let kmax = n.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(kmax > 0 && n[299] < n[kmax], "N should peak then fall");
        let late = solve_charge_cycling(&rates, 0.96, 0.012, 50.0).unwrap();
        assert!((rates.r * late.d - rates.i * late.n).abs() < 1e-9);
        let ss = charge_cycling_steady_state(&rates).unwrap();
        assert!(close(&late, &ss, 1e-12));
    }

    #[test]
    fn steady_state_is_null_vector() {
        let rates = ThreeLevelRates::new(3.0, 1.5, 0.7, 2.2).unwrap();
        let ss = charge_cycling_steady_state(&rates).unwrap();
        let a = rates.generator();
        for row in a {
            let v = row[0] * ss.n + row[1] * ss.d + row[2] * ss.u;
            assert!(v.abs() < 1e-13);
        }
        assert!((ss.total() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_ionisation_special_case() {
        let rates = ThreeLevelRates::new(0.0, 0.0, 0.0, 4.0).unwrap();
        let x = solve_charge_cycling(&rates, 0.2, 0.2, 0.5).unwrap();
        let n = 0.6 * (-2.0f64).exp();
        assert!(close(&x, &RatePopulations { n, d: 0.2 + 0.5 * (0.6 - n), u: 0.2 + 0.5 * (0.6 - n) }, 1e-15));
    }

    #[test]
    fn yellow_axis_equals_doubled_total_time() {
        let y = ThreeLevelRates::charge_cycling_fit();
        let a = solve_charge_cycling_yellow_axis(&y, 0.96, 0.012, 0.05).unwrap();
        let b = solve_charge_cycling(&y, 0.96, 0.012, 0.05).unwrap();
        assert!(close(&a, &b, 1e-14));
    }

    #[test]
    fn repeated_root_limit() {
        // s = r = 0 leaves D decaying at p with M lower-triangular and a
        // double-free spectrum {−p, 0}; p → 0 approaches a double root.
        for p in [1e-3, 1e-9, 1e-14, 0.0] {
            let rates = ThreeLevelRates::new(0.0, p, 0.0, 0.0).unwrap();
            let x = solve_spin_pumping(&rates, 1.0, 0.0, 2.0).unwrap();
            assert!((x.d - (-2.0 * p).exp()).abs() < 1e-15);
            assert!((x.u + (-2.0 * p).exp_m1()).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ThreeLevelRates::new(-1.0, 0.0, 0.0, 0.0).is_err());
        let r = ThreeLevelRates::spin_pumping_fit();
        assert!(solve_spin_pumping(&r, 0.8, 0.3, 1.0).is_err());
        assert!(solve_spin_pumping(&ThreeLevelRates::charge_cycling_fit(), 0.5, 0.3, 1.0).is_err());
    }

    #[test]
    fn oracle_agrees_on_a_simple_case() {
        let rates = ThreeLevelRates::new(2.0, 1.0, 0.5, 3.0).unwrap();
        let init = RatePopulations::initial(0.7, 0.1).unwrap();
        let grid = [0.0, 0.1, 1.0, 3.0];
        let num = numeric_rate_oracle(&rates, init, &grid).unwrap();
        for (t, x) in grid.iter().zip(&num) {
            let a = solve_charge_cycling(&rates, 0.7, 0.1, *t).unwrap();
            assert!(close(&a, x, 1e-11), "{a:?} vs {x:?}");
            assert!((x.total() - 1.0).abs() < 1e-13);
        }
    }
}
