//! Fits of the charge-cycling populations to the analytic three-level
//! solution on the yellow-only time axis.

use super::nls::{least_squares, FitResult, FitSettings};
use crate::rate_models::{solve_charge_cycling_yellow_axis, ThreeLevelRates};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CyclingFitMode {
    /// `r`, `p`, `s`, `c1`, `c2` held at the starting values; only the
    /// ionisation rate is fitted.
    #[default]
    IonisationOnly,
    /// Every rate and both initial populations free.
    Unconstrained,
}

#[derive(Clone, Debug)]
pub struct CyclingFit {
    pub mode: CyclingFitMode,
    pub rates: ThreeLevelRates,
    /// Uncertainties of `r`, `p`, `s`, `i`.
    pub rate_sigmas: [f64; 4],
    pub c1: f64,
    pub c2: f64,
    pub fit: FitResult,
}

/// Fits `(down, up, nv_minus)` sampled at yellow-axis times `t` with equal
/// weights. `start` and `(c1, c2)` seed the fit and supply the held values.
#[allow(clippy::too_many_arguments)]
pub fn fit_charge_cycling(
    t: &[f64],
    down: &[f64],
    up: &[f64],
    nv_minus: &[f64],
    start: &ThreeLevelRates,
    c1: f64,
    c2: f64,
    mode: CyclingFitMode,
) -> Result<CyclingFit> {
    let n = t.len();
    if n < 3 || down.len() != n || up.len() != n || nv_minus.len() != n {
        return Err(Error::invalid("populations", "need three curves of equal length on at least 3 times"));
    }
    start.validate()?;
    let init = [start.r, start.p, start.s, start.i, c1, c2];
    let fixed = match mode {
        CyclingFitMode::IonisationOnly => vec![true, true, true, false, true, true],
        CyclingFitMode::Unconstrained => vec![false; 6],
    };
    let settings = FitSettings::default()
        .with_fixed(fixed)
        .with_bounds(vec![0.0; 6], vec![f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, 1.0, 1.0]);
    let residuals = |p: &[f64], out: &mut [f64]| {
        let rates = ThreeLevelRates { r: p[0], p: p[1], s: p[2], i: p[3] };
        let (c1, c2) = (p[4], p[5].min(1.0 - p[4]));
        for (k, &tk) in t.iter().enumerate() {
            match solve_charge_cycling_yellow_axis(&rates, c1, c2, tk) {
                Ok(m) => {
                    out[3 * k] = m.d - down[k];
                    out[3 * k + 1] = m.u - up[k];
                    out[3 * k + 2] = m.n - nv_minus[k];
                }
                Err(_) => out[3 * k..3 * k + 3].fill(1e3),
            }
        }
    };
    let fit = least_squares(residuals, 3 * n, &init, &settings, true)?;
    let p = &fit.params;
    let u = &fit.uncertainties;
    Ok(CyclingFit {
        mode,
        rates: ThreeLevelRates { r: p[0], p: p[1], s: p[2], i: p[3] },
        rate_sigmas: [u[0], u[1], u[2], u[3]],
        c1: p[4],
        c2: p[5].min(1.0 - p[4]),
        fit,
    })
}
