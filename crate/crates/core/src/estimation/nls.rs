//! Bounded Levenberg-Marquardt least squares with numeric Jacobians.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::rate_models::model;
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct FitSettings {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    /// Parameters held at their initial value. Empty means all free.
    pub fixed: Vec<bool>,
    pub max_iter: usize,
    /// Converged once an accepted step satisfies ‖δ‖ ≤ xtol·(‖p‖ + xtol).
    pub xtol: f64,
    pub names: Vec<String>,
}

impl Default for FitSettings {
    fn default() -> Self {
        Self { lower: None, upper: None, fixed: Vec::new(), max_iter: 200, xtol: 1e-10, names: Vec::new() }
    }
}

impl FitSettings {
    pub fn with_bounds(mut self, lower: Vec<f64>, upper: Vec<f64>) -> Self {
        self.lower = Some(lower);
        self.upper = Some(upper);
        self
    }

    pub fn with_fixed(mut self, fixed: Vec<bool>) -> Self {
        self.fixed = fixed;
        self
    }

    pub fn with_names<S: Into<String>>(mut self, names: impl IntoIterator<Item = S>) -> Self {
        self.names = names.into_iter().map(Into::into).collect();
        self
    }
}

/// Observations `y(x)` with optional 1σ errors.
#[derive(Clone, Debug, Default)]
pub struct FitData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub sigma: Option<Vec<f64>>,
}

impl FitData {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Self {
        Self { x, y, sigma: None }
    }

    pub fn with_sigma(mut self, sigma: Vec<f64>) -> Self {
        self.sigma = Some(sigma);
        self
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.x.len() != self.y.len() {
            return Err(Error::invalid("data", "x and y lengths differ"));
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::invalid("data", "non-finite value"));
        }
        if let Some(s) = &self.sigma {
            if s.len() != self.x.len() {
                return Err(Error::invalid("sigma", "length differs from data"));
            }
            if s.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
                return Err(Error::invalid("sigma", "must be finite and > 0"));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FitResult {
    pub names: Vec<String>,
    pub params: Vec<f64>,
    /// 1σ errors; NaN when the fit did not converge or the curvature matrix
    /// is singular. Fixed parameters report 0.
    pub uncertainties: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Sum of squared weighted residuals.
    pub chi2: f64,
    pub residual_norm: f64,
    pub dof: usize,
    pub converged: bool,
    pub iterations: usize,
    /// Rank of the curvature matrix over the free parameters.
    pub rank: usize,
}

impl FitResult {
    pub fn reduced_chi2(&self) -> f64 {
        self.chi2 / self.dof.max(1) as f64
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.params[k])
    }

    pub fn sigma(&self, name: &str) -> Option<f64> {
        self.names.iter().position(|n| n == name).map(|k| self.uncertainties[k])
    }
}

/// Minimizes ‖r(p)‖² for a residual function writing `n_res` already
/// weighted residuals. `scale_covariance` multiplies the covariance by the
/// reduced χ² (use when the weights are not absolute errors).
pub fn least_squares<F>(
    mut residuals: F,
    n_res: usize,
    init: &[f64],
    settings: &FitSettings,
    scale_covariance: bool,
) -> Result<FitResult>
where
    F: FnMut(&[f64], &mut [f64]),
{
    let n = init.len();
    let fixed = if settings.fixed.is_empty() { vec![false; n] } else { settings.fixed.clone() };
    let lower = settings.lower.clone().unwrap_or_else(|| vec![f64::NEG_INFINITY; n]);
    let upper = settings.upper.clone().unwrap_or_else(|| vec![f64::INFINITY; n]);
    if fixed.len() != n || lower.len() != n || upper.len() != n {
        return Err(Error::invalid("settings", "bounds/fixed length differs from parameter count"));
    }
    if init.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("init", "non-finite initial parameter"));
    }
    if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
        return Err(Error::invalid("bounds", "lower > upper"));
    }
    let free: Vec<usize> = (0..n).filter(|&k| !fixed[k]).collect();
    let m = free.len();
    if n_res < m {
        return Err(Error::Underdetermined { rank: n_res, required: m });
    }
    let names =
        if settings.names.len() == n { settings.names.clone() } else { (0..n).map(|k| format!("p{k}")).collect() };

    let clamp = |p: &mut [f64]| {
        for k in 0..n {
            p[k] = p[k].clamp(lower[k], upper[k]);
        }
    };
    let mut p = init.to_vec();
    clamp(&mut p);

    let mut r = vec![0.0; n_res];
    let mut eval = |p: &[f64], out: &mut [f64]| -> f64 {
        residuals(p, out);
        out.iter().map(|v| v * v).sum::<f64>()
    };
    let mut cost = eval(&p, &mut r);
    if !cost.is_finite() {
        return Err(Error::invalid("init", "residuals are not finite at the initial point"));
    }

    let mut work = vec![0.0; n_res];
    let mut jac = DMatrix::<f64>::zeros(n_res, m);
    let mut jacobian =
        |p: &[f64], r: &[f64], jac: &mut DMatrix<f64>, eval: &mut dyn FnMut(&[f64], &mut [f64]) -> f64| {
            let mut q = p.to_vec();
            for (c, &k) in free.iter().enumerate() {
                let h = 1e-6 * p[k].abs().max(1e-6);
                let up_ok = p[k] + h <= upper[k];
                let dn_ok = p[k] - h >= lower[k];
                if up_ok && dn_ok {
                    q[k] = p[k] + h;
                    eval(&q, &mut work);
                    let plus = work.clone();
                    q[k] = p[k] - h;
                    eval(&q, &mut work);
                    for i in 0..n_res {
                        jac[(i, c)] = (plus[i] - work[i]) / (2.0 * h);
                    }
                } else {
                    let hs = if up_ok { h } else { -h };
                    q[k] = p[k] + hs;
                    eval(&q, &mut work);
                    for i in 0..n_res {
                        jac[(i, c)] = (work[i] - r[i]) / hs;
                    }
                }
                q[k] = p[k];
            }
        };

    let mut mu = -1.0;
    let mut nu = 2.0;
    let mut converged = false;
    let mut iterations = 0;
    let mut r_new = vec![0.0; n_res];
    if m == 0 || cost == 0.0 {
        converged = true;
    }
    while !converged && iterations < settings.max_iter {
        iterations += 1;
        jacobian(&p, &r, &mut jac, &mut eval);
        let rv = DVector::from_column_slice(&r);
        let g = jac.transpose() * &rv;
        let a = jac.transpose() * &jac;
        let diag: Vec<f64> = (0..m).map(|c| a[(c, c)].max(1e-300)).collect();
        if mu < 0.0 {
            mu = 1e-3 * diag.iter().cloned().fold(0.0, f64::max);
        }
        if g.amax() == 0.0 {
            converged = true;
            break;
        }
        loop {
            let mut damped = a.clone();
            for c in 0..m {
                damped[(c, c)] += mu * diag[c];
            }
            let Some(chol) = damped.cholesky() else {
                mu *= nu;
                nu *= 2.0;
                if !mu.is_finite() {
                    break;
                }
                continue;
            };
            let delta = chol.solve(&(-&g));
            let mut trial = p.clone();
            for (c, &k) in free.iter().enumerate() {
                trial[k] += delta[c];
            }
            clamp(&mut trial);
            let step: f64 = free.iter().map(|&k| (trial[k] - p[k]).powi(2)).sum::<f64>().sqrt();
            let pnorm: f64 = free.iter().map(|&k| p[k] * p[k]).sum::<f64>().sqrt();
            let small = step <= settings.xtol * (pnorm + settings.xtol);
            let new_cost = eval(&trial, &mut r_new);
            if new_cost.is_finite() && new_cost < cost {
                let predicted: f64 = (0..m).map(|c| delta[c] * (mu * diag[c] * delta[c] - g[c])).sum();
                let rho = (cost - new_cost) / predicted.max(1e-300);
                mu *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                nu = 2.0;
                p = trial;
                std::mem::swap(&mut r, &mut r_new);
                cost = new_cost;
                if small || cost == 0.0 {
                    converged = true;
                }
                break;
            }
            if small {
                // No representable improvement left along the damped step.
                converged = true;
                break;
            }
            mu *= nu;
            nu *= 2.0;
            if !mu.is_finite() {
                break;
            }
        }
        if !mu.is_finite() {
            break;
        }
    }

    // Curvature at the optimum, over parameters not pinned at a bound.
    jacobian(&p, &r, &mut jac, &mut eval);
    let a = jac.transpose() * &jac;
    let scale: Vec<f64> = (0..m).map(|c| a[(c, c)].sqrt()).collect();
    let mut corr = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if scale[i] > 0.0 && scale[j] > 0.0 {
                corr[(i, j)] = a[(i, j)] / (scale[i] * scale[j]);
            }
        }
    }
    let eig = corr.clone().symmetric_eigen();
    let rank = eig.eigenvalues.iter().filter(|&&v| v > 1e-10).count();
    let singular = rank < m || scale.contains(&0.0);
    let dof = n_res.saturating_sub(m);
    let factor = if scale_covariance { cost / dof.max(1) as f64 } else { 1.0 };
    let mut covariance = vec![vec![0.0; n]; n];
    let mut uncertainties = vec![0.0; n];
    if converged && !singular {
        let mut inv = DMatrix::<f64>::zeros(m, m);
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            inv += v * v.transpose() / lam;
        }
        for (ci, &ki) in free.iter().enumerate() {
            for (cj, &kj) in free.iter().enumerate() {
                covariance[ki][kj] = factor * inv[(ci, cj)] / (scale[ci] * scale[cj]);
            }
            uncertainties[ki] = covariance[ki][ki].max(0.0).sqrt();
        }
    } else {
        for &k in &free {
            uncertainties[k] = f64::NAN;
        }
    }

    Ok(FitResult {
        names,
        params: p,
        uncertainties,
        covariance,
        chi2: cost,
        residual_norm: cost.sqrt(),
        dof,
        converged: converged && !singular,
        iterations,
        rank,
    })
}

/// Weighted least-squares fit of `model(x, p)` to data. With σ supplied the
/// covariance is absolute; otherwise it is scaled by the reduced χ².
pub fn nls_fit<F>(model: F, data: &FitData, init: &[f64], settings: &FitSettings) -> Result<FitResult>
where
    F: Fn(f64, &[f64]) -> f64,
{
    data.validate()?;
    let n_free = if settings.fixed.is_empty() { init.len() } else { settings.fixed.iter().filter(|f| !**f).count() };
    if data.len() < n_free {
        return Err(Error::Underdetermined { rank: data.len(), required: n_free });
    }
    let weights: Vec<f64> = match &data.sigma {
        Some(s) => s.iter().map(|v| 1.0 / v).collect(),
        None => vec![1.0; data.len()],
    };
    let res = |p: &[f64], out: &mut [f64]| {
        for i in 0..data.x.len() {
            out[i] = (data.y[i] - model(data.x[i], p)) * weights[i];
        }
    };
    least_squares(res, data.len(), init, settings, data.sigma.is_none())
}

/// Fits a registered model curve by name.
pub fn fit_named(name: &str, data: &FitData, init: &[f64], settings: &FitSettings) -> Result<FitResult> {
    let spec = model(name)?;
    if init.len() != spec.params.len() {
        return Err(Error::invalid(
            "init",
            format!("{} takes {} parameters, got {}", name, spec.params.len(), init.len()),
        ));
    }
    let mut s = settings.clone();
    if s.names.len() != init.len() {
        s.names = spec.params.iter().map(|n| n.to_string()).collect();
    }
    nls_fit(spec.eval, data, init, &s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rate_models::saturation_model;
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    #[test]
    fn exact_data_recovers_parameters() {
        let f = |x: f64, p: &[f64]| p[0] * (-x / p[1]).exp() + p[2];
        let x: Vec<f64> = (0..40).map(|k| k as f64 * 0.25).collect();
        let truth = [3.0, 2.2, 0.4];
        let y = x.iter().map(|&v| f(v, &truth)).collect();
        let fit = nls_fit(f, &FitData::new(x, y), &[1.0, 1.0, 0.0], &FitSettings::default()).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.params.iter().zip(truth) {
            assert!((a - b).abs() < 1e-8 * b.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn proportional_model_matches_closed_form() {
        let x = vec![0.5, 1.0, 1.7, 2.9, 4.0, 5.5];
        let y = vec![1.1, 1.9, 3.6, 5.7, 8.3, 10.8];
        let closed = x.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() / x.iter().map(|a| a * a).sum::<f64>();
        let fit =
            nls_fit(|x, p| p[0] * x, &FitData::new(x.clone(), y.clone()), &[1.0], &FitSettings::default()).unwrap();
        assert!((fit.params[0] - closed).abs() < 1e-10);
        let resid: f64 = x.iter().zip(&y).map(|(a, b)| (b - closed * a).powi(2)).sum();
        let s2 = resid / (x.len() - 1) as f64;
        let se = (s2 / x.iter().map(|a| a * a).sum::<f64>()).sqrt();
        assert!((fit.uncertainties[0] - se).abs() < 1e-6 * se);
    }

    #[test]
    fn saturation_round_trip_within_three_sigma() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let p: Vec<f64> = (1..=30).map(|k| k as f64 * 0.5).collect();
        let truth: Vec<f64> = p.iter().map(|&v| saturation_model(v, 105.0, 2.5)).collect();
        let sigma: Vec<f64> = truth.iter().map(|v| 0.01 * v).collect();
        let y =
            truth.iter().zip(&sigma).map(|(t, s)| t + s * Normal::new(0.0, 1.0).unwrap().sample(&mut rng)).collect();
        let data = FitData::new(p, y).with_sigma(sigma);
        let fit = fit_named("saturation", &data, &[80.0, 1.0], &FitSettings::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.params[0] - 105.0).abs() < 3.0 * fit.uncertainties[0]);
        assert!((fit.params[1] - 2.5).abs() < 3.0 * fit.uncertainties[1]);
    }

    #[test]
    fn fixed_and_bounded_parameters() {
        let f = |x: f64, p: &[f64]| p[0] * x + p[1];
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        let s = FitSettings::default().with_fixed(vec![false, true]);
        let fit = nls_fit(f, &FitData::new(x.clone(), y.clone()), &[0.0, 0.0], &s).unwrap();
        assert_eq!(fit.params[1], 0.0);
        assert_eq!(fit.uncertainties[1], 0.0);
        let s = FitSettings::default().with_bounds(vec![0.0, -10.0], vec![1.5, 10.0]);
        let fit = nls_fit(f, &FitData::new(x, y), &[1.0, 0.0], &s).unwrap();
        assert!(fit.params[0] <= 1.5);
    }

    #[test]
    fn too_few_points_rejected() {
        let r =
            nls_fit(|x, p| p[0] + p[1] * x, &FitData::new(vec![1.0], vec![2.0]), &[0.0, 0.0], &FitSettings::default());
        assert!(matches!(r, Err(Error::Underdetermined { .. })));
    }

    #[test]
    fn degenerate_model_is_flagged() {
        let f = |x: f64, p: &[f64]| (p[0] + p[1]) * x;
        let x: Vec<f64> = (0..10).map(|k| k as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v).collect();
        let fit = nls_fit(f, &FitData::new(x, y), &[1.0, 1.0], &FitSettings::default()).unwrap();
        assert!(!fit.converged);
        assert!(fit.uncertainties.iter().all(|u| u.is_nan()));
    }

    #[test]
    fn unknown_model_name() {
        assert!(matches!(
            fit_named("nope", &FitData::default(), &[], &FitSettings::default()),
            Err(Error::Unknown { .. })
        ));
    }
}
