//! Joint fine-structure fit over several NVs with shared `l` and `λ`.

use serde::{Deserialize, Serialize};

use super::nls::{least_squares, FitResult, FitSettings};
use crate::nv_model::{contrasts_with, splittings, ContrastOptions, FineStructureParams};
use crate::units::Frequency;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub value: f64,
    #[serde(default)]
    pub sigma: Option<f64>,
}

impl Measured {
    pub fn new(value: f64, sigma: f64) -> Self {
        Self { value, sigma: Some(sigma) }
    }

    pub fn exact(value: f64) -> Self {
        Self { value, sigma: None }
    }
}

/// Observables of one NV; absent entries are left out of the fit.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NvObservables {
    pub name: String,
    pub orbit_contrast: Option<Measured>,
    pub spin_orbit_contrast: Option<Measured>,
    pub delta_spin_mhz: Option<Measured>,
    pub delta_spin_orbit_mhz: Option<Measured>,
}

impl NvObservables {
    fn entries(&self) -> [Option<Measured>; 4] {
        [self.orbit_contrast, self.spin_orbit_contrast, self.delta_spin_mhz, self.delta_spin_orbit_mhz]
    }

    /// Noise-free observables at the given parameters.
    pub fn predicted(name: &str, p: &FineStructureParams, purity: f64) -> Result<Self> {
        let v = predict_observables(p, purity)?;
        Ok(Self {
            name: name.to_string(),
            orbit_contrast: Some(Measured::exact(v[0])),
            spin_orbit_contrast: Some(Measured::exact(v[1])),
            delta_spin_mhz: Some(Measured::exact(v[2])),
            delta_spin_orbit_mhz: Some(Measured::exact(v[3])),
        })
    }
}

/// `[orbit contrast, spin-orbit contrast, Δ_spin (MHz), Δ_spin-orbit (MHz)]`.
pub fn predict_observables(p: &FineStructureParams, purity: f64) -> Result<[f64; 4]> {
    let c = contrasts_with(p, &ContrastOptions { polarization_purity: purity, ..Default::default() })?;
    let s = splittings(p)?;
    Ok([c.orbit, c.spin_orbit, s.delta_spin.mhz(), s.delta_spin_orbit.mhz()])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMethod {
    /// Strains fitted alongside `l` and `λ`.
    #[serde(rename = "1")]
    FreeStrain,
    /// Strains held at externally supplied values.
    #[serde(rename = "2")]
    FixedStrain,
}

impl FitMethod {
    pub fn from_index(k: u8) -> Result<Self> {
        match k {
            1 => Ok(Self::FreeStrain),
            2 => Ok(Self::FixedStrain),
            _ => Err(Error::invalid("method", "must be 1 or 2")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct JointFitOptions {
    /// Supplies g, B_z and μ_B; its `l`, `λ` and strain are ignored.
    pub base: FineStructureParams,
    pub initial_l: f64,
    pub initial_lambda_ghz: f64,
    /// Method-1 starting strains; a per-NV grid search when absent.
    pub initial_strains_ghz: Option<Vec<f64>>,
    /// Fit a shared polarization purity as a nuisance parameter.
    pub fit_polarization_purity: bool,
    pub polarization_purity: f64,
}

impl Default for JointFitOptions {
    fn default() -> Self {
        Self {
            base: FineStructureParams::default(),
            initial_l: 0.04,
            initial_lambda_ghz: 4.5,
            initial_strains_ghz: None,
            fit_polarization_purity: false,
            polarization_purity: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JointFit {
    pub method: FitMethod,
    pub l: f64,
    pub l_sigma: f64,
    pub lambda_ghz: f64,
    pub lambda_sigma_ghz: f64,
    pub strains_ghz: Vec<f64>,
    /// Zero for fixed strains.
    pub strain_sigmas_ghz: Vec<f64>,
    pub polarization_purity: f64,
    pub fit: FitResult,
}

fn params_at(base: &FineStructureParams, l: f64, lambda_ghz: f64, eps_ghz: f64) -> FineStructureParams {
    FineStructureParams {
        l,
        lambda_so: Frequency::from_ghz(lambda_ghz),
        eps_perp: Frequency::from_ghz(eps_ghz),
        ..*base
    }
}

/// Residual contributions of one NV at the given parameters.
fn nv_residuals(obs: &NvObservables, p: &FineStructureParams, purity: f64, out: &mut Vec<f64>) {
    let pred = predict_observables(p, purity);
    for (k, m) in obs.entries().iter().enumerate() {
        if let Some(m) = m {
            let w = m.sigma.map_or(1.0, |s| 1.0 / s);
            out.push(match &pred {
                Ok(v) => (m.value - v[k]) * w,
                Err(_) => 1e12,
            });
        }
    }
}

const STRAIN_SEED_GRID_GHZ: (f64, f64, usize) = (0.0, 20.0, 201);

fn seed_strain(obs: &NvObservables, base: &FineStructureParams, l: f64, lam: f64, purity: f64) -> f64 {
    let (lo, hi, n) = STRAIN_SEED_GRID_GHZ;
    let mut best = (f64::INFINITY, lo);
    let mut r = Vec::with_capacity(4);
    for k in 0..n {
        let e = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        r.clear();
        nv_residuals(obs, &params_at(base, l, lam, e), purity, &mut r);
        let c: f64 = r.iter().map(|v| v * v).sum();
        if c < best.0 {
            best = (c, e);
        }
    }
    best.1
}

/// Least squares of all observables of all NVs against the fine-structure
/// predictions, sharing `l` and `λ` and carrying one strain per NV.
/// Residuals are weighted by inverse variance where σ is given and by one
/// otherwise; in the latter case the covariance is scaled by the reduced χ².
pub fn joint_finestructure_fit(
    data: &[NvObservables],
    method: FitMethod,
    fixed_strains_ghz: Option<&[f64]>,
    opts: &JointFitOptions,
) -> Result<JointFit> {
    if data.is_empty() {
        return Err(Error::invalid("datasets", "need at least one NV"));
    }
    opts.base.validate()?;
    let n_nv = data.len();
    let strains: Vec<f64> = match (method, fixed_strains_ghz) {
        (FitMethod::FixedStrain, Some(s)) => {
            if s.len() != n_nv {
                return Err(Error::invalid("fixed_strains", "need one strain per NV"));
            }
            s.to_vec()
        }
        (FitMethod::FixedStrain, None) => return Err(Error::MissingConfig("method 2 requires fixed strains")),
        (FitMethod::FreeStrain, _) => match &opts.initial_strains_ghz {
            Some(s) if s.len() == n_nv => s.clone(),
            Some(_) => return Err(Error::invalid("initial_strains", "need one strain per NV")),
            None => data
                .iter()
                .map(|d| seed_strain(d, &opts.base, opts.initial_l, opts.initial_lambda_ghz, opts.polarization_purity))
                .collect(),
        },
    };
    let n_obs: usize = data.iter().map(|d| d.entries().iter().flatten().count()).sum();
    let mut init = vec![opts.initial_l, opts.initial_lambda_ghz];
    init.extend(&strains);
    init.push(opts.polarization_purity);
    let n_par = init.len();
    let mut fixed = vec![false; n_par];
    if method == FitMethod::FixedStrain {
        fixed[2..2 + n_nv].iter_mut().for_each(|f| *f = true);
    }
    fixed[n_par - 1] = !opts.fit_polarization_purity;
    let n_free = fixed.iter().filter(|f| !**f).count();
    if n_obs < n_free {
        return Err(Error::Underdetermined { rank: n_obs, required: n_free });
    }
    let mut lower = vec![-1.0, 1e-3];
    let mut upper = vec![1.0, 100.0];
    lower.extend(std::iter::repeat_n(0.0, n_nv));
    upper.extend(std::iter::repeat_n(200.0, n_nv));
    lower.push(0.0);
    upper.push(1.0);
    let mut names = vec!["l".to_string(), "lambda_GHz".to_string()];
    names.extend(data.iter().enumerate().map(|(k, d)| {
        if d.name.is_empty() {
            format!("eps_{k}_GHz")
        } else {
            format!("eps_{}_GHz", d.name)
        }
    }));
    names.push("polarization_purity".into());
    let settings = FitSettings::default().with_bounds(lower, upper).with_fixed(fixed).with_names(names);
    let all_sigma = data.iter().all(|d| d.entries().iter().flatten().all(|m| m.sigma.is_some()));
    let base = opts.base;
    let mut buf = Vec::with_capacity(n_obs);
    let residuals = |p: &[f64], out: &mut [f64]| {
        buf.clear();
        for (k, d) in data.iter().enumerate() {
            nv_residuals(d, &params_at(&base, p[0], p[1], p[2 + k]), p[n_par - 1], &mut buf);
        }
        out.copy_from_slice(&buf);
    };
    let fit = least_squares(residuals, n_obs, &init, &settings, !all_sigma)?;
    if fit.rank < n_free {
        return Err(Error::Underdetermined { rank: fit.rank, required: n_free });
    }
    Ok(JointFit {
        method,
        l: fit.params[0],
        l_sigma: fit.uncertainties[0],
        lambda_ghz: fit.params[1],
        lambda_sigma_ghz: fit.uncertainties[1],
        strains_ghz: fit.params[2..2 + n_nv].to_vec(),
        strain_sigmas_ghz: fit.uncertainties[2..2 + n_nv].to_vec(),
        polarization_purity: fit.params[n_par - 1],
        fit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ExclusionEntry {
    pub name: String,
    pub observed_mhz: f64,
    pub sigma_mhz: f64,
    pub best_strain_ghz: f64,
    pub best_prediction_mhz: f64,
    /// Smallest |observed − predicted| over the grid, in units of σ.
    pub min_misfit_sigma: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExclusionReport {
    pub l: f64,
    pub lambda_ghz: f64,
    pub threshold_sigma: f64,
    pub entries: Vec<ExclusionEntry>,
    /// True when no NV's Δ_spin is reproduced at any grid strain.
    pub excluded: bool,
}

/// Scans strain over `grid_ghz` at fixed `(l, λ)` and reports, per NV, how
/// close the predicted spin splitting comes to the measured one.
pub fn delta_spin_exclusion(
    data: &[NvObservables],
    l: f64,
    lambda_ghz: f64,
    grid_ghz: &[f64],
    base: &FineStructureParams,
    threshold_sigma: f64,
) -> Result<ExclusionReport> {
    if grid_ghz.is_empty() {
        return Err(Error::invalid("grid", "empty strain grid"));
    }
    let preds: Vec<f64> = grid_ghz
        .iter()
        .map(|&e| splittings(&params_at(base, l, lambda_ghz, e)).map(|s| s.delta_spin.mhz()))
        .collect::<Result<_>>()?;
    let mut entries = Vec::new();
    for d in data {
        let m = d.delta_spin_mhz.ok_or_else(|| Error::invalid("delta_spin", format!("missing for {}", d.name)))?;
        let sigma = m.sigma.ok_or_else(|| Error::invalid("delta_spin", format!("missing σ for {}", d.name)))?;
        let (k, mis) =
            preds.iter().map(|p| ((m.value - p) / sigma).abs()).enumerate().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        entries.push(ExclusionEntry {
            name: d.name.clone(),
            observed_mhz: m.value,
            sigma_mhz: sigma,
            best_strain_ghz: grid_ghz[k],
            best_prediction_mhz: preds[k],
            min_misfit_sigma: mis,
        });
    }
    let excluded = entries.iter().all(|e| e.min_misfit_sigma > threshold_sigma);
    Ok(ExclusionReport { l, lambda_ghz, threshold_sigma, entries, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn synthetic(l: f64, lam: f64, strains: &[f64], rel_sigma: f64) -> Vec<NvObservables> {
        strains
            .iter()
            .enumerate()
            .map(|(k, &e)| {
                let v = predict_observables(&FineStructureParams::new(l, lam, e), 1.0).unwrap();
                let m = |x: f64| Some(Measured::new(x, rel_sigma * x.abs().max(1e-3)));
                NvObservables {
                    name: format!("NV{k}"),
                    orbit_contrast: m(v[0]),
                    spin_orbit_contrast: m(v[1]),
                    delta_spin_mhz: m(v[2]),
                    delta_spin_orbit_mhz: m(v[3]),
                }
            })
            .collect()
    }

    #[test]
    fn method_one_noise_free_round_trip() {
        let data = synthetic(0.040, 4.5, &[1.9, 3.2, 7.2], 0.05);
        let fit = joint_finestructure_fit(&data, FitMethod::FreeStrain, None, &JointFitOptions::default()).unwrap();
        assert!(fit.fit.converged);
        assert!((fit.l - 0.040).abs() < 4e-6, "{}", fit.l);
        assert!((fit.lambda_ghz - 4.5).abs() < 4.5e-4);
        for (a, b) in fit.strains_ghz.iter().zip([1.9, 3.2, 7.2]) {
            assert!((a - b).abs() < 1e-4 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn method_two_fixed_strains() {
        let strains = [1.05, 4.15, 4.35];
        let data = synthetic(0.037, 5.2, &strains, 0.05);
        let fit = joint_finestructure_fit(&data, FitMethod::FixedStrain, Some(&strains), &JointFitOptions::default())
            .unwrap();
        assert!((fit.l - 0.037).abs() < 1e-5);
        assert!((fit.lambda_ghz - 5.2).abs() < 1e-3);
        assert_eq!(fit.strains_ghz, strains.to_vec());
        assert!(fit.strain_sigmas_ghz.iter().all(|s| *s == 0.0));
    }

    #[test]
    fn method_two_requires_strains() {
        let data = synthetic(0.037, 5.2, &[1.0], 0.05);
        assert!(joint_finestructure_fit(&data, FitMethod::FixedStrain, None, &JointFitOptions::default()).is_err());
    }

    #[test]
    fn underdetermined_rejected() {
        let mut data = synthetic(0.04, 4.5, &[2.0], 0.05);
        data[0].orbit_contrast = None;
        data[0].spin_orbit_contrast = None;
        data[0].delta_spin_orbit_mhz = None;
        let r = joint_finestructure_fit(&data, FitMethod::FreeStrain, None, &JointFitOptions::default());
        assert!(matches!(r, Err(Error::Underdetermined { rank: 1, required: 3 })));
    }

    #[test]
    fn literature_parameters_cannot_reach_measured_spin_splitting() {
        let data = synthetic(0.040, 4.5, &[1.9, 3.2, 7.2], 0.05);
        let grid: Vec<f64> = (0..=2000).map(|k| k as f64 * 0.01).collect();
        let rep = delta_spin_exclusion(&data, 0.0186, 2.24, &grid, &FineStructureParams::default(), 1.0).unwrap();
        assert!(rep.excluded, "{:?}", rep.entries);
        let own = delta_spin_exclusion(&data, 0.040, 4.5, &grid, &FineStructureParams::default(), 1.0).unwrap();
        assert!(!own.excluded);
    }
}
