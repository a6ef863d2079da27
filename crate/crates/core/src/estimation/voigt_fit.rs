//! Sum-of-Voigt fits with a shared Lorentzian width.

use serde::Serialize;

use super::nls::{least_squares, FitResult, FitSettings};
use super::spectrum::{detect_peaks, smooth, Spectrum, SMOOTHING_SIGMA_BINS};
use crate::rate_models::{voigt_fwhm, voigt_peak_normalized};
use crate::{Error, Result};

/// Transform-limited Lorentzian FWHM, MHz.
pub const TRANSFORM_LIMIT_MHZ: f64 = 7.6;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct VoigtPeak {
    pub center_mhz: f64,
    pub center_sigma: f64,
    /// Peak height above background, counts.
    pub amplitude: f64,
    pub amplitude_sigma: f64,
    pub gaussian_fwhm_mhz: f64,
    pub gaussian_fwhm_sigma: f64,
    /// FWHM of the combined profile.
    pub fwhm_mhz: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MultipletFit {
    pub lorentzian_fwhm_mhz: f64,
    pub background: f64,
    /// Sorted by centre frequency.
    pub peaks: Vec<VoigtPeak>,
    pub fit: FitResult,
}

/// Parameter layout: `[background, (centre, amplitude, f_G) × n]`.
pub fn multiplet_model(x: f64, f_l: f64, p: &[f64]) -> f64 {
    let mut y = p[0];
    for k in p[1..].chunks_exact(3) {
        y += k[1] * voigt_peak_normalized(x - k[0], f_l, k[2]);
    }
    y
}

fn half_width_estimate(freq: &[f64], y: &[f64], idx: usize, base: f64) -> f64 {
    let half = base + 0.5 * (y[idx] - base);
    let mut l = idx;
    while l > 0 && y[l] > half {
        l -= 1;
    }
    let mut r = idx;
    while r + 1 < y.len() && y[r] > half {
        r += 1;
    }
    (freq[r] - freq[l]).max(freq.get(1).map_or(1.0, |f1| f1 - freq[0]))
}

/// Fits `n_peaks` Voigt lines sharing the Lorentzian FWHM `f_l` plus a
/// constant background. Initial centres come from [`detect_peaks`] (most
/// prominent first); missing lines are seeded beside the strongest one.
pub fn fit_voigt_multiplet(spec: &Spectrum, n_peaks: usize, f_l: f64) -> Result<MultipletFit> {
    spec.validate()?;
    if n_peaks == 0 {
        return Err(Error::invalid("n_peaks", "must be >= 1"));
    }
    if !(f_l >= 0.0 && f_l.is_finite()) {
        return Err(Error::invalid("f_l", "must be finite and >= 0"));
    }
    let f = &spec.freq_mhz;
    let y = &spec.counts;
    let smooth_y = smooth(y, SMOOTHING_SIGMA_BINS);
    let mut sorted = y.clone();
    sorted.sort_by(f64::total_cmp);
    let base = sorted[sorted.len() / 10];

    let mut found = detect_peaks(spec)?;
    found.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
    found.truncate(n_peaks);
    let mut seeds: Vec<(f64, f64, f64)> = found
        .iter()
        .map(|p| {
            let w = half_width_estimate(f, &smooth_y, p.index, base);
            (p.position_mhz, (p.height - base).max(0.0), (w - 0.5 * f_l).max(1.0))
        })
        .collect();
    if seeds.is_empty() {
        let imax = (0..y.len()).max_by(|&a, &b| smooth_y[a].total_cmp(&smooth_y[b])).unwrap_or(0);
        let w = half_width_estimate(f, &smooth_y, imax, base);
        seeds.push((f[imax], (smooth_y[imax] - base).max(0.0), (w - 0.5 * f_l).max(1.0)));
    }
    let strongest = seeds[0];
    let mut k = 1.0;
    while seeds.len() < n_peaks {
        let sign = if seeds.len().is_multiple_of(2) { -1.0 } else { 1.0 };
        seeds.push((strongest.0 + sign * k * 0.5 * strongest.2, 0.5 * strongest.1, strongest.2));
        if sign < 0.0 {
            k += 1.0;
        }
    }
    seeds.sort_by(|a, b| a.0.total_cmp(&b.0));

    let (lo, hi) = (f[0], f[f.len() - 1]);
    let span = hi - lo;
    let mut init = vec![base];
    let mut lower = vec![f64::NEG_INFINITY];
    let mut upper = vec![f64::INFINITY];
    let mut names = vec!["background".to_string()];
    for (k, s) in seeds.iter().enumerate() {
        init.extend([s.0, s.1, s.2]);
        lower.extend([lo, 0.0, 0.0]);
        upper.extend([hi, f64::INFINITY, 10.0 * span.max(1.0)]);
        names.extend([format!("center_{k}"), format!("amplitude_{k}"), format!("f_g_{k}")]);
    }
    let settings = FitSettings::default().with_bounds(lower, upper).with_names(names);
    let residuals = |p: &[f64], out: &mut [f64]| {
        for i in 0..f.len() {
            out[i] = y[i] - multiplet_model(f[i], f_l, p);
        }
    };
    let fit = least_squares(residuals, f.len(), &init, &settings, true)?;
    let mut peaks: Vec<VoigtPeak> = fit.params[1..]
        .chunks_exact(3)
        .zip(fit.uncertainties[1..].chunks_exact(3))
        .map(|(p, s)| VoigtPeak {
            center_mhz: p[0],
            center_sigma: s[0],
            amplitude: p[1],
            amplitude_sigma: s[1],
            gaussian_fwhm_mhz: p[2],
            gaussian_fwhm_sigma: s[2],
            fwhm_mhz: voigt_fwhm(f_l, p[2]),
        })
        .collect();
    peaks.sort_by(|a, b| a.center_mhz.total_cmp(&b.center_mhz));
    Ok(MultipletFit { lorentzian_fwhm_mhz: f_l, background: fit.params[0], peaks, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::spectrum::uniform_grid;

    fn synth(lines: &[(f64, f64, f64)], f_l: f64, grid: &[f64]) -> Spectrum {
        let counts = grid
            .iter()
            .map(|&x| 4.0 + lines.iter().map(|&(c, a, g)| a * voigt_peak_normalized(x - c, f_l, g)).sum::<f64>())
            .collect();
        Spectrum::new(grid.to_vec(), counts).unwrap()
    }

    #[test]
    fn pair_centres_recovered() {
        let grid = uniform_grid(-250.0, 250.0, 1.0);
        let s = synth(&[(-103.0, 800.0, 25.1), (103.0, 500.0, 25.1)], 7.6, &grid);
        let fit = fit_voigt_multiplet(&s, 2, 7.6).unwrap();
        assert!(fit.fit.converged);
        assert!((fit.peaks[0].center_mhz + 103.0).abs() < 2.0);
        assert!((fit.peaks[1].center_mhz - 103.0).abs() < 2.0);
        assert!((fit.peaks[0].gaussian_fwhm_mhz - 25.1).abs() < 1e-4);
    }

    #[test]
    fn lorentzian_limit() {
        let grid = uniform_grid(-150.0, 150.0, 1.0);
        let s = synth(&[(12.0, 300.0, 0.0)], 7.6, &grid);
        let fit = fit_voigt_multiplet(&s, 1, 7.6).unwrap();
        assert!(fit.peaks[0].gaussian_fwhm_mhz < 1e-2, "{}", fit.peaks[0].gaussian_fwhm_mhz);
        assert!((fit.peaks[0].center_mhz - 12.0).abs() < 1e-6);
        assert!((fit.peaks[0].fwhm_mhz - crate::rate_models::voigt_fwhm(7.6, 0.0)).abs() < 1e-3);
    }

    #[test]
    fn coincident_lines_not_converged() {
        let grid = uniform_grid(-150.0, 150.0, 1.0);
        let s = synth(&[(0.0, 300.0, 25.0)], 7.6, &grid);
        let fit = fit_voigt_multiplet(&s, 2, 7.6).unwrap();
        assert!(!fit.fit.converged);
    }
}
