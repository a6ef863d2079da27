//! Fluorescence spectra: synthesis, peak detection and drift alignment.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::nv_model::{Polarization, TransitionTable};
use crate::rate_models::voigt_peak_normalized;
use crate::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub polarization: Option<String>,
    pub power_nw: Option<f64>,
    pub scan_index: Option<usize>,
}

/// Counts on a strictly increasing frequency grid (MHz offsets).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub freq_mhz: Vec<f64>,
    pub counts: Vec<f64>,
    pub meta: SpectrumMeta,
}

impl Spectrum {
    pub fn new(freq_mhz: Vec<f64>, counts: Vec<f64>) -> Result<Self> {
        let s = Self { freq_mhz, counts, meta: SpectrumMeta::default() };
        s.validate()?;
        Ok(s)
    }

    pub fn with_meta(mut self, meta: SpectrumMeta) -> Self {
        self.meta = meta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.freq_mhz.is_empty() {
            return Err(Error::invalid("spectrum", "empty"));
        }
        if self.freq_mhz.len() != self.counts.len() {
            return Err(Error::invalid("spectrum", "grid and counts lengths differ"));
        }
        if self.freq_mhz.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("spectrum", "grid must be strictly increasing"));
        }
        if self.counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
            return Err(Error::invalid("spectrum", "counts must be finite and >= 0"));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.freq_mhz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq_mhz.is_empty()
    }

    /// Mean bin spacing.
    pub fn step(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 1.0;
        }
        (self.freq_mhz[n - 1] - self.freq_mhz[0]) / (n - 1) as f64
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

pub fn uniform_grid(start_mhz: f64, stop_mhz: f64, step_mhz: f64) -> Vec<f64> {
    let n = ((stop_mhz - start_mhz) / step_mhz).round() as usize + 1;
    (0..n).map(|k| start_mhz + k as f64 * step_mhz).collect()
}

/// Line shape used when synthesizing spectra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineShape {
    /// Lorentzian FWHM, MHz.
    pub f_l: f64,
    /// Gaussian FWHM, MHz.
    pub f_g: f64,
    /// Peak counts of a line with unit polarization amplitude.
    pub peak_counts: f64,
    pub background: f64,
}

impl Default for LineShape {
    fn default() -> Self {
        Self { f_l: 7.6, f_g: 25.1, peak_counts: 1000.0, background: 5.0 }
    }
}

/// Noise-free four-line spectrum of a transition table under one
/// polarization.
pub fn synthesize_spectrum(
    table: &TransitionTable,
    pol: &Polarization,
    grid: &[f64],
    shape: &LineShape,
) -> Result<Spectrum> {
    let counts = grid
        .iter()
        .map(|&f| {
            shape.background
                + table
                    .entries
                    .iter()
                    .map(|t| {
                        shape.peak_counts
                            * t.amplitude(pol)
                            * voigt_peak_normalized(f - t.frequency_offset.mhz(), shape.f_l, shape.f_g)
                    })
                    .sum::<f64>()
        })
        .collect();
    Spectrum::new(grid.to_vec(), counts)
}

/// Replaces every bin by a Poisson draw with the bin value as mean.
pub fn add_poisson_noise<R: Rng + ?Sized>(spec: &mut Spectrum, rng: &mut R) {
    for c in spec.counts.iter_mut() {
        *c = if *c > 0.0 { Poisson::new(*c).map(|d| d.sample(rng)).unwrap_or(*c) } else { 0.0 };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub position_mhz: f64,
    pub index: usize,
    /// Height of the smoothed spectrum at the peak.
    pub height: f64,
    pub prominence: f64,
}

/// Width (in bins) of the Gaussian smoothing kernel used for detection.
pub const SMOOTHING_SIGMA_BINS: f64 = 2.0;

pub(crate) fn smooth(y: &[f64], sigma_bins: f64) -> Vec<f64> {
    let half = (4.0 * sigma_bins).ceil() as isize;
    let kernel: Vec<f64> = (-half..=half).map(|k| (-0.5 * (k as f64 / sigma_bins).powi(2)).exp()).collect();
    let n = y.len() as isize;
    (0..n)
        .map(|i| {
            let (mut acc, mut wsum) = (0.0, 0.0);
            for (j, w) in (-half..=half).zip(&kernel) {
                let k = i + j;
                if (0..n).contains(&k) {
                    acc += w * y[k as usize];
                    wsum += w;
                }
            }
            acc / wsum
        })
        .collect()
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median absolute deviation from the median.
pub fn median_absolute_deviation(y: &[f64]) -> f64 {
    let mut v = y.to_vec();
    let m = median(&mut v);
    let mut d: Vec<f64> = y.iter().map(|x| (x - m).abs()).collect();
    median(&mut d)
}

/// Local maxima of the Gaussian-smoothed spectrum whose topographic
/// prominence exceeds three median absolute deviations of the raw counts,
/// refined to sub-bin position by a parabola through the three top bins.
pub fn detect_peaks(spec: &Spectrum) -> Result<Vec<Peak>> {
    spec.validate()?;
    let y = smooth(&spec.counts, SMOOTHING_SIGMA_BINS);
    // Round-off ripples of the smoother never count as peaks.
    let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let floor = (3.0 * median_absolute_deviation(&spec.counts)).max(1e-9 * scale);
    let n = y.len();
    let mut peaks = Vec::new();
    for i in 1..n.saturating_sub(1) {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        let h = y[i];
        let mut left_min = h;
        let mut j = i;
        while j > 0 {
            j -= 1;
            if y[j] > h {
                break;
            }
            left_min = left_min.min(y[j]);
        }
        let mut right_min = h;
        let mut j = i;
        while j + 1 < n {
            j += 1;
            if y[j] > h {
                break;
            }
            right_min = right_min.min(y[j]);
        }
        let prominence = h - left_min.max(right_min);
        if prominence <= floor {
            continue;
        }
        let curv = y[i - 1] - 2.0 * y[i] + y[i + 1];
        let shift = if curv < 0.0 { (0.5 * (y[i - 1] - y[i + 1]) / curv).clamp(-0.5, 0.5) } else { 0.0 };
        let f = &spec.freq_mhz;
        let position = if shift >= 0.0 { f[i] + shift * (f[i + 1] - f[i]) } else { f[i] + shift * (f[i] - f[i - 1]) };
        peaks.push(Peak { position_mhz: position, index: i, height: h, prominence });
    }
    Ok(peaks)
}

/// Peak positions sorted by frequency; empty when nothing clears the
/// prominence floor.
pub fn find_peaks(spec: &Spectrum) -> Result<Vec<f64>> {
    Ok(detect_peaks(spec)?.into_iter().map(|p| p.position_mhz).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct AlignedSum {
    pub spectrum: Spectrum,
    /// Applied shift per input scan (MHz, a whole number of bins); `None`
    /// for excluded scans.
    pub shifts_mhz: Vec<Option<f64>>,
    /// Indices of scans without a detectable peak.
    pub excluded: Vec<usize>,
}

/// Shifts every scan so that the mean of its peak positions lands on the
/// mean over all scans, then sums bin-wise on the grid of the first
/// retained scan. Counts shifted off the grid are dropped.
pub fn align_and_sum(scans: &[Spectrum]) -> Result<AlignedSum> {
    if scans.is_empty() {
        return Err(Error::invalid("scans", "need at least one scan"));
    }
    let step = scans[0].step();
    for s in scans {
        s.validate()?;
        if ((s.step() - step) / step).abs() > 1e-6 {
            return Err(Error::invalid("scans", "grid spacings differ"));
        }
    }
    let mut means = Vec::with_capacity(scans.len());
    let mut excluded = Vec::new();
    for (k, s) in scans.iter().enumerate() {
        let peaks = find_peaks(s)?;
        if peaks.is_empty() {
            excluded.push(k);
            means.push(None);
        } else {
            means.push(Some(peaks.iter().sum::<f64>() / peaks.len() as f64));
        }
    }
    let kept: Vec<usize> = (0..scans.len()).filter(|k| means[*k].is_some()).collect();
    let Some(&first) = kept.first() else {
        return Err(Error::invalid("scans", "no scan has a detectable peak"));
    };
    let target = kept.iter().map(|&k| means[k].unwrap()).sum::<f64>() / kept.len() as f64;
    let grid = scans[first].freq_mhz.clone();
    let f0 = grid[0];
    let mut sum = vec![0.0; grid.len()];
    let mut shifts_mhz = vec![None; scans.len()];
    for &k in &kept {
        let bins = ((target - means[k].unwrap()) / step).round();
        shifts_mhz[k] = Some(bins * step);
        for (f, c) in scans[k].freq_mhz.iter().zip(&scans[k].counts) {
            let idx = ((f - f0) / step + bins).round();
            if idx >= 0.0 && (idx as usize) < grid.len() {
                sum[idx as usize] += c;
            }
        }
    }
    let meta = SpectrumMeta { scan_index: None, ..scans[first].meta.clone() };
    Ok(AlignedSum { spectrum: Spectrum::new(grid, sum)?.with_meta(meta), shifts_mhz, excluded })
}
