//! Contrast extraction from wave-plate sweeps of two line amplitudes.

use serde::{Deserialize, Serialize};

use crate::nv_model::{fixed_period_sine_fit, SweepKind};
use crate::{Error, Result};

/// Amplitudes of the two lower-branch lines versus wave-plate angle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WavePlateSweep {
    pub kind: SweepKind,
    /// Wave-plate angles, rad.
    pub angles: Vec<f64>,
    pub amp_1: Vec<f64>,
    pub amp_2: Vec<f64>,
    /// Total counts of each scan, used to undo slow intensity drifts of
    /// circular sweeps.
    pub scan_totals: Option<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ContrastEstimate {
    pub contrast: f64,
    /// Phase of the fitted sine, rad.
    pub phase: f64,
}

pub const MIN_ANGLES: usize = 6;

/// Circular sweeps: each scan is scaled to the mean scan total, both lines
/// are divided by the mean of their sum, and the sine amplitude of the
/// normalized difference is the orbit contrast. Linear sweeps: the pairwise
/// mean divided by its global mean gives the spin-orbit contrast.
pub fn extract_contrasts(sweep: &WavePlateSweep) -> Result<ContrastEstimate> {
    let n = sweep.angles.len();
    if n < MIN_ANGLES {
        return Err(Error::invalid("angles", format!("need at least {MIN_ANGLES} angles, got {n}")));
    }
    if sweep.amp_1.len() != n || sweep.amp_2.len() != n {
        return Err(Error::invalid("amplitudes", "length differs from angle count"));
    }
    if sweep.amp_1.iter().chain(&sweep.amp_2).chain(&sweep.angles).any(|v| !v.is_finite()) {
        return Err(Error::invalid("amplitudes", "non-finite value"));
    }
    let mut a1 = sweep.amp_1.clone();
    let mut a2 = sweep.amp_2.clone();
    let series: Vec<f64> = match sweep.kind {
        SweepKind::Circular => {
            if let Some(tot) = &sweep.scan_totals {
                if tot.len() != n || tot.iter().any(|t| !(*t > 0.0)) {
                    return Err(Error::invalid("scan_totals", "need one positive total per angle"));
                }
                let mean_tot = tot.iter().sum::<f64>() / n as f64;
                for k in 0..n {
                    a1[k] *= mean_tot / tot[k];
                    a2[k] *= mean_tot / tot[k];
                }
            }
            let mean_sum = a1.iter().zip(&a2).map(|(x, y)| x + y).sum::<f64>() / n as f64;
            if !(mean_sum > 0.0) {
                return Err(Error::invalid("amplitudes", "summed amplitude must be positive"));
            }
            a1.iter().zip(&a2).map(|(x, y)| (x - y) / mean_sum).collect()
        }
        SweepKind::Linear => {
            let pair: Vec<f64> = a1.iter().zip(&a2).map(|(x, y)| 0.5 * (x + y)).collect();
            let mean = pair.iter().sum::<f64>() / n as f64;
            if !(mean > 0.0) {
                return Err(Error::invalid("amplitudes", "mean amplitude must be positive"));
            }
            pair.iter().map(|v| v / mean).collect()
        }
    };
    let (contrast, phase, _) = fixed_period_sine_fit(&sweep.angles, &series, sweep.kind.period())?;
    Ok(ContrastEstimate { contrast, phase })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nv_model::{contrasts, polarization_sweep, ContrastOptions, FineStructureParams};

    fn angles(kind: SweepKind, n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64 * kind.period() / n as f64).collect()
    }

    #[test]
    fn constant_amplitudes_give_zero() {
        for kind in [SweepKind::Circular, SweepKind::Linear] {
            let a = angles(kind, 12);
            let s = WavePlateSweep { kind, amp_1: vec![2.0; 12], amp_2: vec![2.0; 12], angles: a, scan_totals: None };
            assert!(extract_contrasts(&s).unwrap().contrast < 1e-12);
        }
    }

    #[test]
    fn pure_sine_amplitude() {
        let kind = SweepKind::Circular;
        let a = angles(kind, 18);
        let w = 2.0 * std::f64::consts::PI / kind.period();
        let amp_1: Vec<f64> = a.iter().map(|t| 1.0 + 0.3 * (w * t + 0.4).sin()).collect();
        let amp_2: Vec<f64> = a.iter().map(|t| 1.0 - 0.3 * (w * t + 0.4).sin()).collect();
        let c =
            extract_contrasts(&WavePlateSweep { kind, angles: a.clone(), amp_1, amp_2, scan_totals: None }).unwrap();
        assert!((c.contrast - 0.3).abs() < 1e-6);
        let kind = SweepKind::Linear;
        let a = angles(kind, 18);
        let w = 2.0 * std::f64::consts::PI / kind.period();
        let amp: Vec<f64> = a.iter().map(|t| 5.0 * (1.0 + 0.3 * (w * t).cos())).collect();
        let c =
            extract_contrasts(&WavePlateSweep { kind, angles: a, amp_1: amp.clone(), amp_2: amp, scan_totals: None })
                .unwrap();
        assert!((c.contrast - 0.3).abs() < 1e-6);
    }

    #[test]
    fn scan_totals_remove_intensity_drift() {
        let kind = SweepKind::Circular;
        let a = angles(kind, 12);
        let w = 2.0 * std::f64::consts::PI / kind.period();
        let drift: Vec<f64> = (0..12).map(|k| 1.0 + 0.05 * k as f64).collect();
        let amp_1 = a.iter().zip(&drift).map(|(t, d)| d * (1.0 + 0.5 * (w * t).sin())).collect();
        let amp_2 = a.iter().zip(&drift).map(|(t, d)| d * (1.0 - 0.5 * (w * t).sin())).collect();
        let s = WavePlateSweep { kind, angles: a, amp_1, amp_2, scan_totals: Some(drift) };
        assert!((extract_contrasts(&s).unwrap().contrast - 0.5).abs() < 1e-9);
    }

    #[test]
    fn simulated_sweep_matches_model_contrasts() {
        let p = FineStructureParams::new(0.040, 4.5, 1.9);
        let truth = contrasts(&p).unwrap();
        let opts = ContrastOptions::default();
        for (kind, want) in [(SweepKind::Circular, truth.orbit), (SweepKind::Linear, truth.spin_orbit)] {
            let sw = polarization_sweep(&p, kind, &opts).unwrap();
            let s = WavePlateSweep { kind, angles: sw.angles, amp_1: sw.amp_down, amp_2: sw.amp_up, scan_totals: None };
            assert!((extract_contrasts(&s).unwrap().contrast - want).abs() < 1e-3);
        }
    }

    #[test]
    fn too_few_angles_rejected() {
        let s = WavePlateSweep {
            kind: SweepKind::Linear,
            angles: vec![0.0; 5],
            amp_1: vec![1.0; 5],
            amp_2: vec![1.0; 5],
            scan_totals: None,
        };
        assert!(extract_contrasts(&s).is_err());
    }
}
