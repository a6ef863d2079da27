//! Threshold readout: Poisson error rates and fidelities from histograms.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpinCall {
    /// At or above threshold: the driven (↓) state.
    Bright,
    Dark,
}

pub fn threshold_classify(counts: u64, threshold: u64) -> SpinCall {
    if counts >= threshold {
        SpinCall::Bright
    } else {
        SpinCall::Dark
    }
}

/// `P(X < k)` for `X ~ Poisson(μ)`, by direct summation of the pmf.
pub fn poisson_cdf_below(mu: f64, k: u64) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if mu == 0.0 {
        return 1.0;
    }
    let mut term = (-mu).exp();
    let mut acc = term;
    for j in 1..k {
        term *= mu / j as f64;
        acc += term;
    }
    acc.min(1.0)
}

/// `P(X ≥ k)`, summed as an upper tail so that small probabilities keep
/// their relative precision.
pub fn poisson_tail_at_or_above(mu: f64, k: u64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if mu == 0.0 {
        return 0.0;
    }
    if mu > k as f64 {
        return 1.0 - poisson_cdf_below(mu, k);
    }
    // log pmf at k, then sum the decreasing tail.
    let ln_fact: f64 = (1..=k).map(|j| (j as f64).ln()).sum();
    let mut term = (-mu + k as f64 * mu.ln() - ln_fact).exp();
    let mut acc = 0.0;
    let mut j = k;
    while term > acc * 1e-17 && j < k + 10_000 {
        acc += term;
        j += 1;
        term *= mu / j as f64;
    }
    acc
}

/// `(P(dark call | bright), P(bright call | dark))` for Poisson count
/// means and a `counts ≥ threshold` bright rule.
pub fn poisson_error_rates(mu_bright: f64, mu_dark: f64, threshold: u64) -> Result<(f64, f64)> {
    if !(mu_bright >= 0.0 && mu_dark >= 0.0 && mu_bright.is_finite() && mu_dark.is_finite()) {
        return Err(Error::invalid("mu", "means must be finite and >= 0"));
    }
    Ok((poisson_cdf_below(mu_bright, threshold), poisson_tail_at_or_above(mu_dark, threshold)))
}

/// Occurrences per photon count, with the number of shots discarded
/// beforehand (NV⁻ detected).
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountHistogram {
    /// `occurrences[k]` shots recorded `k` photons.
    pub occurrences: Vec<u64>,
    pub total_shots: u64,
    pub discarded: u64,
}

impl CountHistogram {
    pub fn from_counts(counts: &[u64], discarded: u64) -> Self {
        let max = counts.iter().copied().max().unwrap_or(0) as usize;
        let mut occurrences = vec![0; if counts.is_empty() { 0 } else { max + 1 }];
        for &c in counts {
            occurrences[c as usize] += 1;
        }
        Self { occurrences, total_shots: counts.len() as u64 + discarded, discarded }
    }

    pub fn validate(&self) -> Result<()> {
        let sum: u64 = self.occurrences.iter().sum();
        if sum + self.discarded != self.total_shots {
            return Err(Error::invalid(
                "histogram",
                format!("occurrences ({sum}) + discarded ({}) != total ({})", self.discarded, self.total_shots),
            ));
        }
        Ok(())
    }

    pub fn retained(&self) -> u64 {
        self.total_shots - self.discarded
    }

    pub fn at_or_above(&self, threshold: u64) -> u64 {
        self.occurrences.iter().skip(threshold as usize).sum()
    }

    /// Fraction of retained shots called bright.
    pub fn bright_fraction(&self, threshold: u64) -> f64 {
        self.at_or_above(threshold) as f64 / self.retained().max(1) as f64
    }

    pub fn mean(&self) -> f64 {
        let n: u64 = self.occurrences.iter().sum();
        self.occurrences.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / n.max(1) as f64
    }

    /// Fraction of the recorded (not only retained) shots that were
    /// discarded.
    pub fn discarded_fraction(&self) -> f64 {
        self.discarded as f64 / self.total_shots.max(1) as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

/// Conditional readout probabilities, `f_a_given_b` = P(call a | prepared b).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReadoutFidelity {
    pub f_ro: Estimate,
    pub f_down_given_down: Estimate,
    pub f_up_given_down: Estimate,
    pub f_up_given_up: Estimate,
    pub f_down_given_up: Estimate,
    /// Bright fraction of the mixed-state run.
    pub f_down_mixed: Estimate,
}

/// F↓|↓ is the bright fraction after heralding ↓. The mixed run obeys
/// F↓ = ½(F↓|↑ + F↓|↓), which yields F↓|↑ and hence F↑|↑. Uncertainties
/// are binomial and propagated linearly, using that
/// F_RO = F↓|↓ − F↓ + ½.
pub fn readout_fidelity(down: &CountHistogram, mixed: &CountHistogram, threshold: u64) -> Result<ReadoutFidelity> {
    down.validate()?;
    mixed.validate()?;
    if down.retained() == 0 || mixed.retained() == 0 {
        return Err(Error::invalid("histogram", "no retained shots"));
    }
    let binom = |f: f64, n: u64| (f * (1.0 - f) / n as f64).sqrt();
    let f_dd = down.bright_fraction(threshold);
    let s_dd = binom(f_dd, down.retained());
    let f_dm = mixed.bright_fraction(threshold);
    let s_dm = binom(f_dm, mixed.retained());
    let raw_du = 2.0 * f_dm - f_dd;
    if !(0.0..=1.0).contains(&raw_du) {
        log::warn!("mixed-state relation gives F(down|up) = {raw_du:.4}; clamped to [0, 1]");
    }
    let f_du = raw_du.clamp(0.0, 1.0);
    let s_du = (4.0 * s_dm * s_dm + s_dd * s_dd).sqrt();
    let f_uu = 1.0 - f_du;
    let f_ro = 0.5 * (f_dd + f_uu);
    let s_ro = (s_dd * s_dd + s_dm * s_dm).sqrt();
    Ok(ReadoutFidelity {
        f_ro: Estimate { value: f_ro, sigma: s_ro },
        f_down_given_down: Estimate { value: f_dd, sigma: s_dd },
        f_up_given_down: Estimate { value: 1.0 - f_dd, sigma: s_dd },
        f_up_given_up: Estimate { value: f_uu, sigma: s_du },
        f_down_given_up: Estimate { value: f_du, sigma: s_du },
        f_down_mixed: Estimate { value: f_dm, sigma: s_dm },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn threshold_is_inclusive() {
        assert_eq!(threshold_classify(5, 5), SpinCall::Bright);
        assert_eq!(threshold_classify(4, 5), SpinCall::Dark);
        assert_eq!(threshold_classify(0, 5), SpinCall::Dark);
    }

    #[test]
    fn poisson_tails_match_direct_sums() {
        let (a, b) = poisson_error_rates(25.2, 0.171, 5).unwrap();
        let direct_a: f64 =
            (0..5).map(|k| (-25.2f64).exp() * 25.2f64.powi(k) / (1..=k).product::<i32>().max(1) as f64).sum();
        assert!((a - direct_a).abs() < 1e-12 * direct_a);
        assert!((a - 2.2e-7).abs() < 0.1e-7, "{a}");
        let direct_b = 1.0
            - (0..5)
                .map(|k| (-0.171f64).exp() * 0.171f64.powi(k) / (1..=k).product::<i32>().max(1) as f64)
                .sum::<f64>();
        assert!((b - direct_b).abs() < 1e-6 * direct_b);
        assert!((b - 1.1e-6).abs() < 0.1e-6, "{b}");
        let (a0, b0) = poisson_error_rates(25.2, 0.171, 0).unwrap();
        assert_eq!((a0, b0), (0.0, 1.0));
    }

    #[test]
    fn reported_fidelities() {
        // 2948 retained shots, 98.4 % bright; mixed run 49.8 % dark.
        let mut down = CountHistogram { occurrences: vec![0; 40], total_shots: 3000, discarded: 52 };
        down.occurrences[2] = 47;
        down.occurrences[25] = 2901;
        let mut mixed = CountHistogram { occurrences: vec![0; 40], total_shots: 3000, discarded: 0 };
        mixed.occurrences[0] = 1494;
        mixed.occurrences[25] = 1506;
        let f = readout_fidelity(&down, &mixed, 5).unwrap();
        assert!((f.f_down_given_down.value - 0.984).abs() < 1e-3);
        assert!((f.f_up_given_up.value - 0.98).abs() < 0.005);
        assert!((f.f_up_given_up.sigma - 0.018).abs() < 0.003);
        assert!((f.f_ro.value - 0.982).abs() < 0.002);
        assert!((f.f_ro.sigma - 0.009).abs() < 0.001);
    }

    #[test]
    fn limiting_histograms() {
        let bright = CountHistogram { occurrences: vec![0, 0, 0, 0, 0, 0, 100], total_shots: 100, discarded: 0 };
        let mixed = CountHistogram { occurrences: vec![50, 0, 0, 0, 0, 0, 50], total_shots: 100, discarded: 0 };
        assert!((readout_fidelity(&bright, &mixed, 5).unwrap().f_ro.value - 1.0).abs() < 1e-12);
        assert!((readout_fidelity(&mixed, &mixed, 5).unwrap().f_ro.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn histogram_bookkeeping() {
        let h = CountHistogram::from_counts(&[0, 3, 3, 7], 2);
        h.validate().unwrap();
        assert_eq!(h.total_shots, 6);
        assert_eq!(h.at_or_above(3), 3);
        let bad = CountHistogram { occurrences: vec![1], total_shots: 3, discarded: 0 };
        assert!(bad.validate().is_err());
    }
}
