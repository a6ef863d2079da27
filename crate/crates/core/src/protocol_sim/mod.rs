//! Seeded Monte-Carlo simulation of the charge-resonance (CR) check and of
//! the spin experiments built on it.
//!
//! The emitter is either NV⁻ (a single placeholder level) or NV⁰ with spin
//! ↓ or ↑. Yellow light on the ↓ line scatters photons, recharges to NV⁻ and
//! pumps the spin to ↑; red light reads NV⁻ out and occasionally ionises it
//! to NV⁰ with a random spin; green light resets the charge state. All
//! randomness flows from one seed; shot `k` uses a stream derived from
//! `(seed, k)`, so results do not depend on thread count.

mod emitter;
mod experiments;

pub use emitter::{run_cr_protocol, Emitter, ProtocolEvent, ProtocolStats, Step, StepKind};
pub use experiments::{
    simulate_charge_cycling_experiment, simulate_spin_pumping_experiment, simulate_ssro, simulate_t1_sweep,
    PopulationCurves, SsroHistograms, StrobeConfig, T1Point,
};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::rate_models::ThreeLevelRates;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Charge {
    NvMinus,
    NvZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SpinState {
    Down,
    Up,
}

impl SpinState {
    pub fn flipped(self) -> Self {
        match self {
            SpinState::Down => SpinState::Up,
            SpinState::Up => SpinState::Down,
        }
    }

    pub(crate) fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            SpinState::Down
        } else {
            SpinState::Up
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolState {
    pub charge: Charge,
    /// Meaningful only in NV⁰.
    pub spin: Option<SpinState>,
    /// Offset of the optical lines from the lasers, MHz.
    pub spectral_offset_mhz: f64,
    /// Elapsed time, s.
    pub clock_s: f64,
}

impl ProtocolState {
    pub fn nv_minus() -> Self {
        Self { charge: Charge::NvMinus, spin: None, spectral_offset_mhz: 0.0, clock_s: 0.0 }
    }

    pub fn nv_zero(spin: SpinState) -> Self {
        Self { charge: Charge::NvZero, spin: Some(spin), spectral_offset_mhz: 0.0, clock_s: 0.0 }
    }

    pub fn is_bright_nv0(&self) -> bool {
        self.charge == Charge::NvZero && self.spin == Some(SpinState::Down)
    }
}

/// Power, duration and count threshold of one protocol step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepConfig {
    pub power_nw: f64,
    pub duration_s: f64,
    pub threshold: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProtocolConfig {
    /// Green charge reset.
    pub reset: StepConfig,
    /// Red RO + SP check of NV⁻; passes at `counts ≥ threshold`, a zero count
    /// sends the sequence back to reset.
    pub check_nv_minus: StepConfig,
    /// Red ionisation pulse.
    pub ionise: StepConfig,
    pub ionise_probability: f64,
    /// Yellow check of NV⁰; passes (heralds ↓) at `counts > threshold`.
    pub check_nv0: StepConfig,
    /// Red check after the experiment; the shot is discarded as NV⁻ at
    /// `counts ≥ after_threshold`.
    pub after_threshold: u64,
    /// Readout call: bright (↓) at `counts ≥ readout_threshold`.
    pub readout_threshold: u64,
    /// Wait between herald and the post-experiment NV⁻ check, s.
    pub post_herald_delay_s: f64,
    /// Probability that a green reset leaves NV⁻.
    pub green_nv_minus_probability: f64,
    /// Mean NV⁰ ↓ counts in one NV⁰ check window on resonance.
    pub nv0_bright_counts: f64,
    /// Mean counts from NV⁰ ↑ or NV⁻ in one NV⁰ check window.
    pub nv0_dark_counts: f64,
    /// Mean NV⁻ counts in one NV⁻ check window on resonance.
    pub nv_minus_counts: f64,
    /// Mean NV⁰ counts in one NV⁻ check window.
    pub red_background_counts: f64,
    /// Yellow ↓ → NV⁻ recharge rate per nW, 1/(s·nW).
    pub recharge_per_nw: f64,
    /// Yellow ↓ → ↑ pumping rate per nW, 1/(s·nW).
    pub spin_pump_per_nw: f64,
    /// Spin T₁: the ↓/↑ population difference relaxes as e^{−t/τ}.
    pub tau_spin_s: f64,
    /// Lorentzian and Gaussian FWHM of the optical lines, MHz; set the
    /// count reduction for a spectral offset.
    pub line_f_l_mhz: f64,
    pub line_f_g_mhz: f64,
    /// Standard deviation of the spectral random-walk step applied at each
    /// reset and ionisation pulse, MHz. Zero disables diffusion.
    pub spectral_diffusion_step_mhz: f64,
    pub spectral_diffusion_limit_mhz: f64,
    /// Safety cap on protocol steps spent on a single herald.
    pub max_steps_per_herald: u64,
    /// Record at most this many events in the protocol log.
    pub event_log_limit: usize,
    pub seed: u64,
    /// Scenario-1 rates at `reference_power_nw`; `r` and `p` scale linearly
    /// with power.
    pub pumping_rates: ThreeLevelRates,
    pub reference_power_nw: f64,
    /// Initial ↓ and ↑ populations after the CR check.
    pub c1: f64,
    pub c2: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            reset: StepConfig { power_nw: 12_000.0, duration_s: 300e-6, threshold: 0 },
            check_nv_minus: StepConfig { power_nw: 4.0, duration_s: 70e-6, threshold: 10 },
            ionise: StepConfig { power_nw: 15.0, duration_s: 1e-3, threshold: 0 },
            ionise_probability: 0.02,
            check_nv0: StepConfig { power_nw: 25.0, duration_s: 250e-6, threshold: 25 },
            after_threshold: 3,
            readout_threshold: 5,
            post_herald_delay_s: 1e-4,
            green_nv_minus_probability: 0.7,
            nv0_bright_counts: 25.2,
            nv0_dark_counts: 0.171,
            nv_minus_counts: 20.0,
            red_background_counts: 0.05,
            recharge_per_nw: 9.3,
            spin_pump_per_nw: 1.0 / (0.090 * 5.0),
            tau_spin_s: 1.51,
            line_f_l_mhz: 7.6,
            line_f_g_mhz: 25.1,
            spectral_diffusion_step_mhz: 0.0,
            spectral_diffusion_limit_mhz: 200.0,
            max_steps_per_herald: 10_000_000,
            event_log_limit: 0,
            seed: 20240501,
            pumping_rates: ThreeLevelRates::spin_pumping_fit(),
            reference_power_nw: 5.0,
            c1: 0.960,
            c2: 0.012,
        }
    }
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("reset", &self.reset),
            ("check_nv_minus", &self.check_nv_minus),
            ("ionise", &self.ionise),
            ("check_nv0", &self.check_nv0),
        ] {
            if !(s.duration_s > 0.0 && s.duration_s.is_finite()) {
                return Err(Error::invalid("duration_s", format!("{name}: must be finite and > 0")));
            }
            if !(s.power_nw >= 0.0) {
                return Err(Error::invalid("power_nw", format!("{name}: must be >= 0")));
            }
        }
        let probs = [
            ("ionise_probability", self.ionise_probability),
            ("green_nv_minus_probability", self.green_nv_minus_probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(name, "must lie in [0, 1]"));
            }
        }
        let rates = [
            ("nv0_bright_counts", self.nv0_bright_counts),
            ("nv0_dark_counts", self.nv0_dark_counts),
            ("nv_minus_counts", self.nv_minus_counts),
            ("red_background_counts", self.red_background_counts),
            ("recharge_per_nw", self.recharge_per_nw),
            ("spin_pump_per_nw", self.spin_pump_per_nw),
            ("post_herald_delay_s", self.post_herald_delay_s),
            ("spectral_diffusion_step_mhz", self.spectral_diffusion_step_mhz),
            ("spectral_diffusion_limit_mhz", self.spectral_diffusion_limit_mhz),
            ("line_f_l_mhz", self.line_f_l_mhz),
            ("line_f_g_mhz", self.line_f_g_mhz),
        ];
        for (name, v) in rates {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(name, "must be finite and >= 0"));
            }
        }
        if !(self.tau_spin_s > 0.0) {
            return Err(Error::invalid("tau_spin_s", "must be > 0"));
        }
        if !(self.reference_power_nw > 0.0) {
            return Err(Error::invalid("reference_power_nw", "must be > 0"));
        }
        self.pumping_rates.validate()?;
        crate::rate_models::RatePopulations::initial(self.c1, self.c2)?;
        Ok(())
    }

    /// Scenario-1 rates at yellow power `p_nw`.
    pub fn rates_at(&self, p_nw: f64) -> ThreeLevelRates {
        let k = p_nw / self.reference_power_nw;
        ThreeLevelRates { r: self.pumping_rates.r * k, p: self.pumping_rates.p * k, ..self.pumping_rates }
    }
}

/// Poisson-distributed photon count for a mean rate over a duration.
pub fn sample_photon_count<R: Rng + ?Sized>(rate_per_s: f64, duration_s: f64, rng: &mut R) -> u64 {
    poisson(rate_per_s * duration_s, rng)
}

pub(crate) fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 0;
    }
    Poisson::new(mean).map(|d| d.sample(rng) as u64).unwrap_or(0)
}

/// Independent stream for shot `k`.
pub(crate) fn shot_rng(seed: u64, k: u64) -> ChaCha8Rng {
    let mut rng = <ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn photon_counts_are_poissonian() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(sample_photon_count(0.0, 1.0, &mut rng), 0);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_photon_count(25.2 / 250e-6, 250e-6, &mut rng) as f64).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 25.2).abs() < 0.05, "{mean}");
        assert!((var / mean - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn shot_streams_differ() {
        let a: u64 = shot_rng(1, 0).random();
        let b: u64 = shot_rng(1, 1).random();
        assert_ne!(a, b);
        assert_eq!(a, shot_rng(1, 0).random::<u64>());
    }

    #[test]
    fn default_config_is_valid() {
        ProtocolConfig::default().validate().unwrap();
        let bad = ProtocolConfig { ionise_probability: 1.5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
