//! Lindblad master equation for the NV⁰ ground doublets and ²A₂ excited
//! spin states under pulsed resonant driving of the lower spin-orbit
//! branch, with an optional NV⁻ sink level.
//!
//! Level indices (the first four match [`crate::nv_model`]):
//!
//! | index | state   |
//! |-------|---------|
//! | 0     | `+,↓`   |
//! | 1     | `−,↑`   |
//! | 2     | `−,↓`   |
//! | 3     | `+,↑`   |
//! | 4     | `0,↓` (excited) |
//! | 5     | `0,↑` (excited) |
//! | 6     | NV⁻ (only with a recharge configuration) |
//!
//! Time is in ns. Hamiltonian entries are angular frequencies in rad/ns,
//! built from MHz inputs as `2π × 10⁻³ × f`.

mod experiments;
mod integrator;
mod pulse;
mod steady;
mod system;
mod trajectory;

pub use experiments::{
    calibrate_exc_spin_mixing, calibrate_recharge_rate, circular_opposite_line_coupling, simulate_pump_probe,
    simulate_pump_probe_sweep, simulate_pump_trace, simulate_rabi_trace, simulate_recharging, PumpProbeOptions,
    PumpProbePoint, RechargeCurve, RechargeDrive, POST_PULSE_NS, PUMP_TRACE_STEP_NS,
};
pub use integrator::IntegratorOptions;
pub use pulse::PulseShape;
pub use steady::{cycling_excited_population, steady_state};
pub use system::{
    build_collapse_operators, build_drive_hamiltonian, initial_mixed_state, CollapseOp, DensityMatrix, Mat7,
};
pub use trajectory::{ensemble_average, evolve, sample_detunings, TrajectoryResult};

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

pub const PLUS_DOWN: usize = 0;
pub const MINUS_UP: usize = 1;
pub const MINUS_DOWN: usize = 2;
pub const PLUS_UP: usize = 3;
pub const EXCITED_DOWN: usize = 4;
pub const EXCITED_UP: usize = 5;
pub const NV_MINUS: usize = 6;

pub const LEVEL_LABELS: [&str; 7] = ["+,down", "-,up", "-,down", "+,up", "0,down", "0,up", "nv_minus"];

/// Recharging out of the excited states, proportional to drive power.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RechargeConfig {
    /// Rate out of each excited level per nW of drive, 1/s/nW.
    pub rate_per_nw: f64,
    /// Factor applied to the recharge, spin-pumping and spin-relaxation
    /// rates, with the time axis mapped back. Values well above 1 bring the
    /// recharge close to the optical timescales and overweight the turn-on
    /// transient; the settled drive is propagated exactly, so 1 is cheap.
    pub rescale: f64,
}

impl Default for RechargeConfig {
    fn default() -> Self {
        Self { rate_per_nw: 0.0, rescale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LindbladConfig {
    pub tau_exc_ns: f64,
    pub tau_orbit_ns: f64,
    pub tau_spin_s: f64,
    /// Excited-state spin mixing time, s. Infinite disables the channel.
    pub tau_exc_spin_s: f64,
    /// Detuning of the `−,↑ ↔ 0,↑` line from the driven `+,↓ ↔ 0,↓` line, MHz.
    pub delta_opposite_mhz: f64,
    /// Relative coupling of the opposite-spin line; 1 for linear light.
    pub opposite_line_coupling: f64,
    /// α in Ω = α√P, MHz/√nW.
    pub rabi_slope: f64,
    /// FWHM of the Gaussian detuning jitter, MHz.
    pub detuning_fwhm_mhz: f64,
    pub n_samples: usize,
    pub seed: u64,
    pub collection_efficiency: f64,
    pub pulse: PulseShape,
    pub recharge: Option<RechargeConfig>,
    pub integrator: IntegratorOptions,
}

impl Default for LindbladConfig {
    fn default() -> Self {
        Self::preset_4k65()
    }
}

impl LindbladConfig {
    /// 4.65 K: τ_orbit = 430 ns.
    pub fn preset_4k65() -> Self {
        Self {
            tau_exc_ns: 22.0,
            tau_orbit_ns: 430.0,
            tau_spin_s: 1.51,
            tau_exc_spin_s: f64::INFINITY,
            delta_opposite_mhz: 160.0,
            opposite_line_coupling: 1.0,
            rabi_slope: 5.3,
            detuning_fwhm_mhz: 20.0,
            n_samples: 100,
            seed: 20_240_501,
            collection_efficiency: 0.03,
            pulse: PulseShape::default(),
            recharge: None,
            integrator: IntegratorOptions::default(),
        }
    }

    /// 10.1 K: τ_orbit = 50 ns.
    pub fn preset_10k1() -> Self {
        Self { tau_orbit_ns: 50.0, ..Self::preset_4k65() }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tau_exc_ns", self.tau_exc_ns),
            ("tau_orbit_ns", self.tau_orbit_ns),
            ("tau_spin_s", self.tau_spin_s),
            ("tau_exc_spin_s", self.tau_exc_spin_s),
        ] {
            if !(v > 0.0) {
                return Err(Error::invalid(name, format!("timescale must be > 0, got {v}")));
            }
        }
        if !(self.detuning_fwhm_mhz >= 0.0) {
            return Err(Error::invalid("detuning_fwhm_mhz", "must be >= 0"));
        }
        if !(self.rabi_slope >= 0.0) || !self.delta_opposite_mhz.is_finite() || !self.opposite_line_coupling.is_finite()
        {
            return Err(Error::invalid("drive", "rabi_slope must be >= 0 and detunings finite"));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.collection_efficiency) {
            return Err(Error::invalid("collection_efficiency", "must lie in [0, 1]"));
        }
        if let Some(r) = &self.recharge {
            if !(r.rate_per_nw >= 0.0) || !(r.rescale > 0.0) {
                return Err(Error::invalid("recharge", "rate must be >= 0 and rescale > 0"));
            }
        }
        self.pulse.validate()
    }

    /// Number of levels: 7 with a recharge configuration, else 6.
    pub fn dim(&self) -> usize {
        if self.recharge.is_some() {
            7
        } else {
            6
        }
    }

    /// Gaussian σ of the detuning jitter, MHz.
    pub fn detuning_sigma_mhz(&self) -> f64 {
        self.detuning_fwhm_mhz / crate::units::FWHM_PER_SIGMA
    }
}
