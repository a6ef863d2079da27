//! Analytic rate models and closed-form curves used to fit every measured
//! dependence: charge/spin kinetics, recovery, temperature laws,
//! saturation, Rabi scaling, line widths, recharging and cyclicity.

mod curves;
mod lineshape;
mod registry;
mod three_level;

pub use curves::{
    cyclicity, cyclicity_from_population, double_exp_recharge, power_broadened_fwhm, rabi_frequency, recovery_model,
    saturation_model, temperature_model_orbach, temperature_model_raman, voigt_fwhm,
};
pub use lineshape::{faddeeva, voigt_peak_normalized, voigt_profile};
pub use registry::{model, models, ModelFn, ModelSpec};
pub use three_level::{
    charge_cycling_steady_state, numeric_rate_oracle, solve_charge_cycling, solve_charge_cycling_yellow_axis,
    solve_spin_pumping, RatePopulations, ThreeLevelRates,
};
