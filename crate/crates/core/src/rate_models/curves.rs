//! Closed-form model curves. Units follow the quantity: rates in MHz with
//! temperatures in K and energies in meV, powers in nW, widths in MHz.

use crate::dynamics::{self, LindbladConfig};
use crate::units::K_B_MEV_PER_K;
use crate::{Error, Result};

/// Pump-probe recovery `a + A(1 − e^{−(t − t0)/T})`.
pub fn recovery_model(t_delay: f64, a: f64, amp: f64, t0: f64, tau: f64) -> f64 {
    a + amp * -(-(t_delay - t0) / tau).exp_m1()
}

/// Linear plus Orbach: `A·T + B·e^{−Δ/k_B T}`.
pub fn temperature_model_orbach(t_kelvin: f64, a: f64, b: f64, delta_mev: f64) -> f64 {
    a * t_kelvin + b * (-delta_mev / (K_B_MEV_PER_K * t_kelvin)).exp()
}

/// Linear plus Raman: `A·T + C·Tⁿ`.
pub fn temperature_model_raman(t_kelvin: f64, a: f64, c: f64, n: f64) -> f64 {
    a * t_kelvin + c * t_kelvin.powf(n)
}

/// Saturation `A·P/(P + P_sat)`.
pub fn saturation_model(p: f64, amp: f64, p_sat: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else {
        amp * p / (p + p_sat)
    }
}

/// Optical Rabi frequency `Ω = α√P`, MHz.
pub fn rabi_frequency(p_nw: f64, alpha: f64) -> f64 {
    alpha * p_nw.max(0.0).sqrt()
}

/// Empirical Voigt FWHM from Lorentzian and Gaussian FWHMs,
/// `0.5446 f_L + √(0.2166 f_L² + f_G²)`.
pub fn voigt_fwhm(f_l: f64, f_g: f64) -> f64 {
    0.5446 * f_l + (0.2166 * f_l * f_l + f_g * f_g).sqrt()
}

/// Power-broadened Voigt width with Gaussian part `√(a²P + b²)`.
pub fn power_broadened_fwhm(p_nw: f64, a: f64, b: f64, f_l: f64) -> f64 {
    voigt_fwhm(f_l, (a * a * p_nw.max(0.0) + b * b).sqrt())
}

/// Recharging growth `1 − A e^{−t/τ_fast} − (1 − A) e^{−t/τ_slow}`.
pub fn double_exp_recharge(t: f64, amp: f64, tau_fast: f64, tau_slow: f64) -> f64 {
    let fast = -(-t / tau_fast).exp_m1();
    let slow = if amp == 1.0 { 0.0 } else { -(-t / tau_slow).exp_m1() };
    amp * fast + (1.0 - amp) * slow
}

/// Scattered photons before the limiting process: excited population over
/// its lifetime, times `tau_limit`.
pub fn cyclicity_from_population(excited_population: f64, tau_exc_ns: f64, tau_limit_s: f64) -> f64 {
    excited_population / (tau_exc_ns * 1e-9) * tau_limit_s
}

/// Cyclicity at drive power `p_nw` using the steady-state excited
/// population of the ↓ cycling transition from the Lindblad engine.
pub fn cyclicity(tau_limit_s: f64, cfg: &LindbladConfig, p_nw: f64) -> Result<f64> {
    if !(tau_limit_s >= 0.0) {
        return Err(Error::invalid("tau_limit", "must be >= 0"));
    }
    let pop = dynamics::cycling_excited_population(cfg, p_nw)?;
    Ok(cyclicity_from_population(pop, cfg.tau_exc_ns, tau_limit_s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovery_limits() {
        assert_eq!(recovery_model(50.0, 0.4, 0.5, 50.0, 430.0), 0.4);
        assert!((recovery_model(1e6, 0.4, 0.5, 0.0, 430.0) - 0.9).abs() < 1e-15);
    }

    #[test]
    fn temperature_models() {
        let f = |t| temperature_model_orbach(t, 0.53, 0.0, 12.0);
        assert!((f(8.0) - 2.0 * f(4.0)).abs() < 1e-15);
        let f = temperature_model_orbach(4.65, 0.53, 1e7, 12.0);
        // Orbach term at 4.65 K: 1e7·exp(−12/(0.08617·4.65)) ≈ 0.0009 MHz
        let orbach = 1e7 * (-12.0f64 / (0.08617 * 4.65)).exp();
        assert!(orbach < 1e-2 * 0.53 * 4.65);
        assert!((1.0 / f - 0.405).abs() < 0.01, "1/f = {} µs", 1.0 / f);
        let mut last = 0.0;
        for k in 1..50 {
            let v = temperature_model_orbach(k as f64, 0.0, 1e7, 12.0);
            assert!(v > last);
            last = v;
        }
        let r = |t| temperature_model_raman(t, 0.0, 1e-9, 13.0);
        assert!((r(10.0) / r(5.0) - 8192.0).abs() < 1e-9);
        assert_eq!(temperature_model_raman(3.0, 0.5, 0.0, 13.0), 1.5);
    }

    #[test]
    fn saturation_and_rabi() {
        assert_eq!(saturation_model(0.0, 105.0, 2.5), 0.0);
        assert!((saturation_model(2.5, 105.0, 2.5) - 52.5).abs() < 1e-12);
        assert!((saturation_model(5.0, 105.0, 2.5) - 70.0).abs() < 1e-12);
        assert!((rabi_frequency(4.0, 5.3) - 10.6).abs() < 1e-12);
        assert!((rabi_frequency(16.0, 5.3) - 2.0 * rabi_frequency(4.0, 5.3)).abs() < 1e-12);
        assert_eq!(rabi_frequency(0.0, 5.3), 0.0);
    }

    #[test]
    fn voigt_width_identities() {
        assert!((voigt_fwhm(7.6, 0.0) / 7.6 - 1.0100).abs() < 1e-4);
        assert_eq!(voigt_fwhm(0.0, 25.1), 25.1);
        assert_eq!(power_broadened_fwhm(0.0, 18.6, 25.1, 7.6), voigt_fwhm(7.6, 25.1));
        let mut last = 0.0;
        for k in 0..100 {
            let w = power_broadened_fwhm(k as f64, 18.6, 25.1, 7.6);
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn recharge_growth() {
        assert_eq!(double_exp_recharge(0.0, 0.6, 0.01, 0.2), 0.0);
        assert!((double_exp_recharge(1e3, 0.6, 0.01, 0.2) - 1.0).abs() < 1e-15);
        let single = -(-0.03f64 / 0.01).exp_m1();
        assert!((double_exp_recharge(0.03, 1.0, 0.01, f64::NAN) - single).abs() < 1e-15);
    }

    #[test]
    fn cyclicity_scaling() {
        assert_eq!(cyclicity_from_population(0.05, 22.0, 0.0), 0.0);
        let a = cyclicity_from_population(0.05, 22.0, 0.027);
        let b = cyclicity_from_population(0.05, 22.0, 0.090);
        assert!((b / a - 90.0 / 27.0).abs() < 1e-12);
    }
}
