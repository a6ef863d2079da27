//! Voigt line shapes via a rational approximation of the Faddeeva function
//! `w(z) = e^{−z²} erfc(−iz)`.

use num_complex::Complex64;
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::units::FWHM_PER_SIGMA;

/// Expansion order of the rational approximation. 32 terms give better
/// than 1e-6 relative accuracy for the profiles used here.
const ORDER: usize = 32;

struct Weideman {
    scale: f64,
    /// Polynomial coefficients, lowest order first.
    coeffs: [f64; ORDER],
}

fn weideman() -> &'static Weideman {
    static TABLE: OnceLock<Weideman> = OnceLock::new();
    TABLE.get_or_init(|| {
        let m = 2 * ORDER;
        let len = 2 * m;
        let scale = (ORDER as f64 / std::f64::consts::SQRT_2).sqrt();
        // Samples of (L² + t²)e^{−t²} on t = L tan(θ/2), θ = kπ/M, k = −M+1..M−1;
        // k = ±M maps to t = ∞ where the sample vanishes.
        let f = |k: i64| {
            let theta = k as f64 * PI / m as f64;
            let t = scale * (0.5 * theta).tan();
            (-t * t).exp() * (scale * scale + t * t)
        };
        let mut coeffs = [0.0; ORDER];
        for (n, c) in coeffs.iter_mut().enumerate() {
            let n = n + 1;
            let mut acc = 0.0;
            for k in -(m as i64) + 1..m as i64 {
                acc += f(k) * (PI * k as f64 * n as f64 / m as f64).cos();
            }
            *c = acc / len as f64;
        }
        Weideman { scale, coeffs }
    })
}

/// Faddeeva function for `Im z ≥ 0`; reflected for the lower half plane.
pub fn faddeeva(z: Complex64) -> Complex64 {
    if z.im < 0.0 {
        return 2.0 * (-z * z).exp() - faddeeva(-z);
    }
    let w = weideman();
    let i = Complex64::i();
    let l = Complex64::new(w.scale, 0.0);
    let denom = l - i * z;
    let zz = (l + i * z) / denom;
    let mut p = Complex64::new(0.0, 0.0);
    for &c in w.coeffs.iter().rev() {
        p = p * zz + c;
    }
    2.0 * p / (denom * denom) + (1.0 / PI.sqrt()) / denom
}

/// Area-normalized Voigt profile at detuning `x` (MHz) with Lorentzian
/// FWHM `f_l` and Gaussian FWHM `f_g`.
pub fn voigt_profile(x: f64, f_l: f64, f_g: f64) -> f64 {
    let gamma = 0.5 * f_l;
    let sigma = f_g / FWHM_PER_SIGMA;
    if sigma == 0.0 {
        return gamma / (PI * (x * x + gamma * gamma));
    }
    if gamma == 0.0 {
        return (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt());
    }
    let z = Complex64::new(x, gamma) / (sigma * std::f64::consts::SQRT_2);
    faddeeva(z).re / (sigma * (2.0 * PI).sqrt())
}

/// Voigt profile scaled to unit height at line centre.
pub fn voigt_peak_normalized(x: f64, f_l: f64, f_g: f64) -> f64 {
    voigt_profile(x, f_l, f_g) / voigt_profile(0.0, f_l, f_g)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct convolution of a Lorentzian with a Gaussian, by substitution
    /// `u = σ·s` and composite Simpson over ±12σ.
    fn convolution_oracle(x: f64, f_l: f64, f_g: f64) -> f64 {
        let gamma = 0.5 * f_l;
        let sigma = f_g / FWHM_PER_SIGMA;
        let n = 40_000;
        let (a, b) = (-12.0, 12.0);
        let h = (b - a) / n as f64;
        let g = |s: f64| {
            let u = sigma * s;
            (-0.5 * s * s).exp() / (2.0 * PI).sqrt() * gamma / (PI * ((x - u).powi(2) + gamma * gamma))
        };
        let mut acc = g(a) + g(b);
        for k in 1..n {
            acc += g(a + k as f64 * h) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        acc * h / 3.0
    }

    #[test]
    fn faddeeva_known_values() {
        // w(i) = e·erfc(1)
        let w = faddeeva(Complex64::new(0.0, 1.0));
        assert!((w.re - 0.427_583_576_155_807).abs() < 1e-9 && w.im.abs() < 1e-12);
        // w(0) = 1
        let w0 = faddeeva(Complex64::new(0.0, 0.0));
        assert!((w0.re - 1.0).abs() < 1e-9);
        // far field w(z) ≈ i/(√π z)
        let z = Complex64::new(50.0, 1.0);
        let asym = Complex64::i() / (PI.sqrt() * z);
        assert!(((faddeeva(z) - asym) / asym).norm() < 1e-3);
    }

    #[test]
    fn voigt_matches_convolution() {
        for (f_l, f_g) in [(7.6, 25.1), (7.6, 5.0), (20.0, 20.0), (7.6, 60.0), (1.0, 30.0)] {
            for x in [0.0, 3.0, 10.0, 25.0, 60.0, 150.0] {
                let v = voigt_profile(x, f_l, f_g);
                let o = convolution_oracle(x, f_l, f_g);
                assert!(((v - o) / o).abs() < 1e-6, "f_l={f_l} f_g={f_g} x={x}: {v} vs {o}");
            }
        }
    }

    #[test]
    fn limits_are_pure_profiles() {
        let l = voigt_profile(3.0, 10.0, 0.0);
        assert!((l - 5.0 / (PI * 34.0)).abs() < 1e-15);
        let nearly = voigt_profile(3.0, 10.0, 1e-6);
        assert!(((nearly - l) / l).abs() < 1e-6);
        assert!((voigt_peak_normalized(0.0, 7.6, 25.1) - 1.0).abs() < 1e-15);
    }
}
