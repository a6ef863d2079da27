use crate::{Error, Result};
use nalgebra::Vector2;
use num_complex::Complex64;
use std::f64::consts::FRAC_1_SQRT_2;

/// Jones vector in the circular basis `(ε_L, ε_R)`.
///
/// Convention: L = (1, 0), R = (0, 1), H = (1, 1)/√2, V = (1, −1)/√2.
/// A linear polarization at angle φ from H is `(e^{−iφ}, e^{iφ})/√2`, which
/// equals V up to a global phase at φ = 90°. ε_L drives `|+⟩`, ε_R drives
/// `|−⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Polarization {
    jones: Vector2<Complex64>,
}

impl Polarization {
    pub fn new(left: Complex64, right: Complex64) -> Result<Self> {
        let jones = Vector2::new(left, right);
        let deficit = (jones.norm() - 1.0).abs();
        if deficit > 1e-12 {
            return Err(Error::NotNormalized { deficit });
        }
        Ok(Self { jones })
    }

    fn unchecked(left: Complex64, right: Complex64) -> Self {
        Self { jones: Vector2::new(left, right) }
    }

    pub fn left() -> Self {
        Self::unchecked(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0))
    }

    pub fn right() -> Self {
        Self::unchecked(Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn horizontal() -> Self {
        Self::unchecked(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0))
    }

    pub fn vertical() -> Self {
        Self::unchecked(Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(-FRAC_1_SQRT_2, 0.0))
    }

    /// Linear polarization at `angle` (rad) from H.
    pub fn linear(angle: f64) -> Self {
        Self::unchecked(Complex64::from_polar(FRAC_1_SQRT_2, -angle), Complex64::from_polar(FRAC_1_SQRT_2, angle))
    }

    /// Convert a Jones vector given in the (H, V) basis.
    pub fn from_linear_basis(h: Complex64, v: Complex64) -> Self {
        let i = Complex64::i();
        Self::unchecked((h - i * v) * FRAC_1_SQRT_2, (h + i * v) * FRAC_1_SQRT_2)
    }

    /// H-polarized input after a half-wave plate with fast axis at `angle`.
    pub fn half_wave_plate(angle: f64) -> Self {
        Self::linear(2.0 * angle)
    }

    /// H-polarized input after a quarter-wave plate with fast axis at `angle`.
    /// 0 gives H; ±45° give the two circular states.
    pub fn quarter_wave_plate(angle: f64) -> Self {
        Self::quarter_wave_plate_with_input(0.0, angle)
    }

    /// Linear input at `input_angle` from H after a quarter-wave plate with
    /// fast axis at `angle`.
    pub fn quarter_wave_plate_with_input(input_angle: f64, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let (sp, cp) = input_angle.sin_cos();
        let i = Complex64::i();
        let h = (c * c + i * s * s) * cp + (1.0 - i) * s * c * sp;
        let v = (1.0 - i) * s * c * cp + (s * s + i * c * c) * sp;
        Self::from_linear_basis(h, v)
    }

    /// `H`, `V`, `D`, `A`, `L`, `R`, or `lin:<degrees from H>`.
    pub fn from_name(name: &str) -> Result<Self> {
        let n = name.trim();
        Ok(match n.to_ascii_uppercase().as_str() {
            "H" => Self::horizontal(),
            "V" => Self::vertical(),
            "D" => Self::linear(std::f64::consts::FRAC_PI_4),
            "A" => Self::linear(-std::f64::consts::FRAC_PI_4),
            "L" => Self::left(),
            "R" => Self::right(),
            _ => {
                let deg = n
                    .strip_prefix("lin:")
                    .and_then(|d| d.trim().parse::<f64>().ok())
                    .filter(|d| d.is_finite())
                    .ok_or_else(|| Error::Unknown { kind: "polarization", name: n.to_string() })?;
                Self::linear(deg.to_radians())
            }
        })
    }

    pub fn left_component(&self) -> Complex64 {
        self.jones[0]
    }

    pub fn right_component(&self) -> Complex64 {
        self.jones[1]
    }

    pub fn jones(&self) -> Vector2<Complex64> {
        self.jones
    }

    /// Swap the roles of the two circular components.
    pub fn mirrored(&self) -> Self {
        Self::unchecked(self.jones[1], self.jones[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn parses_names() {
        assert_eq!(Polarization::from_name("h").unwrap(), Polarization::horizontal());
        assert_eq!(Polarization::from_name("L").unwrap(), Polarization::left());
        let p = Polarization::from_name("lin:90").unwrap();
        assert!((p.jones().dotc(&Polarization::vertical().jones()).norm() - 1.0).abs() < 1e-12);
        assert!(Polarization::from_name("lin:x").is_err());
        assert!(Polarization::from_name("Q").is_err());
    }

    #[test]
    fn named_states_are_unit() {
        for p in [Polarization::left(), Polarization::right(), Polarization::horizontal(), Polarization::vertical()] {
            assert!((p.jones().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_at_ninety_degrees_is_vertical_up_to_phase() {
        let v = Polarization::linear(FRAC_PI_2).jones();
        let overlap = Polarization::vertical().jones().dotc(&v).norm();
        assert!((overlap - 1.0).abs() < 1e-12);
        let h = Polarization::linear(0.0).jones();
        assert!((h - Polarization::horizontal().jones()).norm() < 1e-15);
    }

    #[test]
    fn quarter_wave_plate_circular_at_45() {
        let p = Polarization::quarter_wave_plate(FRAC_PI_4);
        assert!(p.left_component().norm() < 1e-12);
        let q = Polarization::quarter_wave_plate(-FRAC_PI_4);
        assert!(q.right_component().norm() < 1e-12);
        let h = Polarization::quarter_wave_plate(0.0);
        assert!((h.jones() - Polarization::horizontal().jones()).norm() < 1e-15);
        for k in 0..20 {
            let p = Polarization::quarter_wave_plate(0.1 * k as f64);
            assert!((p.jones().norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_unnormalized() {
        assert!(Polarization::new(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)).is_err());
    }
}
