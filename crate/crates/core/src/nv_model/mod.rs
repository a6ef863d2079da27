//! NV⁰ fine structure: the ²E ground-state Hamiltonian with spin-Zeeman,
//! orbital-Zeeman, spin-orbit and perpendicular-strain terms, the ²A₂
//! excited state, and the optical selection rules that follow from them.
//!
//! Ground states are ordered `|+,↓⟩, |−,↑⟩, |−,↓⟩, |+,↑⟩` throughout, the
//! same ordering the Lindblad engine uses for its first four levels.

mod contrasts;
mod eigen;
mod hamiltonian;
mod polarization;
mod transitions;

pub(crate) use contrasts::fixed_period_sine_fit;
pub use contrasts::{
    contrasts, contrasts_with, polarization_sweep, ContrastOptions, Contrasts, PolarizationSweep, SweepKind,
    WAVE_PLATE_ANGLES,
};
pub use eigen::{diagonalize_ground, Branch, GroundEigensystem, Spin};
pub use hamiltonian::{build_excited_hamiltonian, build_ground_hamiltonian, closed_form_ground_energies};
pub use polarization::Polarization;
pub use transitions::{
    splittings, transition_amplitude, transition_table, Splittings, Transition, TransitionRow, TransitionTable,
};

use crate::units::{Frequency, MU_B_MHZ_PER_GAUSS};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Orbital basis vector of the ground state, in the order used for the
/// Hamiltonian: index 0 is `|+⟩`, 1 is `|−⟩` within each spin sector.
pub(crate) const BASIS_LABELS: [&str; 4] = ["+,down", "-,up", "-,down", "+,up"];

/// Parameters of the ground-state Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FineStructureParams {
    /// Spin g-factor.
    pub g: f64,
    /// Orbital g-factor.
    pub l: f64,
    /// Spin-orbit parameter λ.
    pub lambda_so: Frequency,
    /// Perpendicular strain ε⊥.
    pub eps_perp: Frequency,
    /// Axial magnetic field, G.
    pub b_z_gauss: f64,
    /// μ_B/h, MHz/G.
    pub mu_b: f64,
}

impl Default for FineStructureParams {
    /// Main-text means (l = 0.039, λ = 4.9 GHz) at B_z = 1890 G with the
    /// NV A method-1 strain of 1.9 GHz.
    fn default() -> Self {
        Self::new(0.039, 4.9, 1.9)
    }
}

impl FineStructureParams {
    /// Build from `l`, `λ` (GHz) and `ε⊥` (GHz) at B_z = 1890 G, g = 2.003.
    pub fn new(l: f64, lambda_ghz: f64, eps_perp_ghz: f64) -> Self {
        Self {
            g: 2.003,
            l,
            lambda_so: Frequency::from_ghz(lambda_ghz),
            eps_perp: Frequency::from_ghz(eps_perp_ghz),
            b_z_gauss: 1890.0,
            mu_b: MU_B_MHZ_PER_GAUSS,
        }
    }

    pub fn with_strain_ghz(mut self, eps_perp_ghz: f64) -> Self {
        self.eps_perp = Frequency::from_ghz(eps_perp_ghz);
        self
    }

    pub fn with_field_gauss(mut self, b_z: f64) -> Self {
        self.b_z_gauss = b_z;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda_so.mhz() > 0.0) {
            return Err(Error::invalid("lambda_so", "must be > 0"));
        }
        if !(self.eps_perp.mhz() >= 0.0) {
            return Err(Error::invalid("eps_perp", "must be >= 0"));
        }
        if !(self.b_z_gauss >= 0.0) {
            return Err(Error::invalid("b_z", "must be >= 0"));
        }
        if !(self.mu_b > 0.0) {
            return Err(Error::invalid("mu_b", "must be > 0"));
        }
        if !self.g.is_finite() || !self.l.is_finite() {
            return Err(Error::invalid("g/l", "must be finite"));
        }
        Ok(())
    }

    /// Spin-Zeeman energy g·μ_B·B_z, MHz.
    pub fn spin_zeeman_mhz(&self) -> f64 {
        self.g * self.mu_b * self.b_z_gauss
    }

    /// Orbital-Zeeman energy l·μ_B·B_z, MHz.
    pub fn orbital_zeeman_mhz(&self) -> f64 {
        self.l * self.mu_b * self.b_z_gauss
    }

    /// Radical √((lμ_B B_z + 2λs)² + ε⊥²) for spin projection `s = ±½`, MHz.
    pub fn radical_mhz(&self, spin: Spin) -> f64 {
        let a = self.orbital_zeeman_mhz() + 2.0 * self.lambda_so.mhz() * spin.projection();
        a.hypot(self.eps_perp.mhz())
    }
}
