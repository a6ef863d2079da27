//! Physical constants and the unit conventions shared by every module.
//!
//! | quantity                    | unit            |
//! |-----------------------------|-----------------|
//! | fine-structure energies     | MHz (E/h)       |
//! | Lindblad Hamiltonian        | rad/µs (2π·MHz) |
//! | Lindblad time               | ns              |
//! | rate-equation time          | s               |
//! | magnetic field              | G               |
//! | optical power               | nW              |
//! | activation energies         | meV             |

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt;

/// Bohr magneton over Planck's constant, MHz/G.
pub const MU_B_MHZ_PER_GAUSS: f64 = 1.399_624_5;

/// Boltzmann constant, meV/K.
pub const K_B_MEV_PER_K: f64 = 0.086_17;

/// NV⁰ zero-phonon line frequency, THz (ω = 2π × 521.22 THz).
pub const ZPL_FREQUENCY_THZ: f64 = 521.22;

/// NV⁰ zero-phonon line wavelength, nm.
pub const ZPL_WAVELENGTH_NM: f64 = 575.17;

/// Conversion from cycles (MHz) to angular frequency (rad/µs).
pub const TWO_PI: f64 = 2.0 * PI;

/// Gaussian FWHM to standard deviation.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949;

/// A frequency (energy / h), stored in MHz.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Frequency(f64);

impl Frequency {
    pub const ZERO: Frequency = Frequency(0.0);

    pub const fn from_mhz(mhz: f64) -> Self {
        Frequency(mhz)
    }

    pub fn from_ghz(ghz: f64) -> Self {
        Frequency(ghz * 1e3)
    }

    pub const fn mhz(self) -> f64 {
        self.0
    }

    pub fn ghz(self) -> f64 {
        self.0 * 1e-3
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} MHz", self.0)
    }
}
