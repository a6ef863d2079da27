//! Simulation and parameter estimation for single neutral nitrogen-vacancy
//! (NV⁰) centers in diamond.
//!
//! The crate is organised by physical subsystem:
//!
//! - [`nv_model`]: ground (²E) and excited (²A₂) Hamiltonians, transition
//!   frequencies, polarization selection rules, splittings and contrasts.
//! - [`dynamics`]: the six-level Lindblad master equation (plus an optional
//!   NV⁻ sink level) under pulsed resonant driving.
//! - [`rate_models`]: closed-form model curves and the analytic three-level
//!   charge/spin rate equations.
//! - [`estimation`]: least-squares fitting, peak finding, Voigt multiplets,
//!   contrast extraction, joint fine-structure fits and readout fidelity.
//! - [`protocol_sim`]: seeded Monte-Carlo simulation of the charge-resonance
//!   check and of single-shot readout, T₁ and spin-pumping experiments.
//! - [`config`], [`io`] and [`cli`]: presets, file formats and the command
//!   line front end used by the `nv0` binary.
//!
//! All energies are carried as frequencies. The ground-state model works in
//! MHz; the Lindblad engine works in nanoseconds and angular frequency in
//! rad/µs (numerically 2π × MHz).

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod io;
pub mod nv_model;
pub mod protocol_sim;
pub mod rate_models;
pub mod units;

pub use error::{Error, Result};
