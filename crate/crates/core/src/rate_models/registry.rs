//! Name-addressable catalogue of the model curves, for fitting by name.

use super::curves::*;
use crate::{Error, Result};

pub type ModelFn = fn(f64, &[f64]) -> f64;

#[derive(Clone, Copy, Debug)]
pub struct ModelSpec {
    pub name: &'static str,
    pub params: &'static [&'static str],
    /// Units of the independent variable.
    pub x_unit: &'static str,
    /// Closed domain of the independent variable.
    pub domain: (f64, f64),
    /// Starting point used when the caller supplies none.
    pub default_init: &'static [f64],
    /// Parameters held fixed unless the caller says otherwise; the onset of
    /// `recovery` trades off exactly against its amplitude.
    pub default_fixed: &'static [usize],
    pub eval: ModelFn,
}

impl ModelSpec {
    pub fn evaluate(&self, x: f64, params: &[f64]) -> Result<f64> {
        if params.len() != self.params.len() {
            return Err(Error::invalid(
                "params",
                format!("{} takes {} parameters, got {}", self.name, self.params.len(), params.len()),
            ));
        }
        Ok((self.eval)(x, params))
    }
}

const INF: f64 = f64::INFINITY;

static MODELS: &[ModelSpec] = &[
    ModelSpec {
        name: "recovery",
        params: &["a", "A", "t0", "T"],
        x_unit: "ns",
        domain: (0.0, INF),
        default_init: &[0.2, 0.8, 0.0, 5.0],
        default_fixed: &[2],
        eval: |x, p| recovery_model(x, p[0], p[1], p[2], p[3]),
    },
    ModelSpec {
        name: "orbach",
        params: &["A", "B", "delta_meV"],
        x_unit: "K",
        domain: (0.0, INF),
        default_init: &[1.0, 1.0e4, 16.0],
        default_fixed: &[],
        eval: |x, p| temperature_model_orbach(x, p[0], p[1], p[2]),
    },
    ModelSpec {
        name: "raman",
        params: &["A", "C", "n"],
        x_unit: "K",
        domain: (0.0, INF),
        default_init: &[1.0, 1.0e-3, 5.0],
        default_fixed: &[],
        eval: |x, p| temperature_model_raman(x, p[0], p[1], p[2]),
    },
    ModelSpec {
        name: "saturation",
        params: &["A", "P_sat"],
        x_unit: "nW",
        domain: (0.0, INF),
        default_init: &[105.0, 2.5],
        default_fixed: &[],
        eval: |x, p| saturation_model(x, p[0], p[1]),
    },
    ModelSpec {
        name: "rabi",
        params: &["alpha"],
        x_unit: "nW",
        domain: (0.0, INF),
        default_init: &[0.5],
        default_fixed: &[],
        eval: |x, p| rabi_frequency(x, p[0]),
    },
    ModelSpec {
        name: "power_broadening",
        params: &["a", "b", "f_L"],
        x_unit: "nW",
        domain: (0.0, INF),
        default_init: &[1.0, 0.05, 15.0],
        default_fixed: &[],
        eval: |x, p| power_broadened_fwhm(x, p[0], p[1], p[2]),
    },
    ModelSpec {
        name: "double_exp_recharge",
        params: &["A", "tau_fast", "tau_slow"],
        x_unit: "s",
        domain: (0.0, INF),
        default_init: &[0.5, 2.0, 8.0],
        default_fixed: &[],
        eval: |x, p| double_exp_recharge(x, p[0], p[1], p[2]),
    },
    ModelSpec {
        name: "exp_decay",
        params: &["A", "tau", "c"],
        x_unit: "any",
        domain: (-INF, INF),
        default_init: &[0.5, 1.5, 0.5],
        default_fixed: &[],
        eval: |x, p| p[0] * (-x / p[1]).exp() + p[2],
    },
    ModelSpec {
        name: "damped_sine",
        params: &["A", "f", "phase", "tau", "c"],
        x_unit: "ns",
        domain: (-INF, INF),
        default_init: &[0.5, 0.2, 0.0, 20.0, 0.5],
        default_fixed: &[],
        eval: |x, p| p[0] * (-x / p[3]).exp() * (std::f64::consts::TAU * p[1] * x + p[2]).sin() + p[4],
    },
    ModelSpec {
        name: "linear",
        params: &["slope", "intercept"],
        x_unit: "any",
        domain: (-INF, INF),
        default_init: &[1.0, 0.0],
        default_fixed: &[],
        eval: |x, p| p[0] * x + p[1],
    },
];

pub fn models() -> &'static [ModelSpec] {
    MODELS
}

pub fn model(name: &str) -> Result<&'static ModelSpec> {
    MODELS.iter().find(|m| m.name == name).ok_or_else(|| Error::Unknown { kind: "model", name: name.to_string() })
}
