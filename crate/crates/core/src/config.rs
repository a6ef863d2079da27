//! Run configuration: one TOML file with a section per pipeline, layered
//! over a named preset.
//!
//! ```toml
//! preset = "nv_a"
//! seed = 7
//!
//! [fine_structure]
//! eps_perp_ghz = 0.0
//!
//! [pump]
//! powers_nw = [2.0, 4.0, 10.0, 20.0]
//! ```
//!
//! Keys missing from the file keep the preset value; unknown keys are
//! rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::{LindbladConfig, PumpProbeOptions, RechargeConfig, RechargeDrive};
use crate::estimation::LineShape;
use crate::nv_model::FineStructureParams;
use crate::protocol_sim::{ProtocolConfig, StrobeConfig};
use crate::rate_models::ThreeLevelRates;
use crate::{Error, Result};

pub const PRESETS: &[(&str, &str)] = &[
    ("nv_a", "NV A, method-1 fit: l = 0.040, λ = 4.5 GHz, ε⊥ = 1.9 GHz"),
    ("nv_b", "NV B, method-1 fit: ε⊥ = 3.2 GHz"),
    ("nv_c", "NV C, method-1 fit: ε⊥ = 7.2 GHz"),
    ("nv_a_method2", "NV A, fixed NV⁻ strain: l = 0.037, λ = 5.2 GHz, ε⊥ = 1.05 GHz"),
    ("nv_b_method2", "NV B, fixed NV⁻ strain: ε⊥ = 4.15 GHz"),
    ("nv_c_method2", "NV C, fixed NV⁻ strain: ε⊥ = 4.35 GHz"),
    ("main_mean", "mean of both fits: l = 0.039, λ = 4.9 GHz (NV A strain)"),
    ("barson", "literature ensemble values: l = 0.0186, λ = 2.24 GHz"),
    ("4k65", "4.65 K dynamics: τ_orbit = 430 ns"),
    ("10k1", "10.1 K dynamics: τ_orbit = 50 ns"),
];

/// Fine-structure parameters in file units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FineStructureSection {
    pub g: f64,
    pub l: f64,
    pub lambda_ghz: f64,
    pub eps_perp_ghz: f64,
    pub b_z_gauss: f64,
}

impl Default for FineStructureSection {
    fn default() -> Self {
        Self::from_params(&FineStructureParams::default())
    }
}

impl FineStructureSection {
    pub fn from_params(p: &FineStructureParams) -> Self {
        Self { g: p.g, l: p.l, lambda_ghz: p.lambda_so.ghz(), eps_perp_ghz: p.eps_perp.ghz(), b_z_gauss: p.b_z_gauss }
    }

    pub fn params(&self) -> FineStructureParams {
        FineStructureParams { g: self.g, ..FineStructureParams::new(self.l, self.lambda_ghz, self.eps_perp_ghz) }
            .with_field_gauss(self.b_z_gauss)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// Polarization names, see [`crate::nv_model::Polarization::from_name`].
    pub polarizations: Vec<String>,
    pub start_mhz: f64,
    pub stop_mhz: f64,
    pub step_mhz: f64,
    pub power_nw: f64,
    pub line: LineShape,
    /// Poisson noise on every bin.
    pub noise: bool,
    /// Run peak finding and the Voigt multiplet fit on each spectrum.
    pub extract: bool,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self {
            polarizations: ["H", "V", "L", "R"].map(String::from).to_vec(),
            start_mhz: -12_000.0,
            stop_mhz: 12_000.0,
            step_mhz: 1.0,
            power_nw: 5.0,
            line: LineShape::default(),
            noise: false,
            extract: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpSection {
    pub powers_nw: Vec<f64>,
    pub duration_ns: f64,
    /// Powers of the sharp-edged traces used for the Rabi slope; well above
    /// the detuning jitter, which pulls the frequency up.
    pub rabi_powers_nw: Vec<f64>,
    pub rabi_window_ns: f64,
}

impl Default for PumpSection {
    fn default() -> Self {
        Self {
            powers_nw: vec![2.0, 4.0, 10.0, 20.0],
            duration_ns: 1000.0,
            rabi_powers_nw: vec![40.0, 80.0, 160.0, 320.0],
            rabi_window_ns: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PumpProbeSection {
    pub delays_ns: Vec<f64>,
    pub options: PumpProbeOptions,
    /// Temperatures (K) for the temperature-model fit; used only when
    /// `recovery_rates_per_s` is given alongside.
    pub temperatures_k: Vec<f64>,
    pub recovery_rates_per_s: Vec<f64>,
    /// Shorter delays are left out of the recovery fit: there the probe
    /// gate still overlaps the falling pump.
    pub fit_min_delay_ns: f64,
}

impl Default for PumpProbeSection {
    fn default() -> Self {
        Self {
            delays_ns: vec![0.0, 50.0, 100.0, 200.0, 300.0, 400.0, 600.0, 800.0, 1000.0, 1500.0, 2000.0, 3000.0],
            options: PumpProbeOptions::default(),
            temperatures_k: Vec::new(),
            recovery_rates_per_s: Vec::new(),
            fit_min_delay_ns: 100.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateScenario {
    SpinPumping,
    ChargeCycling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RatesSection {
    pub scenario: RateScenario,
    /// Rates on the reported time axis (yellow-only time for charge cycling).
    pub rates: ThreeLevelRates,
    pub c1: f64,
    pub c2: f64,
    pub t_max_s: f64,
    pub n_points: usize,
    /// Also run the Monte-Carlo experiment with this many shots.
    pub monte_carlo_shots: u64,
    pub power_nw: f64,
    pub strobe: StrobeConfig,
    /// Recharging (double-exponential) runs through the Lindblad engine.
    pub recharge_powers_nw: Vec<f64>,
    pub recharge_drives: Vec<RechargeDrive>,
    pub recharge_t_max_s: f64,
    pub recharge_n_points: usize,
}

impl Default for RatesSection {
    fn default() -> Self {
        Self {
            scenario: RateScenario::SpinPumping,
            rates: ThreeLevelRates::spin_pumping_fit(),
            c1: 0.960,
            c2: 0.012,
            t_max_s: 1.0,
            n_points: 101,
            monte_carlo_shots: 0,
            power_nw: 5.0,
            strobe: StrobeConfig::default(),
            recharge_powers_nw: Vec::new(),
            recharge_drives: vec![RechargeDrive::Linear, RechargeDrive::Circular],
            recharge_t_max_s: 2.0,
            recharge_n_points: 1001,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub n_heralds: u64,
    pub ssro_shots: u64,
    pub ssro_delay_s: f64,
    pub t1_delays_s: Vec<f64>,
    pub t1_shots: u64,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            n_heralds: 3000,
            ssro_shots: 3000,
            ssro_delay_s: 10.0,
            t1_delays_s: vec![0.0, 0.5, 1.0, 1.5, 2.0, 6.0, 8.0, 10.0],
            t1_shots: 3000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitSection {
    /// Registry model name.
    pub model: String,
    /// CSV input; relative paths resolve against the config file.
    pub data: Option<PathBuf>,
    pub x_column: String,
    pub y_column: String,
    pub sigma_column: Option<String>,
    pub init: Vec<f64>,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
    pub fixed: Option<Vec<bool>>,
}

impl Default for FitSection {
    fn default() -> Self {
        Self {
            model: "saturation".into(),
            data: None,
            x_column: "x".into(),
            y_column: "y".into(),
            sigma_column: None,
            init: Vec::new(),
            lower: None,
            upper: None,
            fixed: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Preset the file is layered over; informational once loaded.
    pub preset: Option<String>,
    pub seed: u64,
    /// Overrides the Lindblad detuning samples and the Monte-Carlo shot
    /// counts when set.
    pub samples: Option<u64>,
    pub fine_structure: FineStructureSection,
    pub spectrum: SpectrumSection,
    pub lindblad: LindbladConfig,
    pub pump: PumpSection,
    pub pump_probe: PumpProbeSection,
    pub rates: RatesSection,
    pub protocol: ProtocolConfig,
    pub experiment: ExperimentSection,
    pub fit: FitSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            preset: None,
            seed: 20240501,
            samples: None,
            fine_structure: FineStructureSection::default(),
            spectrum: SpectrumSection::default(),
            lindblad: LindbladConfig::default(),
            pump: PumpSection::default(),
            pump_probe: PumpProbeSection::default(),
            rates: RatesSection::default(),
            protocol: ProtocolConfig::default(),
            experiment: ExperimentSection::default(),
            fit: FitSection::default(),
        }
    }
}

impl Config {
    pub fn preset(name: &str) -> Result<Self> {
        let fs = |l, lam, eps| FineStructureSection::from_params(&FineStructureParams::new(l, lam, eps));
        let base = Self { preset: Some(name.to_string()), ..Self::default() };
        Ok(match name {
            "default" => base,
            "nv_a" => Self { fine_structure: fs(0.040, 4.5, 1.9), ..base },
            "nv_b" => Self { fine_structure: fs(0.040, 4.5, 3.2), ..base },
            "nv_c" => Self { fine_structure: fs(0.040, 4.5, 7.2), ..base },
            "nv_a_method2" => Self { fine_structure: fs(0.037, 5.2, 1.05), ..base },
            "nv_b_method2" => Self { fine_structure: fs(0.037, 5.2, 4.15), ..base },
            "nv_c_method2" => Self { fine_structure: fs(0.037, 5.2, 4.35), ..base },
            "main_mean" => Self { fine_structure: fs(0.039, 4.9, 1.9), ..base },
            "barson" => Self { fine_structure: fs(0.0186, 2.24, 1.9), ..base },
            "4k65" => Self { lindblad: LindbladConfig::preset_4k65(), ..base },
            "10k1" => Self { lindblad: LindbladConfig::preset_10k1(), ..base },
            _ => return Err(Error::Unknown { kind: "preset", name: name.to_string() }),
        })
    }

    /// Parses TOML text layered over its `preset` key (or `fallback_preset`,
    /// or the defaults).
    pub fn from_toml_str(text: &str, fallback_preset: Option<&str>) -> Result<Self> {
        let file: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let preset = match file.get("preset") {
            Some(toml::Value::String(s)) => Some(s.as_str()),
            Some(_) => return Err(Error::Config("`preset` must be a string".into())),
            None => fallback_preset,
        };
        let base = Self::preset(preset.unwrap_or("default"))?;
        let mut merged = toml::Table::try_from(&base).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, file);
        let cfg: Self = merged.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, fallback_preset: Option<&str>) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml_str(&text, fallback_preset)?;
        if let (Some(data), Some(dir)) = (&cfg.fit.data, path.parent()) {
            if data.is_relative() {
                cfg.fit.data = Some(dir.join(data));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `seed` and `samples` overrides to every sub-configuration.
    pub fn apply_overrides(&mut self, seed: Option<u64>, samples: Option<u64>) {
        if let Some(s) = seed {
            self.seed = s;
        }
        if samples.is_some() {
            self.samples = samples;
        }
        self.lindblad.seed = self.seed;
        self.protocol.seed = self.seed;
        if let Some(n) = self.samples {
            self.lindblad.n_samples = n as usize;
            self.experiment.ssro_shots = n;
            self.experiment.t1_shots = n;
            self.experiment.n_heralds = n;
            if self.rates.monte_carlo_shots > 0 {
                self.rates.monte_carlo_shots = n;
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.fine_structure.params().validate()?;
        self.lindblad.validate()?;
        self.protocol.validate()?;
        self.rates.rates.validate()?;
        self.rates.strobe.validate()?;
        crate::rate_models::RatePopulations::initial(self.rates.c1, self.rates.c2)?;
        let s = &self.spectrum;
        if !(s.step_mhz > 0.0 && s.stop_mhz > s.start_mhz) {
            return Err(Error::invalid("spectrum", "need step_mhz > 0 and stop_mhz > start_mhz"));
        }
        for p in &s.polarizations {
            crate::nv_model::Polarization::from_name(p)?;
        }
        if self.samples == Some(0) {
            return Err(Error::invalid("samples", "must be >= 1"));
        }
        if self.rates.n_points < 2 || !(self.rates.t_max_s > 0.0) {
            return Err(Error::invalid("rates", "need n_points >= 2 and t_max_s > 0"));
        }
        Ok(())
    }

    /// Lindblad configuration with recharging enabled at the calibrated
    /// rate, for the recharging runs.
    pub fn lindblad_with_recharge(&self, rate_per_nw: f64) -> LindbladConfig {
        let rescale = self.lindblad.recharge.map_or(RechargeConfig::default().rescale, |r| r.rescale);
        LindbladConfig { recharge: Some(RechargeConfig { rate_per_nw, rescale }), ..self.lindblad.clone() }
    }
}

/// Recursive table merge; `over` wins on conflicts.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
