//! Fit reports: an aligned text table and a flat JSON object.

use std::fmt::Write as _;

use serde::Serialize;

use super::FitResult;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportRow {
    pub parameter: String,
    pub value: f64,
    pub sigma: f64,
    pub unit: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FitReport {
    pub title: String,
    pub rows: Vec<ReportRow>,
    /// Scalar diagnostics such as χ² or convergence.
    pub extras: Vec<(String, String)>,
}

impl FitReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Default::default() }
    }

    pub fn row(mut self, parameter: impl Into<String>, value: f64, sigma: f64, unit: impl Into<String>) -> Self {
        self.rows.push(ReportRow { parameter: parameter.into(), value, sigma, unit: unit.into() });
        self
    }

    pub fn extra(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.extras.push((key.into(), value.to_string()));
        self
    }

    /// One row per parameter, units by position (missing units are blank).
    pub fn from_fit(title: impl Into<String>, fit: &FitResult, units: &[&str]) -> Self {
        let mut r = Self::new(title);
        for (k, name) in fit.names.iter().enumerate() {
            r = r.row(name.clone(), fit.params[k], fit.uncertainties[k], units.get(k).copied().unwrap_or(""));
        }
        r.extra("converged", fit.converged)
            .extra("iterations", fit.iterations)
            .extra("chi2", format!("{:.6e}", fit.chi2))
            .extra("dof", fit.dof)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {}", self.title);
        let _ = writeln!(s, "{:<24} {:>16} {:>14}  unit", "parameter", "value", "sigma");
        for r in &self.rows {
            let _ = writeln!(s, "{:<24} {:>16.8e} {:>14.4e}  {}", r.parameter, r.value, r.sigma, r.unit);
        }
        for (k, v) in &self.extras {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    /// `{"title": .., "<param>": v, "<param>_sigma": σ, "<param>_unit": u, extras..}`.
    /// Non-finite numbers become null.
    pub fn to_json(&self) -> serde_json::Value {
        let num = |v: f64| serde_json::Number::from_f64(v).map_or(serde_json::Value::Null, serde_json::Value::Number);
        let mut m = serde_json::Map::new();
        m.insert("title".into(), self.title.clone().into());
        for r in &self.rows {
            m.insert(r.parameter.clone(), num(r.value));
            m.insert(format!("{}_sigma", r.parameter), num(r.sigma));
            m.insert(format!("{}_unit", r.parameter), r.unit.clone().into());
        }
        for (k, v) in &self.extras {
            m.insert(k.clone(), v.clone().into());
        }
        serde_json::Value::Object(m)
    }
}
