//! File formats. Every CSV starts with one or more `#` comment lines, the
//! first naming the schema and its version:
//!
//! | schema          | columns                          | extra comments            |
//! |-----------------|----------------------------------|---------------------------|
//! | `spectrum/1`    | `freq_mhz,counts`                | `polarization=`, `power_nw=` |
//! | `histogram/1`   | `counts,occurrences`             | `total_shots=`, `discarded=` |
//! | `populations/1` | `t_s,down,up,nv_minus`           | `n_shots=`                |
//! | `trace/1`       | `t_ns,pop_*,excited,fluorescence_cps` |                      |
//! | `table/1`       | free header                      |                           |
//!
//! Files are written to a temporary sibling and renamed into place.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::estimation::{CountHistogram, FitData, Spectrum, SpectrumMeta};
use crate::protocol_sim::PopulationCurves;
use crate::{Error, Result};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::invalid("path", "no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn header(schema: &str, extras: &[(&str, String)]) -> String {
    let mut s = format!("# schema={schema}\n");
    for (k, v) in extras {
        s.push_str(&format!("# {k}={v}\n"));
    }
    s
}

fn table_csv(cols: &[&str], rows: impl Iterator<Item = Vec<f64>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(cols)?;
    for r in rows {
        if r.len() != cols.len() {
            return Err(Error::Invariant(format!("row of {} values for {} columns", r.len(), cols.len())));
        }
        if r.iter().any(|v| v.is_nan()) {
            return Err(Error::Invariant("NaN in output row".into()));
        }
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
        .map_err(|e| Error::Invariant(e.to_string()))
}

/// Leading `# key=value` comments and the CSV body.
fn split_comments(text: &str) -> (BTreeMap<String, String>, String) {
    let mut meta = BTreeMap::new();
    let mut body = String::new();
    for line in text.lines() {
        if let Some(c) = line.strip_prefix('#') {
            if let Some((k, v)) = c.trim().split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        } else if !line.trim().is_empty() {
            body.push_str(line);
            body.push('\n');
        }
    }
    (meta, body)
}

fn expect_schema(meta: &BTreeMap<String, String>, want: &str) -> Result<()> {
    match meta.get("schema") {
        Some(s) if s == want => Ok(()),
        Some(s) => Err(Error::Config(format!("expected schema {want}, found {s}"))),
        None => Ok(()),
    }
}

/// Named numeric columns of a CSV body.
fn read_columns(body: &str) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(body.as_bytes());
    let names: Vec<String> = r.headers()?.iter().map(String::from).collect();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        for (k, field) in rec.iter().enumerate().take(names.len()) {
            let v = field.parse::<f64>().map_err(|_| {
                Error::Config(format!("row {}: `{field}` in column {} is not a number", line + 2, names[k]))
            })?;
            cols[k].push(v);
        }
    }
    Ok(names.into_iter().zip(cols).collect())
}

fn column(cols: &BTreeMap<String, Vec<f64>>, name: &str) -> Result<Vec<f64>> {
    cols.get(name).cloned().ok_or_else(|| Error::Config(format!("missing column `{name}`")))
}

pub fn spectrum_to_csv(s: &Spectrum) -> Result<String> {
    s.validate()?;
    let mut extras = Vec::new();
    if let Some(p) = &s.meta.polarization {
        extras.push(("polarization", p.clone()));
    }
    if let Some(p) = s.meta.power_nw {
        extras.push(("power_nw", p.to_string()));
    }
    if let Some(i) = s.meta.scan_index {
        extras.push(("scan_index", i.to_string()));
    }
    let rows = s.freq_mhz.iter().zip(&s.counts).map(|(&f, &c)| vec![f, c]);
    Ok(header("spectrum/1", &extras) + &table_csv(&["freq_mhz", "counts"], rows)?)
}

pub fn spectrum_from_csv(text: &str) -> Result<Spectrum> {
    let (meta, body) = split_comments(text);
    expect_schema(&meta, "spectrum/1")?;
    let cols = read_columns(&body)?;
    let m = SpectrumMeta {
        polarization: meta.get("polarization").cloned(),
        power_nw: meta.get("power_nw").and_then(|v| v.parse().ok()),
        scan_index: meta.get("scan_index").and_then(|v| v.parse().ok()),
    };
    Ok(Spectrum::new(column(&cols, "freq_mhz")?, column(&cols, "counts")?)?.with_meta(m))
}

pub fn histogram_to_csv(h: &CountHistogram) -> Result<String> {
    h.validate()?;
    let extras = [("total_shots", h.total_shots.to_string()), ("discarded", h.discarded.to_string())];
    let rows = h.occurrences.iter().enumerate().map(|(k, &n)| vec![k as f64, n as f64]);
    Ok(header("histogram/1", &extras) + &table_csv(&["counts", "occurrences"], rows)?)
}

/// Missing bins count as zero; `total_shots` defaults to the recorded
/// shots plus `discarded`.
pub fn histogram_from_csv(text: &str) -> Result<CountHistogram> {
    let (meta, body) = split_comments(text);
    expect_schema(&meta, "histogram/1")?;
    let cols = read_columns(&body)?;
    let counts = column(&cols, "counts")?;
    let occ = column(&cols, "occurrences")?;
    let mut occurrences = Vec::new();
    for (&c, &n) in counts.iter().zip(&occ) {
        if !(c >= 0.0 && c.fract() == 0.0 && n >= 0.0 && n.fract() == 0.0) {
            return Err(Error::Config(format!("histogram bins must be non-negative integers, got ({c}, {n})")));
        }
        let c = c as usize;
        if occurrences.len() <= c {
            occurrences.resize(c + 1, 0);
        }
        occurrences[c] += n as u64;
    }
    let parse = |k: &str| -> Result<Option<u64>> {
        meta.get(k).map(|v| v.parse::<u64>().map_err(|_| Error::Config(format!("bad `{k}` value `{v}`")))).transpose()
    };
    let discarded = parse("discarded")?.unwrap_or(0);
    let recorded: u64 = occurrences.iter().sum();
    let total_shots = parse("total_shots")?.unwrap_or(recorded + discarded);
    let h = CountHistogram { occurrences, total_shots, discarded };
    h.validate()?;
    Ok(h)
}

pub fn populations_to_csv(p: &PopulationCurves) -> Result<String> {
    let rows = (0..p.t_s.len()).map(|k| vec![p.t_s[k], p.down[k], p.up[k], p.nv_minus[k]]);
    Ok(header("populations/1", &[("n_shots", p.n_shots.to_string())])
        + &table_csv(&["t_s", "down", "up", "nv_minus"], rows)?)
}

/// Generic numeric table under the `table/1` schema.
pub fn table_to_csv(cols: &[&str], rows: impl Iterator<Item = Vec<f64>>, extras: &[(&str, String)]) -> Result<String> {
    Ok(header("table/1", extras) + &table_csv(cols, rows)?)
}

/// `x`, `y` and optional `σ` columns of any CSV for fitting.
pub fn fit_data_from_csv(text: &str, x: &str, y: &str, sigma: Option<&str>) -> Result<FitData> {
    let (_, body) = split_comments(text);
    let cols = read_columns(&body)?;
    let mut d = FitData::new(column(&cols, x)?, column(&cols, y)?);
    if let Some(s) = sigma {
        d = d.with_sigma(column(&cols, s)?);
    }
    d.validate()?;
    Ok(d)
}

/// Provenance written next to every command's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub preset: Option<String>,
    pub seed: u64,
    pub samples: Option<u64>,
    pub output_dir: PathBuf,
    pub artifact_version: String,
    pub wall_clock_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config_path: Option<PathBuf>,
        preset: Option<String>,
        seed: u64,
        output_dir: PathBuf,
    ) -> Self {
        Self {
            command: command.to_string(),
            config_path,
            preset,
            seed,
            samples: None,
            output_dir,
            artifact_version: ARTIFACT_VERSION.to_string(),
            wall_clock_s: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn finish(&mut self, elapsed: Duration) {
        self.wall_clock_s = elapsed.as_secs_f64();
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = self.output_dir.join("manifest.json");
        write_atomic(&path, serde_json::to_string_pretty(self)?.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}
