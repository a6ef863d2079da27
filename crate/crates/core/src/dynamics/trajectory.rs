use super::integrator::{integrate, IntegrationStats};
use super::system::{DensityMatrix, Generator, Mat7};
use super::{LindbladConfig, EXCITED_DOWN, EXCITED_UP, LEVEL_LABELS};
use crate::{Error, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use std::io::Write;

/// Populations on a time grid plus the derived fluorescence proxy.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryResult {
    pub t_ns: Vec<f64>,
    pub dim: usize,
    /// `populations[k][level]` at `t_ns[k]`.
    pub populations: Vec<Vec<f64>>,
    /// Total excited-state population.
    pub excited: Vec<f64>,
    /// Detected photon rate, counts/s: excited population / τ_exc × collection.
    pub fluorescence: Vec<f64>,
    pub max_trace_deviation: f64,
    pub final_state: DensityMatrix,
}

impl TrajectoryResult {
    pub fn population(&self, level: usize) -> Vec<f64> {
        self.populations.iter().map(|p| p[level]).collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t_ns".to_string()];
        header.extend(LEVEL_LABELS[..self.dim].iter().map(|l| format!("pop_{l}")));
        header.push("excited".into());
        header.push("fluorescence_cps".into());
        wr.write_record(&header)?;
        for k in 0..self.t_ns.len() {
            let mut row = vec![self.t_ns[k].to_string()];
            row.extend(self.populations[k].iter().map(|p| p.to_string()));
            row.push(self.excited[k].to_string());
            row.push(self.fluorescence[k].to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::invalid("grid", "empty time grid"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("grid", "times must be finite and strictly increasing"));
    }
    Ok(())
}

/// Internal step cap so the integrator never strides across the fastest
/// scale even on a coarse output grid.
fn max_step(cfg: &LindbladConfig) -> f64 {
    let p_max = cfg.pulse.gates.iter().map(|g| g.2).fold(0.0, f64::max);
    let omega = cfg.rabi_slope * p_max.sqrt();
    let mut h = (cfg.tau_exc_ns / 10.0).min(cfg.integrator.max_step_ns);
    if omega > 0.0 {
        h = h.min(1e3 / (10.0 * omega));
    }
    h
}

/// Integrate the master equation from `rho0` at `grid[0]` over `grid`, for
/// one detuning sample `delta_mhz`.
pub fn evolve(rho0: &DensityMatrix, cfg: &LindbladConfig, grid: &[f64], delta_mhz: f64) -> Result<TrajectoryResult> {
    cfg.validate()?;
    check_grid(grid)?;
    if rho0.dim() != cfg.dim() {
        return Err(Error::invalid("rho0", format!("state has {} levels, configuration {}", rho0.dim(), cfg.dim())));
    }
    let horizon = grid[grid.len() - 1] - grid[0];
    if horizon > 1e6 * cfg.tau_exc_ns {
        log::warn!(
            "integration horizon {horizon:.3e} ns exceeds 1e6 × τ_exc; consider the rate-rescaling option (it distorts sub-µs transients)"
        );
    }
    let gen = Generator::new(cfg, delta_mhz);
    let dim = cfg.dim();
    let mut opts = cfg.integrator;
    opts.max_step_ns = max_step(cfg);
    let mut pops = vec![Vec::new(); grid.len()];
    let (y, stats): (Mat7, IntegrationStats) = integrate(
        |t, y| gen.rhs(t, y),
        grid[0],
        *rho0.raw(),
        dim,
        grid,
        &cfg.pulse.edges(),
        &opts,
        |k, y| {
            pops[k] = (0..dim).map(|l| y[(l, l)].re).collect();
            Ok(())
        },
    )?;
    let scale = cfg.collection_efficiency / (cfg.tau_exc_ns * 1e-9);
    let excited: Vec<f64> = pops.iter().map(|p| p[EXCITED_DOWN] + p[EXCITED_UP]).collect();
    let fluorescence = excited.iter().map(|e| e * scale).collect();
    let max_dev = pops.iter().map(|p| (p.iter().sum::<f64>() - 1.0).abs()).fold(stats.max_trace_deviation, f64::max);
    Ok(TrajectoryResult {
        t_ns: grid.to_vec(),
        dim,
        populations: pops,
        excited,
        fluorescence,
        max_trace_deviation: max_dev,
        final_state: DensityMatrix::from_parts(dim, y),
    })
}

/// Detuning samples, MHz, drawn in order from a ChaCha8 stream.
pub fn sample_detunings(cfg: &LindbladConfig, n: usize, seed: u64) -> Vec<f64> {
    let sigma = cfg.detuning_sigma_mhz();
    if sigma == 0.0 {
        return vec![0.0; n];
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, sigma).expect("finite sigma");
    (0..n).map(|_| normal.sample(&mut rng)).collect()
}

/// Mean trajectory over `n_samples` Gaussian detuning samples. Samples run
/// in parallel; the reduction is in sample order.
pub fn ensemble_average(
    rho0: &DensityMatrix,
    cfg: &LindbladConfig,
    grid: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<TrajectoryResult> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be >= 1"));
    }
    let deltas = sample_detunings(cfg, n_samples, seed);
    let runs: Vec<Result<TrajectoryResult>> = deltas.par_iter().map(|&d| evolve(rho0, cfg, grid, d)).collect();
    let mut iter = runs.into_iter();
    let mut acc = iter.next().expect("n_samples >= 1")?;
    let mut rho = *acc.final_state.raw();
    for r in iter {
        let r = r?;
        for (a, b) in acc.populations.iter_mut().zip(&r.populations) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in acc.excited.iter_mut().zip(&r.excited) {
            *a += b;
        }
        for (a, b) in acc.fluorescence.iter_mut().zip(&r.fluorescence) {
            *a += b;
        }
        rho += r.final_state.raw();
        acc.max_trace_deviation = acc.max_trace_deviation.max(r.max_trace_deviation);
    }
    let inv = 1.0 / n_samples as f64;
    acc.populations.iter_mut().flatten().for_each(|x| *x *= inv);
    acc.excited.iter_mut().for_each(|x| *x *= inv);
    acc.fluorescence.iter_mut().for_each(|x| *x *= inv);
    acc.final_state = DensityMatrix::from_parts(acc.dim, rho * num_complex::Complex64::new(inv, 0.0));
    Ok(acc)
}
