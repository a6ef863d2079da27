//! Spin experiments built on the heralded preparation: single-shot readout,
//! T₁ sweeps, spin pumping and stroboscopic charge cycling.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{shot_rng, Emitter, ProtocolConfig, ProtocolState, ProtocolStats, StepKind};
use crate::estimation::CountHistogram;
use crate::rate_models::ThreeLevelRates;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SsroHistograms {
    /// Readout right after heralding ↓ (post-herald delay only).
    pub prepared_down: CountHistogram,
    /// Readout after the additional delay.
    pub after_delay: CountHistogram,
}

/// One heralded shot: herald ↓, wait, check for NV⁻, read out with the
/// NV⁰ check window. `None` when NV⁻ was detected and the shot discarded.
fn heralded_readout(cfg: &ProtocolConfig, delay_s: f64, rng: ChaCha8Rng) -> Result<Option<u64>> {
    let mut em = Emitter::new(cfg, ProtocolState::nv_minus(), rng);
    let mut stats = ProtocolStats::default();
    em.herald_from(StepKind::Reset, &mut stats)?;
    em.wait(cfg.post_herald_delay_s + delay_s);
    let (_, nvm) = em.check_nv_minus_after();
    if nvm {
        return Ok(None);
    }
    Ok(Some(em.yellow_window(cfg.check_nv0.power_nw, cfg.check_nv0.duration_s)))
}

fn readout_histogram(
    cfg: &ProtocolConfig,
    delay_s: f64,
    n_shots: u64,
    stream: impl Fn(u64) -> ChaCha8Rng + Sync,
) -> Result<CountHistogram> {
    let shots: Vec<Option<u64>> =
        (0..n_shots).into_par_iter().map(|k| heralded_readout(cfg, delay_s, stream(k))).collect::<Result<_>>()?;
    let kept: Vec<u64> = shots.iter().flatten().copied().collect();
    Ok(CountHistogram::from_counts(&kept, n_shots - kept.len() as u64))
}

/// Readout histograms after heralding ↓, without and with an extra dark
/// delay. Every shot is an independent heralded run on its own stream.
pub fn simulate_ssro(delay_s: f64, n_shots: u64, cfg: &ProtocolConfig, seed: u64) -> Result<SsroHistograms> {
    cfg.validate()?;
    if n_shots == 0 {
        return Err(Error::invalid("n_shots", "must be >= 1"));
    }
    if !(delay_s >= 0.0 && delay_s.is_finite()) {
        return Err(Error::invalid("delay_s", "must be finite and >= 0"));
    }
    Ok(SsroHistograms {
        prepared_down: readout_histogram(cfg, 0.0, n_shots, |k| shot_rng(seed, 2 * k))?,
        after_delay: readout_histogram(cfg, delay_s, n_shots, |k| shot_rng(seed, 2 * k + 1))?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct T1Point {
    pub delay_s: f64,
    pub histogram: CountHistogram,
    /// Retained shots read out bright (↓).
    pub p_down: f64,
    pub p_down_sigma: f64,
}

/// Bright fraction after heralding ↓ and waiting each delay.
pub fn simulate_t1_sweep(delays_s: &[f64], n_shots: u64, cfg: &ProtocolConfig, seed: u64) -> Result<Vec<T1Point>> {
    cfg.validate()?;
    if n_shots == 0 {
        return Err(Error::invalid("n_shots", "must be >= 1"));
    }
    delays_s
        .iter()
        .enumerate()
        .map(|(j, &d)| {
            if !(d >= 0.0 && d.is_finite()) {
                return Err(Error::invalid("delay_s", "must be finite and >= 0"));
            }
            let h = readout_histogram(cfg, d, n_shots, |k| shot_rng(seed, ((j as u64) << 32) | k))?;
            let p = h.bright_fraction(cfg.readout_threshold);
            let n = h.retained().max(1) as f64;
            Ok(T1Point { delay_s: d, p_down: p, p_down_sigma: (p * (1.0 - p) / n).sqrt(), histogram: h })
        })
        .collect()
}

/// Ensemble populations on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationCurves {
    pub t_s: Vec<f64>,
    pub down: Vec<f64>,
    pub up: Vec<f64>,
    pub nv_minus: Vec<f64>,
    pub n_shots: u64,
}

impl PopulationCurves {
    /// Binomial standard error of a fraction `f`.
    pub fn sigma(&self, f: f64) -> f64 {
        (f * (1.0 - f) / self.n_shots.max(1) as f64).sqrt()
    }

    /// `populations/1` CSV, see [`crate::io`].
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        w.write_all(crate::io::populations_to_csv(self)?.as_bytes())?;
        Ok(())
    }
}

/// Three-state kinetics state: 0 = NV⁻, 1 = NV⁰ ↓, 2 = NV⁰ ↑.
type Level = usize;

/// Exact jump simulation over `duration` at constant rates.
fn jump(level: &mut Level, rates: &ThreeLevelRates, duration: f64, rng: &mut ChaCha8Rng) {
    let mut left = duration;
    loop {
        let (out, targets): (f64, [(Level, f64); 2]) = match *level {
            0 => (rates.i, [(1, 0.5 * rates.i), (2, 0.5 * rates.i)]),
            1 => (rates.r + rates.p + rates.s, [(0, rates.r), (2, rates.p + rates.s)]),
            _ => (rates.s, [(1, rates.s), (1, 0.0)]),
        };
        if !(out > 0.0) {
            return;
        }
        let dt = -(1.0 - rng.random::<f64>()).ln() / out;
        if dt >= left {
            return;
        }
        left -= dt;
        *level = if rng.random::<f64>() * out < targets[0].1 { targets[0].0 } else { targets[1].0 };
    }
}

fn initial_level(cfg: &ProtocolConfig, rng: &mut ChaCha8Rng) -> Level {
    let u = rng.random::<f64>();
    if u < cfg.c1 {
        1
    } else if u < cfg.c1 + cfg.c2 {
        2
    } else {
        0
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() || t_grid[0] < 0.0 || t_grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::invalid("t_grid", "must be non-empty, non-decreasing and start at t >= 0"));
    }
    Ok(())
}

/// Runs `n_shots` trajectories; `advance(level, from, to, rng)` evolves one
/// trajectory between consecutive grid times.
fn ensemble<F>(t_grid: &[f64], n_shots: u64, cfg: &ProtocolConfig, seed: u64, advance: F) -> PopulationCurves
where
    F: Fn(&mut Level, f64, f64, &mut ChaCha8Rng) + Sync,
{
    let tallies: Vec<Vec<[u32; 3]>> = (0..n_shots)
        .into_par_iter()
        .fold(
            || vec![[0u32; 3]; t_grid.len()],
            |mut acc, k| {
                let mut rng = shot_rng(seed, k);
                let mut level = initial_level(cfg, &mut rng);
                let mut t = 0.0;
                for (j, &tt) in t_grid.iter().enumerate() {
                    advance(&mut level, t, tt, &mut rng);
                    t = tt;
                    acc[j][level] += 1;
                }
                acc
            },
        )
        .collect();
    let mut total = vec![[0u64; 3]; t_grid.len()];
    for part in &tallies {
        for (a, b) in total.iter_mut().zip(part) {
            for q in 0..3 {
                a[q] += b[q] as u64;
            }
        }
    }
    let n = n_shots as f64;
    PopulationCurves {
        t_s: t_grid.to_vec(),
        nv_minus: total.iter().map(|c| c[0] as f64 / n).collect(),
        down: total.iter().map(|c| c[1] as f64 / n).collect(),
        up: total.iter().map(|c| c[2] as f64 / n).collect(),
        n_shots,
    }
}

/// Continuous yellow illumination at `power_nw` from the post-herald
/// populations `(c1, c2)`; one trajectory per shot, sampled on the grid.
pub fn simulate_spin_pumping_experiment(
    power_nw: f64,
    t_grid: &[f64],
    n_shots: u64,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<PopulationCurves> {
    cfg.validate()?;
    check_grid(t_grid)?;
    if !(power_nw >= 0.0) || n_shots == 0 {
        return Err(Error::invalid("power_nw/n_shots", "power must be >= 0 and n_shots >= 1"));
    }
    let rates = ThreeLevelRates { i: 0.0, ..cfg.rates_at(power_nw) };
    Ok(ensemble(t_grid, n_shots, cfg, seed, |lv, a, b, rng| jump(lv, &rates, b - a, rng)))
}

/// Alternating yellow and red periods.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrobeConfig {
    pub yellow_period_s: f64,
    pub red_period_s: f64,
    /// Ionisation rate on the yellow-only time axis, 1/s: each red period
    /// ionises with total weight `ionisation_rate · yellow_period_s`.
    pub ionisation_rate: f64,
    /// Real-time spin relaxation rate during red periods. `None` keeps the
    /// yellow-period value.
    pub red_spin_relaxation: Option<f64>,
}

impl Default for StrobeConfig {
    fn default() -> Self {
        Self { yellow_period_s: 1e-3, red_period_s: 1e-3, ionisation_rate: 1.0 / 0.018, red_spin_relaxation: None }
    }
}

impl StrobeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.yellow_period_s > 0.0 && self.red_period_s > 0.0) {
            return Err(Error::invalid("period", "yellow and red periods must be > 0"));
        }
        if !(self.ionisation_rate >= 0.0 && self.ionisation_rate.is_finite()) {
            return Err(Error::invalid("ionisation_rate", "must be finite and >= 0"));
        }
        if self.red_spin_relaxation.is_some_and(|s| !(s >= 0.0 && s.is_finite())) {
            return Err(Error::invalid("red_spin_relaxation", "must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Stroboscopic charge cycling. Rates `r`, `p` follow `power_nw` during
/// yellow periods; red periods ionise NV⁻ into a random NV⁰ spin. The
/// yellow-axis spin relaxation `s` of `cfg.pumping_rates` is spread over the
/// whole sequence. The grid is yellow-only time; each point is sampled after
/// the red period that follows a complete yellow period.
pub fn simulate_charge_cycling_experiment(
    power_nw: f64,
    strobe: &StrobeConfig,
    t_grid: &[f64],
    n_shots: u64,
    cfg: &ProtocolConfig,
    seed: u64,
) -> Result<PopulationCurves> {
    cfg.validate()?;
    strobe.validate()?;
    check_grid(t_grid)?;
    if !(power_nw >= 0.0) || n_shots == 0 {
        return Err(Error::invalid("power_nw/n_shots", "power must be >= 0 and n_shots >= 1"));
    }
    let base = cfg.rates_at(power_nw);
    let (ty, tr) = (strobe.yellow_period_s, strobe.red_period_s);
    let s_real = base.s * ty / (ty + tr);
    let yellow = ThreeLevelRates { r: base.r, p: base.p, s: s_real, i: 0.0 };
    let red = ThreeLevelRates {
        r: 0.0,
        p: 0.0,
        s: strobe.red_spin_relaxation.unwrap_or(s_real),
        i: strobe.ionisation_rate * ty / tr,
    };
    // Yellow-axis interval [a, b] as a sequence of (rates, duration).
    let advance = |lv: &mut Level, a: f64, b: f64, rng: &mut ChaCha8Rng| {
        let mut t = a;
        while t < b {
            let mut bound = ((t / ty).floor() + 1.0) * ty;
            if bound <= t {
                bound += ty;
            }
            let end = bound.min(b);
            jump(lv, &yellow, end - t, rng);
            if end >= bound {
                jump(lv, &red, tr, rng);
            }
            t = end;
        }
    };
    Ok(ensemble(t_grid, n_shots, cfg, seed, advance))
}
