//! Simulated measurements: fluorescence under single pulses, pump-probe
//! recovery and long recharging runs.

use super::steady::cycling_excited_population;
use super::system::{heralded_down_state, Generator};
use super::trajectory::{ensemble_average, evolve, sample_detunings, TrajectoryResult};
use super::{LindbladConfig, PulseShape, RechargeConfig, NV_MINUS};
use crate::nv_model::{transition_table, Branch, FineStructureParams, Polarization, Spin};
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Serialize;

/// Output spacing of simulated fluorescence traces, ns.
pub const PUMP_TRACE_STEP_NS: f64 = 0.25;
/// Recording time after the gate closes, ns.
pub const POST_PULSE_NS: f64 = 300.0;

fn uniform_grid(t0: f64, t1: f64, step: f64) -> Vec<f64> {
    let n = ((t1 - t0) / step).round() as usize;
    (0..=n).map(|k| t0 + k as f64 * step).collect()
}

/// Ensemble-averaged fluorescence for a gate of `duration_ns` at `p_nw`,
/// starting from the heralded orbitally mixed ↓ state. The record runs for
/// [`POST_PULSE_NS`] after the gate closes.
pub fn simulate_pump_trace(p_nw: f64, duration_ns: f64, cfg: &LindbladConfig) -> Result<TrajectoryResult> {
    if !(p_nw >= 0.0) || !(duration_ns > 0.0) {
        return Err(Error::invalid("pump", "power must be >= 0 and duration > 0"));
    }
    let pulse = PulseShape { gates: vec![(0.0, duration_ns, p_nw)], ..cfg.pulse.clone() };
    let run = LindbladConfig { pulse, ..cfg.clone() };
    let grid = uniform_grid(0.0, duration_ns + POST_PULSE_NS, PUMP_TRACE_STEP_NS);
    ensemble_average(&heralded_down_state(run.dim()), &run, &grid, run.n_samples, run.seed)
}

/// Fluorescence under a sharp-edged gate of `window_ns` at `p_nw`. The
/// modulator rise chirps the first oscillation periods, so the configured
/// edges are replaced by instantaneous ones.
pub fn simulate_rabi_trace(p_nw: f64, window_ns: f64, cfg: &LindbladConfig) -> Result<TrajectoryResult> {
    if !(p_nw > 0.0) || !(window_ns > 0.0) {
        return Err(Error::invalid("rabi", "power and window must be > 0"));
    }
    let run = LindbladConfig { pulse: PulseShape::single(0.0, window_ns, p_nw).with_edges(0.0, 0.0), ..cfg.clone() };
    let grid = uniform_grid(0.0, window_ns, PUMP_TRACE_STEP_NS);
    ensemble_average(&heralded_down_state(run.dim()), &run, &grid, run.n_samples, run.seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct PumpProbeOptions {
    pub power_nw: f64,
    pub pump_ns: f64,
    pub probe_ns: f64,
    /// Fluorescence integration window after each gate opens, ns.
    pub window_ns: f64,
}

impl Default for PumpProbeOptions {
    fn default() -> Self {
        Self { power_nw: 5.0, pump_ns: 1000.0, probe_ns: 100.0, window_ns: 40.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PumpProbePoint {
    pub delay_ns: f64,
    pub ratio: f64,
}

fn integrate_window(traj: &TrajectoryResult) -> f64 {
    let t = &traj.t_ns;
    let e = &traj.excited;
    (1..t.len()).map(|k| 0.5 * (e[k] + e[k - 1]) * (t[k] - t[k - 1])).sum()
}

/// Probe-over-pump ratio of the first-window fluorescence at one delay.
pub fn simulate_pump_probe(t_delay_ns: f64, cfg: &LindbladConfig) -> Result<f64> {
    Ok(simulate_pump_probe_sweep(&[t_delay_ns], cfg, &PumpProbeOptions::default())?[0].ratio)
}

/// Pump-probe ratios for many delays (gap between the pump gate closing
/// and the probe gate opening). Each detuning sample integrates the pump
/// once and branches a probe off the free evolution at every delay.
pub fn simulate_pump_probe_sweep(
    delays_ns: &[f64],
    cfg: &LindbladConfig,
    opts: &PumpProbeOptions,
) -> Result<Vec<PumpProbePoint>> {
    if delays_ns.iter().any(|d| !(*d >= 0.0)) {
        return Err(Error::invalid("t_delay", "delays must be >= 0"));
    }
    if !(opts.window_ns > 0.0 && opts.probe_ns >= opts.window_ns && opts.pump_ns >= opts.window_ns) {
        return Err(Error::invalid("pump-probe", "gates must cover the integration window"));
    }
    let mut order: Vec<usize> = (0..delays_ns.len()).collect();
    order.sort_by(|&a, &b| delays_ns[a].total_cmp(&delays_ns[b]));
    let deltas = sample_detunings(cfg, cfg.n_samples, cfg.seed);
    let t_off = opts.pump_ns;
    let pump_only = PulseShape { gates: vec![(0.0, t_off, opts.power_nw)], ..cfg.pulse.clone() };
    let pump_cfg = LindbladConfig { pulse: pump_only.clone(), ..cfg.clone() };
    let rho0 = heralded_down_state(cfg.dim());

    let per_sample = |delta: f64| -> Result<(f64, Vec<f64>)> {
        let win = evolve(&rho0, &pump_cfg, &uniform_grid(0.0, opts.window_ns, PUMP_TRACE_STEP_NS), delta)?;
        let pump_int = integrate_window(&win);
        let rest = evolve(&win.final_state, &pump_cfg, &[opts.window_ns, t_off], delta)?;
        let mut rho = rest.final_state;
        let mut t = t_off;
        let mut probes = vec![0.0; delays_ns.len()];
        for &k in &order {
            let start = t_off + delays_ns[k];
            if start > t {
                rho = evolve(&rho, &pump_cfg, &[t, start], delta)?.final_state;
                t = start;
            }
            let pulse = pump_only.clone().with_gate(start, start + opts.probe_ns, opts.power_nw);
            let probe_cfg = LindbladConfig { pulse, ..cfg.clone() };
            let grid = uniform_grid(start, start + opts.window_ns, PUMP_TRACE_STEP_NS);
            probes[k] = integrate_window(&evolve(&rho, &probe_cfg, &grid, delta)?);
        }
        Ok((pump_int, probes))
    };
    use rayon::prelude::*;
    let runs: Vec<Result<(f64, Vec<f64>)>> = deltas.par_iter().map(|&d| per_sample(d)).collect();
    let mut pump = 0.0;
    let mut probe = vec![0.0; delays_ns.len()];
    for r in runs {
        let (p, q) = r?;
        pump += p;
        for (a, b) in probe.iter_mut().zip(q) {
            *a += b;
        }
    }
    Ok(delays_ns.iter().zip(probe).map(|(&d, q)| PumpProbePoint { delay_ns: d, ratio: q / pump }).collect())
}

/// Light polarization for recharging runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RechargeDrive {
    /// Both lower-branch lines driven with equal strength.
    Linear,
    /// Circular light on the driven ↓ line; the ↑ line is suppressed by
    /// the selection rules at the NV A fine-structure parameters.
    Circular,
}

/// Relative Rabi coupling of the ↑ line under the circular polarization
/// that best drives the ↓ line, from the transition amplitudes at NV A
/// (l = 0.040, λ = 4.5 GHz, ε⊥ = 1.9 GHz).
pub fn circular_opposite_line_coupling() -> Result<f64> {
    let table = transition_table(&FineStructureParams::new(0.040, 4.5, 1.9))?;
    let down = table.get(Spin::Down, Branch::Lower);
    let up = table.get(Spin::Up, Branch::Lower);
    let (pol, a_down) = [Polarization::left(), Polarization::right()]
        .into_iter()
        .map(|p| (p, down.amplitude(&p)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("two candidates");
    Ok((up.amplitude(&pol) / a_down).sqrt())
}

/// Recharge rate per nW (1/s/nW, applied to the excited population) that
/// gives an effective D → NV⁻ rate of `target_hz_per_nw × P` at `p_ref_nw`.
pub fn calibrate_recharge_rate(cfg: &LindbladConfig, target_hz_per_nw: f64, p_ref_nw: f64) -> Result<f64> {
    let e = cycling_excited_population(cfg, p_ref_nw)?;
    Ok(target_hz_per_nw / e)
}

/// Excited-state spin-mixing time (s) for which resonant pumping out of ↓
/// takes `tau_pump_s` at `p_ref_nw`: the pumping rate is
/// `e_ss / (2 τ_exc,spin)`.
pub fn calibrate_exc_spin_mixing(cfg: &LindbladConfig, tau_pump_s: f64, p_ref_nw: f64) -> Result<f64> {
    let e = cycling_excited_population(cfg, p_ref_nw)?;
    Ok(0.5 * e * tau_pump_s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RechargeCurve {
    pub power_nw: f64,
    pub drive: RechargeDrive,
    /// Physical time, s.
    pub t_s: Vec<f64>,
    pub nv_minus: Vec<f64>,
}

/// Settling time after which the drive counts as constant, in rise constants.
const SETTLE_RISE_CONSTANTS: f64 = 25.0;

/// NV⁻ population versus recharge time under continuous drive at `p_nw`,
/// from the heralded NV⁰ ↓ state. The recharge, spin-pumping and
/// spin-relaxation rates are multiplied by the configured rescale factor
/// and the time axis is mapped back by the same factor. The turn-on is
/// integrated adaptively; once the drive has settled the constant
/// Liouvillian is propagated exactly between output times.
pub fn simulate_recharging(
    p_nw: f64,
    drive: RechargeDrive,
    t_max_s: f64,
    n_points: usize,
    cfg: &LindbladConfig,
    seed: u64,
) -> Result<RechargeCurve> {
    let rc: RechargeConfig = cfg.recharge.ok_or(Error::MissingConfig("recharge"))?;
    if !(p_nw >= 0.0) || !(t_max_s > 0.0) || n_points < 2 {
        return Err(Error::invalid("recharging", "need P >= 0, t_max > 0 and at least 2 points"));
    }
    if rc.rescale != 1.0 {
        log::warn!("recharging rates rescaled by {:.1e}; sub-µs transients are distorted", rc.rescale);
    }
    let coupling = match drive {
        RechargeDrive::Linear => 1.0,
        RechargeDrive::Circular => circular_opposite_line_coupling()?,
    };
    let run = LindbladConfig {
        tau_spin_s: cfg.tau_spin_s / rc.rescale,
        tau_exc_spin_s: cfg.tau_exc_spin_s / rc.rescale,
        opposite_line_coupling: coupling * cfg.opposite_line_coupling,
        recharge: Some(RechargeConfig { rate_per_nw: rc.rate_per_nw * rc.rescale, rescale: 1.0 }),
        pulse: PulseShape { gates: vec![(0.0, f64::INFINITY, p_nw)], ..cfg.pulse.clone() },
        ..cfg.clone()
    };
    run.validate()?;
    let to_ns = 1e9 / rc.rescale;
    let t_phys: Vec<f64> = (0..n_points).map(|k| t_max_s * k as f64 / (n_points - 1) as f64).collect();
    let grid: Vec<f64> = t_phys.iter().map(|t| t * to_ns).collect();
    let t_settle = SETTLE_RISE_CONSTANTS * run.pulse.rise_ns.max(run.pulse.fall_ns);
    let rho0 = heralded_down_state(7);
    let deltas = sample_detunings(&run, run.n_samples, seed);

    let per_sample = |delta: f64| -> Result<Vec<f64>> {
        let early: Vec<f64> = grid.iter().copied().filter(|&t| t <= t_settle).collect();
        let mut early_grid = early.clone();
        if early_grid.last().copied() != Some(t_settle) {
            early_grid.push(t_settle);
        }
        let head = evolve(&rho0, &run, &early_grid, delta)?;
        let mut out: Vec<f64> = head.population(NV_MINUS)[..early.len()].to_vec();
        let rest: Vec<f64> = grid.iter().copied().filter(|&t| t > t_settle).collect();
        if !rest.is_empty() {
            let gen = Generator::new(&run, delta);
            let levels: Vec<usize> = (0..7).collect();
            let l = gen.liouvillian(&levels, p_nw);
            let mut v = DVector::from_fn(49, |k, _| head.final_state.raw()[(k % 7, k / 7)]);
            let mut t = t_settle;
            let mut cache: Option<(f64, DMatrix<Complex64>)> = None;
            for &target in &rest {
                let dt = target - t;
                let reuse = matches!(&cache, Some((d, _)) if (d - dt).abs() <= 1e-9 * dt);
                if !reuse {
                    cache = Some((dt, (&l * Complex64::new(dt, 0.0)).exp()));
                }
                v = &cache.as_ref().expect("propagator").1 * v;
                t = target;
                let trace: f64 = (0..7).map(|k| v[k + 7 * k].re).sum();
                if (trace - 1.0).abs() > 1e-6 {
                    return Err(Error::Integration {
                        time_ns: t,
                        reason: format!("propagator trace drift {:.3e}", trace - 1.0),
                    });
                }
                out.push(v[NV_MINUS + 7 * NV_MINUS].re);
            }
        }
        Ok(out)
    };
    use rayon::prelude::*;
    let runs: Vec<Result<Vec<f64>>> = deltas.par_iter().map(|&d| per_sample(d)).collect();
    let mut acc = vec![0.0; n_points];
    for r in runs {
        for (a, b) in acc.iter_mut().zip(r?) {
            *a += b;
        }
    }
    let inv = 1.0 / deltas.len() as f64;
    acc.iter_mut().for_each(|x| *x *= inv);
    Ok(RechargeCurve { power_nw: p_nw, drive, t_s: t_phys, nv_minus: acc })
}
