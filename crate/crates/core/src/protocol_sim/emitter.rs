//! The CR-check state machine acting on a single simulated emitter.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{poisson, Charge, ProtocolConfig, ProtocolState, SpinState};
use crate::rate_models::voigt_peak_normalized;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Reset,
    CheckNvMinus,
    Ionise,
    CheckNv0,
    CheckNvMinusAfter,
    Wait,
}

impl StepKind {
    pub fn label(self) -> &'static str {
        match self {
            StepKind::Reset => "reset",
            StepKind::CheckNvMinus => "check_nv_minus",
            StepKind::Ionise => "ionise",
            StepKind::CheckNv0 => "check_nv0",
            StepKind::CheckNvMinusAfter => "check_nv_minus_after",
            StepKind::Wait => "wait",
        }
    }
}

/// Next step of the heralding loop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Goto(StepKind),
    Heralded,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolEvent {
    pub step: StepKind,
    pub start_s: f64,
    pub duration_s: f64,
    pub counts: Option<u64>,
    pub decision: &'static str,
}

impl fmt::Display for ProtocolEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts = self.counts.map_or_else(|| "-".to_string(), |c| c.to_string());
        write!(
            f,
            "t={:.6e} step={} duration={:.3e} counts={} decision={}",
            self.start_s,
            self.step.label(),
            self.duration_s,
            counts,
            self.decision
        )
    }
}

/// A single emitter driven through protocol steps.
pub struct Emitter<'a> {
    pub cfg: &'a ProtocolConfig,
    pub state: ProtocolState,
    pub rng: ChaCha8Rng,
    pub log: Vec<ProtocolEvent>,
}

impl<'a> Emitter<'a> {
    pub fn new(cfg: &'a ProtocolConfig, state: ProtocolState, rng: ChaCha8Rng) -> Self {
        Self { cfg, state, rng, log: Vec::new() }
    }

    fn record(&mut self, step: StepKind, start: f64, duration: f64, counts: Option<u64>, decision: &'static str) {
        if self.log.len() < self.cfg.event_log_limit {
            self.log.push(ProtocolEvent { step, start_s: start, duration_s: duration, counts, decision });
        }
    }

    /// Relative line brightness at the current spectral offset.
    fn detuning_factor(&self) -> f64 {
        let off = self.state.spectral_offset_mhz;
        if off == 0.0 {
            1.0
        } else {
            voigt_peak_normalized(off, self.cfg.line_f_l_mhz, self.cfg.line_f_g_mhz)
        }
    }

    fn diffuse(&mut self) {
        let step = self.cfg.spectral_diffusion_step_mhz;
        if step > 0.0 {
            let d = Normal::new(0.0, step).unwrap().sample(&mut self.rng);
            let lim = self.cfg.spectral_diffusion_limit_mhz;
            self.state.spectral_offset_mhz = (self.state.spectral_offset_mhz + d).clamp(-lim, lim);
        }
    }

    /// Exact two-state spin relaxation over `t` (population difference
    /// decays as e^{−t/τ}); the charge state is stable in the dark.
    pub fn wait(&mut self, t: f64) {
        if t <= 0.0 {
            return;
        }
        if self.state.charge == Charge::NvZero {
            let flip = 0.5 * -(-t / self.cfg.tau_spin_s).exp_m1();
            if self.rng.random_bool(flip.clamp(0.0, 1.0)) {
                self.state.spin = self.state.spin.map(SpinState::flipped);
            }
        }
        let start = self.state.clock_s;
        self.state.clock_s += t;
        self.record(StepKind::Wait, start, t, None, "-");
    }

    pub fn reset(&mut self) {
        let s = self.cfg.reset;
        if self.rng.random_bool(self.cfg.green_nv_minus_probability) {
            self.state.charge = Charge::NvMinus;
            self.state.spin = None;
        } else {
            self.state.charge = Charge::NvZero;
            self.state.spin = Some(SpinState::random(&mut self.rng));
        }
        self.diffuse();
        let start = self.state.clock_s;
        self.state.clock_s += s.duration_s;
        self.record(StepKind::Reset, start, s.duration_s, None, "check_nv_minus");
    }

    /// Red check window; NV⁻ fluoresces, NV⁰ gives background counts.
    fn red_counts(&mut self, duration: f64) -> u64 {
        let mean = match self.state.charge {
            Charge::NvMinus => self.cfg.nv_minus_counts * self.detuning_factor(),
            Charge::NvZero => self.cfg.red_background_counts,
        };
        self.state.clock_s += duration;
        poisson(mean, &mut self.rng)
    }

    pub fn check_nv_minus(&mut self) -> (u64, Step) {
        let s = self.cfg.check_nv_minus;
        let start = self.state.clock_s;
        let c = self.red_counts(s.duration_s);
        let (next, label) = if c >= s.threshold {
            (StepKind::Ionise, "ionise")
        } else if c > 0 {
            (StepKind::CheckNvMinus, "repeat")
        } else {
            (StepKind::Reset, "reset")
        };
        self.record(StepKind::CheckNvMinus, start, s.duration_s, Some(c), label);
        (c, Step::Goto(next))
    }

    /// Post-experiment red check: true when NV⁻ is detected.
    pub fn check_nv_minus_after(&mut self) -> (u64, bool) {
        let s = self.cfg.check_nv_minus;
        let start = self.state.clock_s;
        let c = self.red_counts(s.duration_s);
        let nvm = c >= self.cfg.after_threshold;
        self.record(StepKind::CheckNvMinusAfter, start, s.duration_s, Some(c), if nvm { "discard" } else { "keep" });
        (c, nvm)
    }

    pub fn ionise(&mut self) {
        let s = self.cfg.ionise;
        if self.state.charge == Charge::NvMinus && self.rng.random_bool(self.cfg.ionise_probability) {
            self.state.charge = Charge::NvZero;
            self.state.spin = Some(SpinState::random(&mut self.rng));
        }
        self.diffuse();
        let start = self.state.clock_s;
        self.state.clock_s += s.duration_s;
        self.record(StepKind::Ionise, start, s.duration_s, None, "check_nv0");
    }

    /// Yellow window on the ↓ line: counts accumulate while the emitter is
    /// NV⁰ ↓, which may recharge or pump to ↑ during the window (exact
    /// event sampling at constant rates). Spin relaxation is negligible on
    /// this timescale but included.
    pub fn yellow_window(&mut self, power_nw: f64, duration: f64) -> u64 {
        let bright_rate = self.cfg.nv0_bright_counts / self.cfg.check_nv0.duration_s * self.detuning_factor();
        let dark_rate = self.cfg.nv0_dark_counts / self.cfg.check_nv0.duration_s;
        let r = self.cfg.recharge_per_nw * power_nw;
        let p = self.cfg.spin_pump_per_nw * power_nw;
        let s = 0.5 / self.cfg.tau_spin_s;
        let mut t = 0.0;
        let mut mean = 0.0;
        while t < duration {
            let left = duration - t;
            match (self.state.charge, self.state.spin) {
                (Charge::NvZero, Some(SpinState::Down)) => {
                    let out = r + p + s;
                    let dt = -(1.0 - self.rng.random::<f64>()).ln() / out;
                    if dt >= left {
                        mean += bright_rate * left;
                        break;
                    }
                    mean += bright_rate * dt;
                    t += dt;
                    let u = self.rng.random::<f64>() * out;
                    if u < r {
                        self.state.charge = Charge::NvMinus;
                        self.state.spin = None;
                    } else {
                        self.state.spin = Some(SpinState::Up);
                    }
                }
                (Charge::NvZero, Some(SpinState::Up)) => {
                    let dt = -(1.0 - self.rng.random::<f64>()).ln() / s;
                    if dt >= left {
                        mean += dark_rate * left;
                        break;
                    }
                    mean += dark_rate * dt;
                    t += dt;
                    self.state.spin = Some(SpinState::Down);
                }
                _ => {
                    mean += dark_rate * left;
                    break;
                }
            }
        }
        self.state.clock_s += duration;
        poisson(mean, &mut self.rng)
    }

    pub fn check_nv0(&mut self) -> (u64, Step) {
        let s = self.cfg.check_nv0;
        let start = self.state.clock_s;
        let c = self.yellow_window(s.power_nw, s.duration_s);
        let pass = c > s.threshold;
        self.record(StepKind::CheckNv0, start, s.duration_s, Some(c), if pass { "heralded" } else { "check_nv_minus" });
        (c, if pass { Step::Heralded } else { Step::Goto(StepKind::CheckNvMinus) })
    }

    /// Runs the loop from `entry` until a herald, tallying into `stats`.
    pub fn herald_from(&mut self, entry: StepKind, stats: &mut ProtocolStats) -> Result<()> {
        let mut step = entry;
        for _ in 0..self.cfg.max_steps_per_herald {
            match step {
                StepKind::Reset => {
                    stats.resets += 1;
                    self.reset();
                    step = StepKind::CheckNvMinus;
                }
                StepKind::CheckNvMinus => {
                    stats.nv_minus_checks += 1;
                    let (c, next) = self.check_nv_minus();
                    stats.push_count(StepKind::CheckNvMinus, c);
                    if let Step::Goto(s) = next {
                        step = s;
                    }
                }
                StepKind::Ionise => {
                    stats.ionise_pulses += 1;
                    self.ionise();
                    step = StepKind::CheckNv0;
                }
                StepKind::CheckNv0 => {
                    stats.nv0_checks += 1;
                    let dark = !self.state.is_bright_nv0();
                    if dark {
                        stats.dark_nv0_checks += 1;
                    }
                    let (c, next) = self.check_nv0();
                    stats.push_count(StepKind::CheckNv0, c);
                    match next {
                        Step::Heralded => {
                            if dark {
                                stats.dark_heralds += 1;
                            }
                            return Ok(());
                        }
                        Step::Goto(s) => step = s,
                    }
                }
                StepKind::CheckNvMinusAfter | StepKind::Wait => step = StepKind::CheckNvMinus,
            }
        }
        Err(crate::Error::Invariant(format!("no herald within {} protocol steps", self.cfg.max_steps_per_herald)))
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ProtocolStats {
    pub heralds: u64,
    pub resets: u64,
    pub nv_minus_checks: u64,
    pub ionise_pulses: u64,
    pub nv0_checks: u64,
    /// NV⁰ checks entered while not in NV⁰ ↓.
    pub dark_nv0_checks: u64,
    /// Heralds issued while the check began in a dark state.
    pub dark_heralds: u64,
    /// Heralds after which the emitter was NV⁰ (respectively NV⁰ ↓).
    pub prepared_nv0: u64,
    pub prepared_down: u64,
    /// NV⁻ detections in the post-experiment check.
    pub nv_minus_after: u64,
    pub total_time_s: f64,
    /// Occurrences per photon count, by step.
    pub count_histograms: BTreeMap<String, Vec<u64>>,
}

impl ProtocolStats {
    fn push_count(&mut self, step: StepKind, c: u64) {
        let h = self.count_histograms.entry(step.label().to_string()).or_default();
        if h.len() <= c as usize {
            h.resize(c as usize + 1, 0);
        }
        h[c as usize] += 1;
    }

    /// Heralds per NV⁰ check.
    pub fn herald_success_rate(&self) -> f64 {
        self.heralds as f64 / self.nv0_checks.max(1) as f64
    }

    pub fn mean_overhead_s(&self) -> f64 {
        self.total_time_s / self.heralds.max(1) as f64
    }

    pub fn charge_fidelity(&self) -> f64 {
        self.prepared_nv0 as f64 / self.heralds.max(1) as f64
    }

    pub fn spin_fidelity(&self) -> f64 {
        self.prepared_down as f64 / self.heralds.max(1) as f64
    }

    /// Heralds per NV⁰ check that began dark.
    pub fn false_herald_rate(&self) -> f64 {
        self.dark_heralds as f64 / self.dark_nv0_checks.max(1) as f64
    }

    pub fn nv_minus_after_fraction(&self) -> f64 {
        self.nv_minus_after as f64 / self.heralds.max(1) as f64
    }
}

/// Runs `n_heralds` protocol cycles from a green reset: herald, wait the
/// post-herald delay, check for NV⁻, then re-enter at the NV⁰ check (or
/// the NV⁻ check when NV⁻ was seen). Event log returned when enabled.
pub fn run_cr_protocol(cfg: &ProtocolConfig, n_heralds: u64, seed: u64) -> Result<(ProtocolStats, Vec<ProtocolEvent>)> {
    cfg.validate()?;
    let rng = super::shot_rng(seed, 0);
    let mut em = Emitter::new(cfg, ProtocolState::nv_minus(), rng);
    let mut stats = ProtocolStats::default();
    let mut entry = StepKind::Reset;
    for _ in 0..n_heralds {
        em.herald_from(entry, &mut stats)?;
        stats.heralds += 1;
        if em.state.charge == Charge::NvZero {
            stats.prepared_nv0 += 1;
        }
        if em.state.is_bright_nv0() {
            stats.prepared_down += 1;
        }
        em.wait(cfg.post_herald_delay_s);
        let (c, nvm) = em.check_nv_minus_after();
        stats.push_count(StepKind::CheckNvMinusAfter, c);
        if nvm {
            stats.nv_minus_after += 1;
        }
        entry = if nvm { StepKind::CheckNvMinus } else { StepKind::CheckNv0 };
    }
    stats.total_time_s = em.state.clock_s;
    Ok((stats, em.log))
}
