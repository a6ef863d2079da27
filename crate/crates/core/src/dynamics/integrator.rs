//! Dormand–Prince 5(4) with step-size control and the standard
//! fourth-order continuous extension for output between steps.

use super::system::Mat7;
use crate::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Upper bound on the internal step, ns.
    pub max_step_ns: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_steps: 50_000_000, max_step_ns: f64::INFINITY }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Trace drift that is silently tolerated.
pub(crate) const TRACE_RENORMALIZE: f64 = 1e-8;
/// Trace drift that aborts the integration.
pub(crate) const TRACE_FAIL: f64 = 1e-6;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn err_norm(e: &Mat7, y0: &Mat7, y1: &Mat7, dim: usize, opts: &IntegratorOptions) -> f64 {
    let mut acc = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let sc_re = opts.atol + opts.rtol * y0[(i, j)].re.abs().max(y1[(i, j)].re.abs());
            let sc_im = opts.atol + opts.rtol * y0[(i, j)].im.abs().max(y1[(i, j)].im.abs());
            acc += (e[(i, j)].re / sc_re).powi(2) + (e[(i, j)].im / sc_im).powi(2);
        }
    }
    (acc / (2 * dim * dim) as f64).sqrt()
}

fn trace(y: &Mat7, dim: usize) -> f64 {
    (0..dim).map(|k| y[(k, k)].re).sum()
}

/// Statistics of one integration.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct IntegrationStats {
    pub accepted: usize,
    pub rejected: usize,
    pub max_trace_deviation: f64,
}

/// Integrate `dy/dt = f(t, y)` from `t0`, calling `output(k, y)` at each
/// `outputs[k]` (ascending, ≥ t0). Integration restarts at every
/// breakpoint so kinks in the drive are never stepped across.
#[allow(clippy::too_many_arguments)]
pub(crate) fn integrate<F, O>(
    f: F,
    t0: f64,
    y0: Mat7,
    dim: usize,
    outputs: &[f64],
    breakpoints: &[f64],
    opts: &IntegratorOptions,
    mut output: O,
) -> Result<(Mat7, IntegrationStats)>
where
    F: Fn(f64, &Mat7) -> Mat7,
    O: FnMut(usize, &Mat7) -> Result<()>,
{
    let mut stats = IntegrationStats::default();
    let Some(&t_end) = outputs.last() else {
        return Ok((y0, stats));
    };
    if outputs.windows(2).any(|w| !(w[1] >= w[0])) || outputs[0] < t0 {
        return Err(Error::invalid("grid", "output times must be ascending and >= t0"));
    }
    let mut stops: Vec<f64> = breakpoints.iter().copied().filter(|&b| b > t0 && b < t_end).collect();
    stops.push(t_end);
    stops.sort_by(f64::total_cmp);
    stops.dedup();

    let mut y = y0;
    let mut t = t0;
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t0 {
        output(next_out, &y)?;
        next_out += 1;
    }
    let mut h_guess: Option<f64> = None;
    for &stop in &stops {
        let mut k1 = f(t, &y);
        let span = stop - t;
        if span <= 0.0 {
            continue;
        }
        let mut h = h_guess.unwrap_or_else(|| initial_step(&f, t, &y, &k1, dim, opts)).min(span).min(opts.max_step_ns);
        loop {
            if stats.accepted + stats.rejected >= opts.max_steps {
                return Err(Error::Integration { time_ns: t, reason: "step budget exhausted".into() });
            }
            let last = t + h >= stop - 1e-12 * stop.abs().max(1.0);
            if last {
                h = stop - t;
            }
            let k2 = f(t + C2 * h, &(y + k1 * c(h * A21)));
            let k3 = f(t + C3 * h, &(y + k1 * c(h * A31) + k2 * c(h * A32)));
            let k4 = f(t + C4 * h, &(y + k1 * c(h * A41) + k2 * c(h * A42) + k3 * c(h * A43)));
            let k5 = f(t + C5 * h, &(y + k1 * c(h * A51) + k2 * c(h * A52) + k3 * c(h * A53) + k4 * c(h * A54)));
            let k6 = f(
                t + h,
                &(y + k1 * c(h * A61) + k2 * c(h * A62) + k3 * c(h * A63) + k4 * c(h * A64) + k5 * c(h * A65)),
            );
            let y1 = y + k1 * c(h * A71) + k3 * c(h * A73) + k4 * c(h * A74) + k5 * c(h * A75) + k6 * c(h * A76);
            let t1 = if last { stop } else { t + h };
            let k7 = f(t1, &y1);
            let e = (k1 * c(E1) + k3 * c(E3) + k4 * c(E4) + k5 * c(E5) + k6 * c(E6) + k7 * c(E7)) * c(h);
            let err = err_norm(&e, &y, &y1, dim, opts);
            if !err.is_finite() {
                return Err(Error::Integration { time_ns: t, reason: "non-finite state".into() });
            }
            if err <= 1.0 {
                // dense output for every requested time in (t, t1]
                if next_out < outputs.len() && outputs[next_out] <= t1 {
                    let r2 = y1 - y;
                    let r3 = k1 * c(h) - r2;
                    let r4 = r2 - k7 * c(h) - r3;
                    let r5 = (k1 * c(D1) + k3 * c(D3) + k4 * c(D4) + k5 * c(D5) + k6 * c(D6) + k7 * c(D7)) * c(h);
                    while next_out < outputs.len() && outputs[next_out] <= t1 {
                        let th = ((outputs[next_out] - t) / h).clamp(0.0, 1.0);
                        let th1 = 1.0 - th;
                        let yi = y + (r2 + (r3 + (r4 + r5 * c(th1)) * c(th)) * c(th1)) * c(th);
                        output(next_out, &yi)?;
                        next_out += 1;
                    }
                }
                t = t1;
                y = y1;
                k1 = k7;
                stats.accepted += 1;
                let dev = (trace(&y, dim) - 1.0).abs();
                stats.max_trace_deviation = stats.max_trace_deviation.max(dev);
                if dev > TRACE_FAIL {
                    return Err(Error::Integration { time_ns: t, reason: format!("trace drifted by {dev:.3e}") });
                }
                if dev > TRACE_RENORMALIZE {
                    log::warn!("trace drift {dev:.3e} at t = {t:.3} ns; renormalizing");
                    y /= c(trace(&y, dim));
                }
                let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
                h = (h * fac).min(opts.max_step_ns);
                if last {
                    h_guess = Some(h);
                    break;
                }
            } else {
                stats.rejected += 1;
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-12 * t.abs().max(1.0) {
                    return Err(Error::Integration { time_ns: t, reason: "step size underflow".into() });
                }
            }
        }
    }
    Ok((y, stats))
}

fn initial_step<F: Fn(f64, &Mat7) -> Mat7>(
    f: &F,
    t: f64,
    y: &Mat7,
    k1: &Mat7,
    dim: usize,
    opts: &IntegratorOptions,
) -> f64 {
    let zero = Mat7::zeros();
    let d0 = err_norm(y, y, &zero, dim, opts);
    let d1 = err_norm(k1, y, &zero, dim, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-3 } else { 0.01 * d0 / d1 };
    let y1 = y + k1 * c(h0);
    let k2 = f(t + h0, &y1);
    let d2 = err_norm(&(k2 - k1), y, &zero, dim, opts) / h0;
    let h1 = if d1.max(d2) <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / d1.max(d2)).powf(0.2) };
    (100.0 * h0).min(h1).max(1e-9)
}
