//! Oscillation frequency of a noise-free simulated trace from the spacing of
//! its local maxima.

use crate::{Error, Result};

/// Local maxima of `y`, refined by a parabola through the three samples
/// around each one. Assumes a uniform grid.
pub fn local_maxima(t: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::invalid("trace", "need matching t and y with at least 3 samples"));
    }
    let dt = t[1] - t[0];
    Ok((1..y.len() - 1)
        .filter(|&k| y[k] > y[k - 1] && y[k] >= y[k + 1])
        .map(|k| {
            let (a, b, c) = (y[k - 1], y[k], y[k + 1]);
            let den = a - 2.0 * b + c;
            let shift = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            t[k] + shift * dt
        })
        .collect())
}

/// Inverse of the first full period, maximum to maximum. The half periods
/// of a driven trace alternate around a drifting mean; a full period
/// averages them. Units are those of `1/t`.
pub fn oscillation_frequency(t: &[f64], y: &[f64]) -> Result<f64> {
    let m = local_maxima(t, y)?;
    if m.len() < 2 {
        return Err(Error::Convergence(format!("need two maxima to measure a period, found {}", m.len())));
    }
    Ok(1.0 / (m[1] - m[0]))
}
