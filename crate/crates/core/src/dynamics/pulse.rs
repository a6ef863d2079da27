use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Optical power envelope: a list of rectangular gates filtered by the
/// modulator's first-order response. At every edge the power relaxes
/// toward the new target with the rise constant when the target is above
/// the current value and the fall constant otherwise, so short gaps leave
/// pulses partially merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PulseShape {
    pub rise_ns: f64,
    pub fall_ns: f64,
    /// `(t_on, t_off, power_nW)` gates, non-overlapping.
    pub gates: Vec<(f64, f64, f64)>,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self { rise_ns: 30.0, fall_ns: 7.0, gates: Vec::new() }
    }
}

impl PulseShape {
    pub fn single(t_on: f64, t_off: f64, power_nw: f64) -> Self {
        Self { gates: vec![(t_on, t_off, power_nw)], ..Self::default() }
    }

    pub fn constant(power_nw: f64) -> Self {
        Self { gates: vec![(f64::NEG_INFINITY, f64::INFINITY, power_nw)], ..Self::default() }
    }

    pub fn with_gate(mut self, t_on: f64, t_off: f64, power_nw: f64) -> Self {
        self.gates.push((t_on, t_off, power_nw));
        self.gates.sort_by(|a, b| a.0.total_cmp(&b.0));
        self
    }

    pub fn with_edges(mut self, rise_ns: f64, fall_ns: f64) -> Self {
        self.rise_ns = rise_ns;
        self.fall_ns = fall_ns;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rise_ns >= 0.0 && self.fall_ns >= 0.0) {
            return Err(Error::invalid("pulse", "rise/fall constants must be >= 0"));
        }
        let mut last_off = f64::NEG_INFINITY;
        let mut sorted = self.gates.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        for &(on, off, p) in &sorted {
            if !(off > on) || !(p >= 0.0) || on.is_nan() {
                return Err(Error::invalid("pulse", format!("bad gate ({on}, {off}, {p})")));
            }
            if on < last_off {
                return Err(Error::invalid("pulse", "gates overlap"));
            }
            last_off = off;
        }
        Ok(())
    }

    /// Finite edge times, ascending.
    pub fn edges(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self.gates.iter().flat_map(|g| [g.0, g.1]).filter(|t| t.is_finite()).collect();
        e.sort_by(f64::total_cmp);
        e.dedup();
        e
    }

    /// Segments `(t_start, value_at_start, target, tau)`, ascending.
    fn segments(&self) -> Vec<(f64, f64, f64, f64)> {
        let mut events: Vec<(f64, f64)> = Vec::new();
        let mut gates = self.gates.clone();
        gates.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut initial = 0.0;
        for &(on, off, p) in &gates {
            if on.is_finite() {
                events.push((on, p));
            } else {
                initial = p;
            }
            if off.is_finite() {
                events.push((off, 0.0));
            }
        }
        let mut segs = vec![(f64::NEG_INFINITY, initial, initial, 1.0)];
        for (t, target) in events {
            let value = self.eval_segment(segs.last().copied().unwrap(), t);
            let tau = if target >= value { self.rise_ns } else { self.fall_ns };
            segs.push((t, value, target, tau));
        }
        segs
    }

    fn eval_segment(&self, seg: (f64, f64, f64, f64), t: f64) -> f64 {
        let (t0, v0, target, tau) = seg;
        if !t0.is_finite() || tau == 0.0 {
            return target;
        }
        target + (v0 - target) * (-(t - t0) / tau).exp()
    }

    /// Power at time `t`, nW.
    pub fn power(&self, t: f64) -> f64 {
        let segs = self.segments();
        let k = segs.partition_point(|s| s.0 <= t).saturating_sub(1);
        self.eval_segment(segs[k], t).max(0.0)
    }

    /// Evaluate on many ascending times without rebuilding the segments.
    pub fn sampler(&self) -> PulseSampler {
        PulseSampler { segs: self.segments(), shape: self.clone() }
    }
}

#[derive(Clone, Debug)]
pub struct PulseSampler {
    segs: Vec<(f64, f64, f64, f64)>,
    shape: PulseShape,
}

impl PulseSampler {
    pub fn power(&self, t: f64) -> f64 {
        let k = self.segs.partition_point(|s| s.0 <= t).saturating_sub(1);
        self.shape.eval_segment(self.segs[k], t).max(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rise_and_fall() {
        let p = PulseShape::single(0.0, 500.0, 5.0);
        assert_eq!(p.power(-1.0), 0.0);
        assert!((p.power(30.0) - 5.0 * (1.0 - (-1.0f64).exp())).abs() < 1e-12);
        let at_off = p.power(500.0);
        assert!((p.power(507.0) - at_off * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn merged_pulses_start_from_residual_power() {
        let p = PulseShape::single(0.0, 100.0, 5.0).with_gate(105.0, 200.0, 5.0);
        let at_105 = p.power(105.0);
        assert!(at_105 > 0.0);
        assert!((p.power(135.0) - (5.0 + (at_105 - 5.0) * (-1.0f64).exp())).abs() < 1e-12);
    }

    #[test]
    fn constant_and_validation() {
        assert_eq!(PulseShape::constant(3.0).power(1e9), 3.0);
        assert!(PulseShape::single(10.0, 5.0, 1.0).validate().is_err());
        assert!(PulseShape::single(0.0, 10.0, 1.0).with_gate(5.0, 20.0, 1.0).validate().is_err());
        let s = PulseShape::single(0.0, 10.0, 1.0).sampler();
        assert_eq!(s.power(5.0), PulseShape::single(0.0, 10.0, 1.0).power(5.0));
    }
}
