//! Resonant pump traces: the post-pulse decay gives the excited-state
//! lifetime, the early oscillations give the Rabi slope.

use nv0::dynamics::{simulate_pump_trace, simulate_rabi_trace, LindbladConfig};
use nv0::estimation::{fit_named, oscillation_frequency, FitData, FitSettings};

fn main() -> nv0::Result<()> {
    let cfg = LindbladConfig::preset_4k65();
    let pulse = 1000.0;
    for p in [2.0, 4.0, 10.0, 20.0] {
        let tr = simulate_pump_trace(p, pulse, &cfg)?;
        let start = pulse + 20.0 * cfg.pulse.fall_ns + 1.0;
        let (x, y): (Vec<f64>, Vec<f64>) =
            tr.t_ns.iter().zip(&tr.fluorescence).filter(|(t, _)| **t >= start).map(|(t, f)| (t - pulse, *f)).unzip();
        let peak = tr.fluorescence.iter().cloned().fold(0.0, f64::max);
        let fit = fit_named("exp_decay", &FitData::new(x, y.clone()), &[y[0], 20.0, 0.0], &FitSettings::default())?;
        println!("{p:>5} nW: peak {peak:.4}, decay {:.2} +- {:.2} ns", fit.params[1], fit.uncertainties[1]);
    }

    let powers = [40.0, 80.0, 160.0, 320.0];
    let mut freqs = Vec::new();
    for &p in &powers {
        let tr = simulate_rabi_trace(p, 100.0, &cfg)?;
        freqs.push(1e3 * oscillation_frequency(&tr.t_ns, &tr.excited)?);
    }
    let fit = fit_named("rabi", &FitData::new(powers.to_vec(), freqs.clone()), &[5.0], &FitSettings::default())?;
    println!("Rabi frequencies {freqs:.1?} MHz; slope {:.3} MHz/sqrt(nW)", fit.params[0]);
    Ok(())
}
