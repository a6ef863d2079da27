//! Pump-probe recovery of the orbital population at 4.65 K.

use nv0::dynamics::{simulate_pump_probe_sweep, LindbladConfig, PumpProbeOptions};
use nv0::estimation::{fit_named, FitData, FitSettings};

fn main() -> nv0::Result<()> {
    let cfg = LindbladConfig::preset_4k65();
    let delays: Vec<f64> = [100.0, 200.0, 300.0, 500.0, 700.0, 1000.0, 1500.0, 2000.0, 3000.0].to_vec();
    let pts = simulate_pump_probe_sweep(&delays, &cfg, &PumpProbeOptions::default())?;
    for p in &pts {
        println!("{:>6.0} ns  {:.4}", p.delay_ns, p.ratio);
    }
    let data = FitData::new(delays, pts.iter().map(|p| p.ratio).collect());
    let (r0, r1) = (pts[0].ratio, pts[pts.len() - 1].ratio);
    let settings = FitSettings::default().with_fixed(vec![false, false, true, false]);
    let fit = fit_named("recovery", &data, &[r0, r1 - r0, 0.0, 400.0], &settings)?;
    println!("recovery time {:.1} +- {:.1} ns", fit.params[3], fit.uncertainties[3]);
    Ok(())
}
