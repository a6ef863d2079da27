//! Spin relaxation measured by single-shot readout after a variable wait.

use nv0::estimation::{fit_named, FitData, FitSettings};
use nv0::protocol_sim::{simulate_t1_sweep, ProtocolConfig};

fn main() -> nv0::Result<()> {
    let delays = [0.0, 0.5, 0.75, 1.0, 1.5, 8.0, 10.0, 12.0];
    let pts = simulate_t1_sweep(&delays, 3000, &ProtocolConfig::default(), 1)?;
    for p in &pts {
        println!("{:>5.2} s  P(down) {:.3} +- {:.3}", p.delay_s, p.p_down, p.p_down_sigma);
    }
    let data = FitData::new(pts.iter().map(|p| p.delay_s).collect(), pts.iter().map(|p| p.p_down).collect())
        .with_sigma(pts.iter().map(|p| p.p_down_sigma.max(1e-3)).collect());
    let fit = fit_named("exp_decay", &data, &[0.5, 1.5, 0.5], &FitSettings::default())?;
    println!("T1 {:.3} +- {:.3} s, settles at {:.3}", fit.params[1], fit.uncertainties[1], fit.params[2]);
    Ok(())
}
