//! Single-shot readout: Poisson error rates and a simulated fidelity.

use nv0::estimation::{poisson_error_rates, readout_fidelity};
use nv0::protocol_sim::{simulate_ssro, ProtocolConfig};

fn main() -> nv0::Result<()> {
    for thr in 2..=8 {
        let (bright_miss, dark_false) = poisson_error_rates(25.2, 0.171, thr)?;
        println!("threshold {thr}: P(bright < thr) {bright_miss:.2e}, P(dark >= thr) {dark_false:.2e}");
    }
    let cfg = ProtocolConfig::default();
    let h = simulate_ssro(10.0, 3000, &cfg, 20240501)?;
    let f = readout_fidelity(&h.prepared_down, &h.after_delay, cfg.readout_threshold)?;
    println!("F_RO = {:.2} +- {:.2} %", 100.0 * f.f_ro.value, 100.0 * f.f_ro.sigma);
    Ok(())
}
