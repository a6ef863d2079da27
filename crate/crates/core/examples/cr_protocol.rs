//! Charge-resonance heralding statistics.

use nv0::protocol_sim::{run_cr_protocol, ProtocolConfig};

fn main() -> nv0::Result<()> {
    let (stats, _) = run_cr_protocol(&ProtocolConfig::default(), 5000, 3)?;
    println!("heralds {} from {} resets", stats.heralds, stats.resets);
    println!("herald success rate {:.3}", stats.herald_success_rate());
    println!("mean overhead {:.2} ms", 1e3 * stats.mean_overhead_s());
    println!("charge fidelity {:.4}, spin fidelity {:.4}", stats.charge_fidelity(), stats.spin_fidelity());
    println!("false herald rate {:.2e}", stats.false_herald_rate());
    Ok(())
}
