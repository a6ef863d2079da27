//! Ground-state levels, optical lines and polarization contrasts for the
//! three measured emitters.

use nv0::nv_model::{
    build_ground_hamiltonian, contrasts, diagonalize_ground, splittings, transition_table, FineStructureParams,
};

fn main() -> nv0::Result<()> {
    for (name, eps) in [("A", 1.9), ("B", 3.2), ("C", 7.2)] {
        let p = FineStructureParams::new(0.040, 4.5, eps);
        let eig = diagonalize_ground(&build_ground_hamiltonian(&p))?;
        let s = splittings(&p)?;
        let c = contrasts(&p)?;
        println!("NV {name}: strain {eps} GHz");
        println!("  levels (GHz): {:?}", eig.energies.map(|e| (e / 1e3 * 1e3).round() / 1e3));
        println!(
            "  spin splitting {:.1} MHz, spin-orbit splitting {:.3} GHz",
            s.delta_spin.mhz(),
            s.delta_spin_orbit.mhz() / 1e3
        );
        println!("  orbit contrast {:.3}, spin-orbit contrast {:.3}", c.orbit, c.spin_orbit);
        for row in transition_table(&p)?.rows() {
            println!(
                "    {:<8} {:>10.1} MHz  L {:.3} R {:.3} H {:.3} V {:.3}",
                row.label, row.freq_offset_mhz, row.amp_l, row.amp_r, row.amp_h, row.amp_v
            );
        }
    }
    Ok(())
}
