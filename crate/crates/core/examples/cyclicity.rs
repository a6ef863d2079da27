//! Photons per cycle before a charge or spin loss, and the linewidth set
//! by spectral diffusion.

use nv0::dynamics::{cycling_excited_population, LindbladConfig};
use nv0::rate_models::{cyclicity, power_broadened_fwhm, voigt_fwhm};

fn main() -> nv0::Result<()> {
    let cfg = LindbladConfig::preset_4k65();
    for p in [0.5, 1.0, 5.0, 20.0] {
        println!(
            "{p:>5} nW: excited {:.4}, cycles before recharge loss {:.3e}, before spin loss {:.3e}",
            cycling_excited_population(&cfg, p)?,
            cyclicity(0.027, &cfg, p)?,
            cyclicity(0.090, &cfg, p)?
        );
    }
    println!("zero-power linewidth {:.2} MHz", voigt_fwhm(7.6, 25.1));
    for p in [0.5, 22.0, 160.0] {
        println!("{p:>5} nW linewidth {:.1} MHz", power_broadened_fwhm(p, 18.6, 25.1, 7.6));
    }
    Ok(())
}
