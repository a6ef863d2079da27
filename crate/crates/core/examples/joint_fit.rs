//! Joint fit of l, λ and one strain per emitter to contrasts and
//! splittings, followed by a strain scan with literature parameters.

use nv0::estimation::{
    delta_spin_exclusion, joint_finestructure_fit, predict_observables, FitMethod, JointFitOptions, Measured,
    NvObservables,
};
use nv0::nv_model::FineStructureParams;

fn main() -> nv0::Result<()> {
    let data: Vec<NvObservables> = [("A", 1.9), ("B", 3.2), ("C", 7.2)]
        .iter()
        .map(|&(name, eps)| {
            let v = predict_observables(&FineStructureParams::new(0.040, 4.5, eps), 1.0).unwrap();
            let m = |x: f64| Some(Measured::new(x, 0.05 * x.abs().max(1e-3)));
            NvObservables {
                name: name.into(),
                orbit_contrast: m(v[0]),
                spin_orbit_contrast: m(v[1]),
                delta_spin_mhz: m(v[2]),
                delta_spin_orbit_mhz: m(v[3]),
            }
        })
        .collect();

    let fit = joint_finestructure_fit(&data, FitMethod::FreeStrain, None, &JointFitOptions::default())?;
    println!("l = {:.4} +- {:.4}", fit.l, fit.l_sigma);
    println!("lambda = {:.3} +- {:.3} GHz", fit.lambda_ghz, fit.lambda_sigma_ghz);
    for (d, (e, s)) in data.iter().zip(fit.strains_ghz.iter().zip(&fit.strain_sigmas_ghz)) {
        println!("strain {} = {e:.3} +- {s:.3} GHz", d.name);
    }

    let grid: Vec<f64> = (0..=2000).map(|k| 0.01 * k as f64).collect();
    let rep = delta_spin_exclusion(&data, 0.0186, 2.24, &grid, &FineStructureParams::default(), 1.0)?;
    println!("literature parameters excluded for every strain: {}", rep.excluded);
    for e in &rep.entries {
        println!("  closest approach {:.1} sigma", e.min_misfit_sigma);
    }
    Ok(())
}
