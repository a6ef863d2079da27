//! Synthesize a PL scan of the four lines under horizontal light, locate
//! the maxima and fit a Voigt multiplet with the lifetime-limited width.

use nv0::estimation::{find_peaks, fit_voigt_multiplet, synthesize_spectrum, uniform_grid, LineShape};
use nv0::nv_model::{transition_table, FineStructureParams, Polarization};

fn main() -> nv0::Result<()> {
    let table = transition_table(&FineStructureParams::new(0.040, 4.5, 1.9))?;
    let offsets: Vec<f64> = table.entries.iter().map(|t| t.frequency_offset.mhz()).collect();
    let lo = offsets.iter().cloned().fold(f64::INFINITY, f64::min) - 150.0;
    let hi = offsets.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 150.0;
    let lower: Vec<f64> = offsets.iter().cloned().filter(|f| *f < 0.5 * (lo + hi)).collect();
    println!("line offsets (MHz): {offsets:.1?}");

    let shape = LineShape::default();
    let grid = uniform_grid(lo, lo + 0.5 * (hi - lo), 1.0);
    let spec = synthesize_spectrum(&table, &Polarization::horizontal(), &grid, &shape)?;
    println!("maxima found at {:.1?}", find_peaks(&spec)?);

    let fit = fit_voigt_multiplet(&spec, lower.len(), shape.f_l)?;
    for pk in &fit.peaks {
        println!(
            "  centre {:.2} +- {:.2} MHz, height {:.1}, Gaussian FWHM {:.2} MHz",
            pk.center_mhz, pk.center_sigma, pk.amplitude, pk.gaussian_fwhm_mhz
        );
    }
    println!("background {:.2}, converged {}", fit.background, fit.fit.converged);
    Ok(())
}
