//! Fit an Orbach law to noisy recovery rates between 4.65 K and 11.8 K.

use nv0::estimation::{fit_named, FitData, FitSettings};
use nv0::rate_models::temperature_model_orbach;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> nv0::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let noise = Normal::new(0.0, 0.1).unwrap();
    let t: Vec<f64> = (0..10).map(|k| 4.65 + 0.795 * k as f64).collect();
    let rate: Vec<f64> =
        t.iter().map(|&x| temperature_model_orbach(x, 0.53, 1e7, 12.0) * (1.0 + noise.sample(&mut rng))).collect();
    let sigma = rate.iter().map(|r| 0.1 * r).collect();
    for (x, r) in t.iter().zip(&rate) {
        println!("{x:>6.2} K  {r:.3} MHz");
    }
    let fit =
        fit_named("orbach", &FitData::new(t, rate).with_sigma(sigma), &[0.5, 1e7, 12.0], &FitSettings::default())?;
    println!(
        "A = {:.3} MHz/K, B = {:.2e} MHz, Delta = {:.2} +- {:.2} meV",
        fit.params[0], fit.params[1], fit.params[2], fit.uncertainties[2]
    );
    Ok(())
}
