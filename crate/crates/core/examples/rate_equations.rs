//! Analytic three-level populations for spin pumping and charge cycling,
//! checked against direct integration.

use nv0::rate_models::{
    numeric_rate_oracle, solve_charge_cycling, solve_spin_pumping, RatePopulations, ThreeLevelRates,
};

fn main() -> nv0::Result<()> {
    let pumping = ThreeLevelRates::spin_pumping_fit();
    let cycling = ThreeLevelRates::charge_cycling_fit();
    let (c1, c2) = (0.960, 0.012);
    let grid: Vec<f64> = (0..=10).map(|k| 0.1 * k as f64).collect();
    let oracle = numeric_rate_oracle(&pumping, RatePopulations::initial(c1, c2)?, &grid)?;
    println!("   t/s      N       D       U   | integrated U | cycling N");
    for (t, o) in grid.iter().zip(&oracle) {
        let a = solve_spin_pumping(&pumping, c1, c2, *t)?;
        let b = solve_charge_cycling(&cycling, c1, c2, *t)?;
        println!("{t:>6.2}  {:.4}  {:.4}  {:.4} |    {:.4}    |  {:.4}", a.n, a.d, a.u, o.u, b.n);
    }
    Ok(())
}
