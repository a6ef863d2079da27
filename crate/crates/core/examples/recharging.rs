//! NV⁻ recovery under yellow light for linear and circular polarization.

use nv0::dynamics::{calibrate_recharge_rate, simulate_recharging, LindbladConfig, RechargeConfig, RechargeDrive};
use nv0::estimation::{fit_named, FitData, FitSettings};

fn main() -> nv0::Result<()> {
    let base = LindbladConfig::preset_4k65();
    let rate = calibrate_recharge_rate(&base, 9.3, 5.0)?;
    let cfg = LindbladConfig { recharge: Some(RechargeConfig { rate_per_nw: rate, rescale: 1.0 }), ..base };
    println!("recharge rate per excited level: {rate:.1} /s/nW");
    let bounds = FitSettings::default().with_bounds(vec![0.0, 0.0, 0.0], vec![1.0, f64::INFINITY, f64::INFINITY]);
    for p in [2.0, 10.0, 30.0] {
        for drive in [RechargeDrive::Linear, RechargeDrive::Circular] {
            let c = simulate_recharging(p, drive, 2.0, 1001, &cfg, 1)?;
            let tau0 = 1.0 / (9.3 * p);
            let fit =
                fit_named("double_exp_recharge", &FitData::new(c.t_s, c.nv_minus), &[0.5, tau0, 10.0 * tau0], &bounds)?;
            let (a, b) = (fit.params[1], fit.params[2]);
            println!("{p:>4} nW {drive:?}: fast {:.2} ms, slow {:.1} ms", 1e3 * a.min(b), 1e3 * a.max(b));
        }
    }
    Ok(())
}
