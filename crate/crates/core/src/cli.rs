//! Command-line front end. Each subcommand reads the layered configuration,
//! runs one pipeline, and writes plot-ready CSV, a fit report (`report.txt`
//! and `report.json`) and `manifest.json` into the output directory.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 convergence
//! failure, 4 invariant violation.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::config::{Config, RateScenario, PRESETS};
use crate::dynamics::{self, RechargeDrive};
use crate::estimation::{
    add_poisson_noise, detect_peaks, fit_charge_cycling, fit_named, fit_voigt_multiplet, oscillation_frequency,
    readout_fidelity, synthesize_spectrum, uniform_grid, CyclingFitMode, FitData, FitReport, FitResult, FitSettings,
    SpectrumMeta,
};
use crate::io::{self, write_atomic, RunManifest};
use crate::nv_model::{splittings, transition_table, Polarization};
use crate::protocol_sim::{
    run_cr_protocol, simulate_charge_cycling_experiment, simulate_spin_pumping_experiment, simulate_ssro,
    simulate_t1_sweep,
};
use crate::rate_models::{self, solve_charge_cycling_yellow_axis, solve_spin_pumping};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "nv0", version, about = "NV⁰ fine structure, dynamics and readout simulations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct GlobalArgs {
    /// TOML configuration file, layered over the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Preset used when the file names none (see `nv0 presets`).
    #[arg(long, global = true)]
    pub preset: Option<String>,
    /// Seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Detuning samples for the Lindblad engine and shots for Monte-Carlo runs.
    #[arg(long, global = true)]
    pub samples: Option<u64>,
}

#[derive(Debug, Subcommand, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Four-line spectra per polarization, optionally re-extracted.
    Spectrum,
    /// Fluorescence under resonant pulses at several powers.
    Pump,
    /// Pump-probe orbital recovery.
    PumpProbe,
    /// Three-level charge/spin kinetics and recharging.
    Rates,
    /// CR-check statistics, single-shot readout and T₁.
    Protocol,
    /// Fit a registry model to CSV data (or to self-generated data).
    Fit,
    /// List presets and fit models.
    Presets,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Pump => "pump",
            Command::PumpProbe => "pump-probe",
            Command::Rates => "rates",
            Command::Protocol => "protocol",
            Command::Fit => "fit",
            Command::Presets => "presets",
        }
    }
}

pub fn load_config(g: &GlobalArgs) -> Result<Config> {
    let mut cfg = match &g.config {
        Some(p) => Config::load(p, g.preset.as_deref())?,
        None => Config::preset(g.preset.as_deref().unwrap_or("default"))?,
    };
    cfg.apply_overrides(g.seed, g.samples);
    cfg.validate()?;
    Ok(cfg)
}

/// Output directory plus the manifest being accumulated.
struct Run {
    out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        write_atomic(&self.out.join(name), text.as_bytes())?;
        self.manifest.outputs.push(name.to_string());
        Ok(())
    }

    fn report(&mut self, reports: &[FitReport]) -> Result<()> {
        let text: String = reports.iter().map(|r| r.to_text() + "\n").collect();
        let json = serde_json::Value::Array(reports.iter().map(FitReport::to_json).collect());
        self.write("report.txt", &text)?;
        self.write("report.json", &serde_json::to_string_pretty(&json)?)
    }
}

/// Runs one command; returns the manifest written alongside the outputs.
pub fn run(cli: &Cli) -> Result<Option<RunManifest>> {
    if cli.command == Command::Presets {
        for (name, about) in PRESETS {
            println!("preset {name:<14} {about}");
        }
        for m in rate_models::models() {
            println!("model  {:<20} params [{}] x in {}", m.name, m.params.join(", "), m.x_unit);
        }
        return Ok(None);
    }
    let cfg = load_config(&cli.global)?;
    let started = Instant::now();
    let mut run = Run {
        out: cli.global.out.clone(),
        manifest: RunManifest::new(
            cli.command.name(),
            cli.global.config.clone(),
            cfg.preset.clone(),
            cfg.seed,
            cli.global.out.clone(),
        ),
    };
    run.manifest.samples = cfg.samples;
    std::fs::create_dir_all(&run.out)?;
    run.write("config.toml", &cfg.to_toml_string()?)?;
    let reports = match cli.command {
        Command::Spectrum => cmd_spectrum(&cfg, &mut run)?,
        Command::Pump => cmd_pump(&cfg, &mut run)?,
        Command::PumpProbe => cmd_pump_probe(&cfg, &mut run)?,
        Command::Rates => cmd_rates(&cfg, &mut run)?,
        Command::Protocol => cmd_protocol(&cfg, &mut run)?,
        Command::Fit => cmd_fit(&cfg, &mut run)?,
        Command::Presets => unreachable!(),
    };
    run.report(&reports)?;
    run.manifest.finish(started.elapsed());
    run.manifest.write()?;
    Ok(Some(run.manifest))
}

fn checked(fit: FitResult, what: &str) -> Result<FitResult> {
    if fit.converged {
        Ok(fit)
    } else {
        Err(Error::Convergence(format!("{what} (after {} iterations, rank {})", fit.iterations, fit.rank)))
    }
}

fn cmd_spectrum(cfg: &Config, run: &mut Run) -> Result<Vec<FitReport>> {
    let params = cfg.fine_structure.params();
    let table = transition_table(&params)?;
    let sp = splittings(&params)?;
    let s = &cfg.spectrum;
    let grid = uniform_grid(s.start_mhz, s.stop_mhz, s.step_mhz);
    let rows = table.rows();
    let mut lines = FitReport::new("transitions").row("delta_spin", sp.delta_spin.mhz(), 0.0, "MHz").row(
        "delta_spin_orbit",
        sp.delta_spin_orbit.mhz(),
        0.0,
        "MHz",
    );
    for r in &rows {
        lines = lines.row(format!("{}_offset", r.label), r.freq_offset_mhz, 0.0, "MHz");
    }
    let mut reports = vec![lines];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for name in &s.polarizations {
        let pol = Polarization::from_name(name)?;
        let mut spec = synthesize_spectrum(&table, &pol, &grid, &s.line)?.with_meta(SpectrumMeta {
            polarization: Some(name.clone()),
            power_nw: Some(s.power_nw),
            scan_index: None,
        });
        if s.noise {
            add_poisson_noise(&mut spec, &mut rng);
        }
        run.write(&format!("spectrum_{name}.csv"), &io::spectrum_to_csv(&spec)?)?;
        if s.extract {
            let n = detect_peaks(&spec)?.len().clamp(1, 4);
            let m = fit_voigt_multiplet(&spec, n, s.line.f_l)?;
            let mut r = FitReport::new(format!("voigt multiplet, {name}"))
                .row("background", m.background, m.fit.uncertainties[0], "counts")
                .extra("peaks", n)
                .extra("converged", m.fit.converged);
            for (k, p) in m.peaks.iter().enumerate() {
                r = r
                    .row(format!("center_{k}"), p.center_mhz, p.center_sigma, "MHz")
                    .row(format!("amplitude_{k}"), p.amplitude, p.amplitude_sigma, "counts")
                    .row(format!("gaussian_fwhm_{k}"), p.gaussian_fwhm_mhz, p.gaussian_fwhm_sigma, "MHz");
            }
            reports.push(r);
        }
    }
    Ok(reports)
}

fn cmd_pump(cfg: &Config, run: &mut Run) -> Result<Vec<FitReport>> {
    let mut steady = Vec::new();
    let mut reports = Vec::new();
    let d = cfg.pump.duration_ns;
    for &p in &cfg.pump.powers_nw {
        let tr = dynamics::simulate_pump_trace(p, d, &cfg.lindblad)?;
        if tr.max_trace_deviation > 1e-8 {
            return Err(Error::Invariant(format!("trace deviation {:.2e} at {p} nW", tr.max_trace_deviation)));
        }
        let mut buf = Vec::new();
        tr.write_csv(&mut buf)?;
        let text = format!("# schema=trace/1\n# power_nw={p}\n") + &String::from_utf8_lossy(&buf);
        run.write(&format!("trace_{p}nW.csv"), &text)?;
        // Steady state: mean over the last 10 % of the gate.
        let on: Vec<f64> =
            tr.t_ns.iter().zip(&tr.fluorescence).filter(|(t, _)| **t >= 0.9 * d && **t <= d).map(|(_, f)| *f).collect();
        steady.push(on.iter().sum::<f64>() / on.len().max(1) as f64);
        // Post-pulse decay. The tail of the falling edge re-excites the
        // shrinking population for many fall constants.
        let fall = cfg.lindblad.pulse.fall_ns.max(0.0);
        let (x, y): (Vec<f64>, Vec<f64>) = tr
            .t_ns
            .iter()
            .zip(&tr.fluorescence)
            .filter(|(t, _)| **t >= d + 20.0 * fall + 1.0)
            .map(|(t, f)| (*t - d, *f))
            .unzip();
        let a0 = y.first().copied().unwrap_or(1.0);
        let fit = checked(
            fit_named("exp_decay", &FitData::new(x, y), &[a0, cfg.lindblad.tau_exc_ns, 0.0], &FitSettings::default())?,
            "post-pulse decay",
        )?;
        reports.push(FitReport::from_fit(format!("post-pulse decay at {p} nW"), &fit, &["cts/s", "ns", "cts/s"]));
    }
    let rows = cfg.pump.powers_nw.iter().zip(&steady).map(|(&p, &f)| vec![p, f]);
    run.write("steady_state.csv", &io::table_to_csv(&["power_nw", "fluorescence_cps"], rows, &[])?)?;
    if steady.len() >= 2 {
        let data = FitData::new(cfg.pump.powers_nw.clone(), steady.clone());
        let a0 = steady.iter().cloned().fold(0.0, f64::max) * 1.5;
        let fit = checked(fit_named("saturation", &data, &[a0, 2.5], &FitSettings::default())?, "saturation")?;
        reports.push(FitReport::from_fit("saturation", &fit, &["cts/s", "nW"]));
    }
    let rp = &cfg.pump.rabi_powers_nw;
    if !rp.is_empty() {
        let mut freqs = Vec::with_capacity(rp.len());
        for &p in rp {
            let tr = dynamics::simulate_rabi_trace(p, cfg.pump.rabi_window_ns, &cfg.lindblad)?;
            freqs.push(1e3 * oscillation_frequency(&tr.t_ns, &tr.excited)?);
        }
        let rows = rp.iter().zip(&freqs).map(|(&p, &f)| vec![p, f]);
        run.write("rabi.csv", &io::table_to_csv(&["power_nw", "frequency_mhz"], rows, &[])?)?;
        let fit = checked(
            fit_named(
                "rabi",
                &FitData::new(rp.clone(), freqs),
                &[cfg.lindblad.rabi_slope.max(1.0)],
                &FitSettings::default(),
            )?,
            "rabi slope",
        )?;
        reports.push(FitReport::from_fit("rabi slope", &fit, &["MHz/sqrt(nW)"]));
    }
    Ok(reports)
}

fn cmd_pump_probe(cfg: &Config, run: &mut Run) -> Result<Vec<FitReport>> {
    let pp = &cfg.pump_probe;
    let pts = dynamics::simulate_pump_probe_sweep(&pp.delays_ns, &cfg.lindblad, &pp.options)?;
    let rows = pts.iter().map(|p| vec![p.delay_ns, p.ratio]);
    run.write("pump_probe.csv", &io::table_to_csv(&["delay_ns", "ratio"], rows, &[])?)?;
    let (x, y): (Vec<f64>, Vec<f64>) =
        pts.iter().filter(|p| p.delay_ns >= pp.fit_min_delay_ns).map(|p| (p.delay_ns, p.ratio)).unzip();
    let data = FitData::new(x, y);
    let r0 = pts.iter().find(|p| p.delay_ns >= pp.fit_min_delay_ns).map_or(0.5, |p| p.ratio);
    let r1 = pts.last().map_or(1.0, |p| p.ratio);
    let settings = FitSettings::default().with_fixed(vec![false, false, true, false]);
    let fit =
        checked(fit_named("recovery", &data, &[r0, r1 - r0, 0.0, cfg.lindblad.tau_orbit_ns], &settings)?, "recovery")?;
    let mut reports = vec![FitReport::from_fit("pump-probe recovery", &fit, &["", "", "ns", "ns"])];
    if !pp.temperatures_k.is_empty() && pp.temperatures_k.len() == pp.recovery_rates_per_s.len() {
        let data = FitData::new(pp.temperatures_k.clone(), pp.recovery_rates_per_s.clone());
        let fit = checked(fit_named("orbach", &data, &[0.5, 1e7, 12.0], &FitSettings::default())?, "orbach")?;
        reports.push(FitReport::from_fit("temperature model", &fit, &["1/(s K)", "1/s", "meV"]));
    }
    Ok(reports)
}

fn cmd_rates(cfg: &Config, run: &mut Run) -> Result<Vec<FitReport>> {
    let r = &cfg.rates;
    let grid: Vec<f64> = (0..r.n_points).map(|k| r.t_max_s * k as f64 / (r.n_points - 1) as f64).collect();
    let solve = |t: f64| match r.scenario {
        RateScenario::SpinPumping => solve_spin_pumping(&r.rates, r.c1, r.c2, t),
        RateScenario::ChargeCycling => solve_charge_cycling_yellow_axis(&r.rates, r.c1, r.c2, t),
    };
    let pops = grid.iter().map(|&t| solve(t)).collect::<Result<Vec<_>>>()?;
    let rows = grid.iter().zip(&pops).map(|(&t, p)| vec![t, p.d, p.u, p.n]);
    run.write("rates.csv", &io::table_to_csv(&["t_s", "down", "up", "nv_minus"], rows, &[])?)?;
    let mut reports = vec![FitReport::new("rate model")
        .row("r", r.rates.r, 0.0, "1/s")
        .row("p", r.rates.p, 0.0, "1/s")
        .row("s", r.rates.s, 0.0, "1/s")
        .row("i", r.rates.i, 0.0, "1/s")];
    if r.monte_carlo_shots > 0 {
        // The Monte-Carlo run takes (r, p, s) from the rate section at its power.
        let protocol = crate::protocol_sim::ProtocolConfig {
            pumping_rates: crate::rate_models::ThreeLevelRates { i: 0.0, ..r.rates },
            reference_power_nw: r.power_nw,
            c1: r.c1,
            c2: r.c2,
            ..cfg.protocol.clone()
        };
        let mc = match r.scenario {
            RateScenario::SpinPumping => {
                simulate_spin_pumping_experiment(r.power_nw, &grid, r.monte_carlo_shots, &protocol, cfg.seed)?
            }
            RateScenario::ChargeCycling => {
                let strobe = crate::protocol_sim::StrobeConfig { ionisation_rate: r.rates.i, ..r.strobe };
                simulate_charge_cycling_experiment(
                    r.power_nw,
                    &strobe,
                    &grid,
                    r.monte_carlo_shots,
                    &protocol,
                    cfg.seed,
                )?
            }
        };
        run.write("rates_monte_carlo.csv", &io::populations_to_csv(&mc)?)?;
        if r.scenario == RateScenario::ChargeCycling {
            for (mode, label) in [
                (CyclingFitMode::IonisationOnly, "charge cycling, ionisation only"),
                (CyclingFitMode::Unconstrained, "charge cycling, all free"),
            ] {
                let f = fit_charge_cycling(&mc.t_s, &mc.down, &mc.up, &mc.nv_minus, &r.rates, r.c1, r.c2, mode)?;
                let s = f.rate_sigmas;
                reports.push(
                    FitReport::new(label)
                        .row("r", f.rates.r, s[0], "1/s")
                        .row("p", f.rates.p, s[1], "1/s")
                        .row("s", f.rates.s, s[2], "1/s")
                        .row("i", f.rates.i, s[3], "1/s")
                        .row("chi2", f.fit.chi2, 0.0, ""),
                );
            }
        }
    }
    if !r.recharge_powers_nw.is_empty() {
        let rate = dynamics::calibrate_recharge_rate(&cfg.lindblad, cfg.protocol.recharge_per_nw, 5.0)?;
        let lcfg = cfg.lindblad_with_recharge(rate);
        let mut rows = Vec::new();
        for &drive in &r.recharge_drives {
            for &p in &r.recharge_powers_nw {
                let curve =
                    dynamics::simulate_recharging(p, drive, r.recharge_t_max_s, r.recharge_n_points, &lcfg, cfg.seed)?;
                let label = match drive {
                    RechargeDrive::Linear => "linear",
                    RechargeDrive::Circular => "circular",
                };
                let data = FitData::new(curve.t_s.clone(), curve.nv_minus.clone());
                let tau_fast0 = 1.0 / (cfg.protocol.recharge_per_nw * p.max(1e-3));
                let fit = fit_named(
                    "double_exp_recharge",
                    &data,
                    &[0.5, tau_fast0, 10.0 * tau_fast0],
                    &FitSettings::default().with_bounds(vec![0.0, 0.0, 0.0], vec![1.0, f64::INFINITY, f64::INFINITY]),
                )?;
                let fit = checked(fit, "double exponential")?;
                rows.push(vec![
                    p,
                    if drive == RechargeDrive::Linear { 0.0 } else { 1.0 },
                    fit.params[1],
                    fit.params[2],
                ]);
                let crows = curve.t_s.iter().zip(&curve.nv_minus).map(|(&t, &n)| vec![t, n]);
                run.write(
                    &format!("recharge_{label}_{p}nW.csv"),
                    &io::table_to_csv(&["t_s", "nv_minus"], crows, &[])?,
                )?;
            }
        }
        run.write(
            "recharge_fits.csv",
            &io::table_to_csv(&["power_nw", "circular", "tau_fast_s", "tau_slow_s"], rows.into_iter(), &[])?,
        )?;
        reports.push(FitReport::new("recharging").row("recharge_rate_per_nw", rate, 0.0, "1/(s nW)"));
    }
    Ok(reports)
}

fn cmd_protocol(cfg: &Config, run: &mut Run) -> Result<Vec<FitReport>> {
    let e = &cfg.experiment;
    let (stats, log) = run_cr_protocol(&cfg.protocol, e.n_heralds, cfg.seed)?;
    run.write("protocol_stats.json", &serde_json::to_string_pretty(&stats)?)?;
    if !log.is_empty() {
        run.write("events.log", &log.iter().map(|l| l.to_string() + "\n").collect::<String>())?;
    }
    let ssro = simulate_ssro(e.ssro_delay_s, e.ssro_shots, &cfg.protocol, cfg.seed)?;
    run.write("histogram_prepared_down.csv", &io::histogram_to_csv(&ssro.prepared_down)?)?;
    run.write("histogram_after_delay.csv", &io::histogram_to_csv(&ssro.after_delay)?)?;
    let f = readout_fidelity(&ssro.prepared_down, &ssro.after_delay, cfg.protocol.readout_threshold)?;
    let mut reports = vec![
        FitReport::new("charge-resonance protocol")
            .row("herald_success_rate", stats.herald_success_rate(), 0.0, "")
            .row("mean_overhead", stats.mean_overhead_s(), 0.0, "s")
            .row("charge_fidelity", stats.charge_fidelity(), 0.0, "")
            .row("spin_fidelity", stats.spin_fidelity(), 0.0, "")
            .row("false_herald_rate", stats.false_herald_rate(), 0.0, "")
            .row("nv_minus_after_fraction", stats.nv_minus_after_fraction(), 0.0, ""),
        FitReport::new("readout fidelity")
            .row("F_RO", f.f_ro.value, f.f_ro.sigma, "")
            .row("F_down_given_down", f.f_down_given_down.value, f.f_down_given_down.sigma, "")
            .row("F_up_given_down", f.f_up_given_down.value, f.f_up_given_down.sigma, "")
            .row("F_up_given_up", f.f_up_given_up.value, f.f_up_given_up.sigma, "")
            .row("F_down_given_up", f.f_down_given_up.value, f.f_down_given_up.sigma, "")
            .row("nv_minus_discarded", ssro.prepared_down.discarded_fraction(), 0.0, ""),
    ];
    if e.t1_delays_s.len() >= 3 {
        let pts = simulate_t1_sweep(&e.t1_delays_s, e.t1_shots, &cfg.protocol, cfg.seed)?;
        let rows = pts.iter().map(|p| vec![p.delay_s, p.p_down, p.p_down_sigma, p.histogram.discarded as f64]);
        run.write("t1.csv", &io::table_to_csv(&["delay_s", "p_down", "sigma", "discarded"], rows, &[])?)?;
        let data = FitData::new(pts.iter().map(|p| p.delay_s).collect(), pts.iter().map(|p| p.p_down).collect())
            .with_sigma(pts.iter().map(|p| p.p_down_sigma.max(1e-4)).collect());
        let fit = checked(
            fit_named("exp_decay", &data, &[0.5, cfg.protocol.tau_spin_s, 0.5], &FitSettings::default())?,
            "T1",
        )?;
        reports.push(FitReport::from_fit("spin relaxation", &fit, &["", "s", ""]));
    }
    Ok(reports)
}

fn cmd_fit(cfg: &Config, run: &mut Run) -> Result<Vec<FitReport>> {
    let f = &cfg.fit;
    let spec = rate_models::model(&f.model)?;
    let init: Vec<f64> = if f.init.is_empty() { spec.default_init.to_vec() } else { f.init.clone() };
    if init.len() != spec.params.len() {
        return Err(Error::Config(format!(
            "fit.init needs {} values for {} ({}), got {}",
            spec.params.len(),
            spec.name,
            spec.params.join(", "),
            init.len()
        )));
    }
    let data = match &f.data {
        Some(path) => read_fit_data(path, &f.x_column, &f.y_column, f.sigma_column.as_deref())?,
        None => self_generated(spec, &init, cfg.seed)?,
    };
    let mut settings = FitSettings::default();
    if let (Some(lo), Some(hi)) = (&f.lower, &f.upper) {
        settings = settings.with_bounds(lo.clone(), hi.clone());
    }
    match &f.fixed {
        Some(fixed) => settings = settings.with_fixed(fixed.clone()),
        None if !spec.default_fixed.is_empty() => {
            let mask = (0..init.len()).map(|k| spec.default_fixed.contains(&k)).collect();
            settings = settings.with_fixed(mask);
        }
        None => {}
    }
    let fit = checked(fit_named(&f.model, &data, &init, &settings)?, &f.model)?;
    let rows = data.x.iter().zip(&data.y).map(|(&x, &y)| vec![x, y, (spec.eval)(x, &fit.params)]);
    run.write("fit.csv", &io::table_to_csv(&["x", "y", "model"], rows, &[("model", f.model.clone())])?)?;
    Ok(vec![FitReport::from_fit(format!("fit {}", f.model), &fit, &[])])
}

fn read_fit_data(path: &Path, x: &str, y: &str, sigma: Option<&str>) -> Result<FitData> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    io::fit_data_from_csv(&text, x, y, sigma)
}

/// 40 points of the model at `params` with 1 % Gaussian noise, over a span
/// set by the model's domain.
fn self_generated(spec: &rate_models::ModelSpec, params: &[f64], seed: u64) -> Result<FitData> {
    let hi = if spec.domain.0 >= 0.0 { 20.0 } else { 10.0 };
    let lo = if spec.domain.0 > 0.0 || spec.name == "orbach" || spec.name == "raman" { 1.0 } else { 0.0 };
    let x: Vec<f64> = (0..40).map(|k| lo + (hi - lo) * k as f64 / 39.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 0.01).map_err(|e| Error::Config(e.to_string()))?;
    let y: Vec<f64> = x.iter().map(|&v| (spec.eval)(v, params) * (1.0 + noise.sample(&mut rng))).collect();
    let sigma: Vec<f64> = x.iter().map(|&v| ((spec.eval)(v, params) * 0.01).abs().max(1e-12)).collect();
    let d = FitData::new(x, y).with_sigma(sigma);
    d.validate()?;
    Ok(d)
}
