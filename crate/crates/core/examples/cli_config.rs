//! Presets and TOML round trip of the run configuration used by the CLI.

use nv0::config::Config;

fn main() -> nv0::Result<()> {
    let cfg = Config::preset("nv_b")?;
    let text = cfg.to_toml_string()?;
    println!("{text}");
    let edited = format!("{text}\n");
    let back = Config::from_toml_str(&edited, None)?;
    back.validate()?;
    println!("strain after round trip: {:?}", back.fine_structure.params().eps_perp.mhz() / 1e3);
    Ok(())
}
