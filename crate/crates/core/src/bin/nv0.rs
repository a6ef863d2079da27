use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = nv0::cli::Cli::parse();
    match nv0::cli::run(&cli) {
        Ok(Some(m)) => println!(
            "{}: wrote {} files to {} in {:.2} s",
            m.command,
            m.outputs.len(),
            m.output_dir.display(),
            m.wall_clock_s
        ),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
