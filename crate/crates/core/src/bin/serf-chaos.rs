use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use serf_chaos::experiment::{self, ExperimentConfig, ExperimentError, RunOptions, Scenario};

/// Kicked SERF magnetometer simulation and Fisher-information analysis.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// JSON configuration file; defaults apply when omitted.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// serf_compare, serf_single or kicked_top_sweep.
    #[arg(long, value_name = "NAME")]
    scenario: Option<String>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for independent trajectories.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Treat configuration warnings as errors.
    #[arg(long)]
    strict: bool,
    /// Rerun with refined time step, Doppler grid and field offset.
    #[arg(long)]
    converge: bool,
}

fn execute(cli: Cli) -> Result<experiment::RunArtifacts, ExperimentError> {
    let cfg = match &cli.config {
        Some(p) => experiment::load_config(p, false)?.0,
        None => ExperimentConfig::default(),
    };
    let scenario = cli.scenario.as_deref().map(str::parse::<Scenario>).transpose()?;
    let opts = RunOptions {
        scenario,
        output_dir: cli.out,
        workers: cli.workers,
        strict: cli.strict,
        converge: cli.converge,
    };
    experiment::run(cfg, &opts)
}

fn main() -> ExitCode {
    env_logger::Builder::new()
        .filter_level(log::LevelFilter::Info)
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(files) => {
            println!("{}", files.csv.display());
            println!("{}", files.summary.display());
            println!("{}", files.log.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
