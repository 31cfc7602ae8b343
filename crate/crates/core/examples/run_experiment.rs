//! Library-level scenario run: build a configuration, compare kicked and
//! unkicked magnetometers and write the CSV, JSON and log files.
//!
//! cargo run --release --example run_experiment -- [OUT_DIR]
use serf_chaos::experiment::{self, ExperimentConfig, RunOptions};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "out/example".into());
    // strong spin destruction moves the optimum to about 1.5 s, so a short run brackets it
    let cfg = ExperimentConfig::from_json(
        r#"{"r_sd_hz": 5.0, "total_time_s": 3.0, "snapshot_stride_periods": 100, "doppler_points": 7}"#,
    )
    .unwrap();
    let opts = RunOptions {
        output_dir: Some(out.into()),
        ..RunOptions::default()
    };
    match experiment::run(cfg, &opts) {
        Ok(files) => {
            print!("{}", std::fs::read_to_string(&files.summary).unwrap());
            println!("wrote {}", files.csv.display());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
