use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qtrans_cli::{execute, Experiment, Format};

/// Charge-qubit mediated state transfer between a nanomechanical resonator
/// and a transmission-line resonator.
#[derive(Parser)]
#[command(name = "qtrans", version)]
struct Args {
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(args.experiment, &args.config, &args.out, args.format, args.seed) {
        Ok(run) => match run.failure_json {
            None => ExitCode::SUCCESS,
            Some(text) => {
                eprintln!("{text}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
