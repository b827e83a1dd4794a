//! Library side of the `qtrans` command: configuration, experiments and output.

pub mod config;
pub mod experiments;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use config::RunConfig;
pub use experiments::{run_experiment, Check, Experiment, Outcome};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] qtrans_core::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunFiles {
    pub table: PathBuf,
    pub meta: PathBuf,
    pub failure: Option<PathBuf>,
    pub outcome: Outcome,
    /// Failure record, present when any check failed.
    pub failure_json: Option<String>,
}

pub fn config_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Run `experiment` on the config at `config_path` and write
/// `<experiment>.<csv|json>`, `meta.json` and, if any check fails, `failure.json`.
pub fn execute(
    experiment: Experiment,
    config_path: &Path,
    out_dir: &Path,
    format: Format,
    seed: u64,
) -> Result<RunFiles, CliError> {
    let (cfg, bytes) = RunConfig::from_path(config_path)?;
    let outcome = run_experiment(experiment, &cfg, seed)?;
    fs::create_dir_all(out_dir)?;

    let table = out_dir.join(format!("{}.{}", experiment.name(), format.extension()));
    let body = match format {
        Format::Csv => outcome.table.to_csv()?,
        Format::Json => outcome.table.to_json()?,
    };
    fs::write(&table, body)?;

    let passed = outcome.passed();
    let meta = json!({
        "tool": "qtrans",
        "version": env!("CARGO_PKG_VERSION"),
        "experiment": experiment.name(),
        "config_sha256": config_digest(&bytes),
        "seed": seed,
        "format": format,
        "table": table.file_name().map(|f| f.to_string_lossy().into_owned()),
        "choices": outcome.choices,
        "derived": outcome.derived,
        "result": outcome.result,
        "checks": outcome.checks,
        "passed": passed,
    });
    let meta_path = out_dir.join("meta.json");
    fs::write(&meta_path, output::to_json_string(&meta)?)?;

    let (failure, failure_json) = if passed {
        let stale = out_dir.join("failure.json");
        if stale.exists() {
            fs::remove_file(stale)?;
        }
        (None, None)
    } else {
        let failed: Vec<&Check> = outcome.checks.iter().filter(|c| !c.passed).collect();
        let record: Value = json!({ "experiment": experiment.name(), "failed_checks": failed });
        let text = output::to_json_string(&record)?;
        let path = out_dir.join("failure.json");
        fs::write(&path, &text)?;
        (Some(path), Some(text))
    };

    Ok(RunFiles {
        table,
        meta: meta_path,
        failure,
        outcome,
        failure_json,
    })
}
