//! Scenario runner for coupled kicked tops.
//!
//! A run reads one JSON config, expands it into parameter points, evaluates
//! them in parallel and writes per-series CSV files, `summary.csv` and
//! `run.json`.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

use std::path::{Path, PathBuf};
use std::time::Instant;

pub use config::{resolve, ScenarioConfig, ScenarioId};
pub use error::CliError;
pub use run::{run_fidelity_pair, run_scenario, ScenarioResult};

pub const OUT_ENV: &str = "QUTOP_OUT";
pub const DEFAULT_OUT: &str = "qutop-out";

/// Output directory by precedence: flag, config, `QUTOP_OUT`, default.
pub fn output_dir(flag: Option<&Path>, config: &ScenarioConfig, env: Option<&str>) -> PathBuf {
    flag.map(Path::to_path_buf)
        .or_else(|| config.out.clone())
        .or_else(|| env.filter(|s| !s.is_empty()).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
}

pub struct RunSummary {
    pub out_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub points: usize,
    pub not_converged: usize,
}

pub fn execute(config: &ScenarioConfig, out_dir: &Path, jobs: Option<usize>) -> Result<RunSummary, CliError> {
    let started = Instant::now();
    let result = run_scenario(config, jobs)?;
    let files = output::write_outputs(out_dir, config, &result, started.elapsed().as_secs_f64())?;
    Ok(RunSummary {
        out_dir: out_dir.to_path_buf(),
        files,
        points: result.points.len(),
        not_converged: result.points.iter().filter(|p| p.status != "ok").count(),
    })
}
