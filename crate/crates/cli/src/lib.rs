//! Scenario runner and analysis front door: configuration parsing, named
//! scenarios reproducing the landmark experiments, dataset analysis on
//! external event files, and plot-ready output emission.

pub mod analyze;
pub mod checks;
pub mod config;
pub mod manifest;
pub mod scenarios;

use std::path::PathBuf;

use thiserror::Error;

/// Errors mapped to process exit codes: 2 for configuration problems,
/// 3 for runtime failures, 4 for failed acceptance checks.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("{failed} acceptance check(s) failed")]
    ChecksFailed { failed: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::ChecksFailed { .. } => 4,
        }
    }
}

impl From<qcorr_core::Error> for CliError {
    fn from(e: qcorr_core::Error) -> Self {
        match e {
            qcorr_core::Error::Validation(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// One acceptance assertion evaluated in `--check` mode.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        CheckResult {
            name: name.to_string(),
            pass,
            detail,
        }
    }
}

/// Outcome of a scenario run.
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: manifest::Manifest,
    pub checks: Vec<CheckResult>,
}

/// Parse a CLI normalization flag.
pub fn correlator_norm(
    name: &str,
    partners: usize,
) -> Result<qcorr_core::correlator::Normalization, CliError> {
    match name {
        "mixed" => Ok(qcorr_core::correlator::Normalization::ShotMixed { partners }),
        "singles" => Ok(qcorr_core::correlator::Normalization::ProductOfSingles),
        other => Err(CliError::Config(format!(
            "normalization must be mixed or singles, got '{other}'"
        ))),
    }
}

/// Cap the global thread pool from QCORR_THREADS (ignored when a pool
/// already exists, e.g. under the test harness).
pub fn init_thread_pool() {
    if let Ok(value) = std::env::var("QCORR_THREADS") {
        if let Ok(n) = value.parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}
