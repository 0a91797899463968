//! Command-line front end for the matchday environment.

pub mod args;
pub mod commands;
pub mod http;
pub mod serve;

use std::path::Path;
use std::process::ExitCode;

use matchday_core::dataset::{DatasetError, ScenarioRegistry};
use matchday_core::{Dataset, LineConfig, LinePolicy};
use thiserror::Error;

pub use args::Cli;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, unknown names, unreadable configuration.
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Runtime(_) => ExitCode::FAILURE,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::UnknownScenario { .. } | DatasetError::Registry { .. } => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub fn load_data(dir: &Path) -> Result<Dataset, CliError> {
    if !dir.is_dir() {
        return Err(CliError::Config(format!("data directory {} does not exist", dir.display())));
    }
    Dataset::load_dir(dir).map_err(|e| CliError::Runtime(format!("loading {}: {e}", dir.display())))
}

/// The registry at `path` if given, else `scenarios.cfg` inside the data
/// directory, else the bundled one.
pub fn load_registry(path: Option<&Path>, data: &Path) -> Result<ScenarioRegistry, CliError> {
    let local = data.join("scenarios.cfg");
    let file = match path {
        Some(p) => Some(p.to_path_buf()),
        None => local.exists().then_some(local),
    };
    match file {
        Some(f) => std::fs::read_to_string(&f)
            .map_err(|e| CliError::Config(format!("reading {}: {e}", f.display())))?
            .parse()
            .map_err(|e: DatasetError| CliError::Config(format!("{}: {e}", f.display()))),
        None => Ok(ScenarioRegistry::default()),
    }
}

pub fn line_config(policy: &str, books: Option<&str>) -> Result<LineConfig, CliError> {
    let policy: LinePolicy = policy.parse().map_err(|e| CliError::Config(format!("{e}")))?;
    let mut line = LineConfig {
        policy,
        ..LineConfig::default()
    };
    if let Some(b) = books {
        line.order = b.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
        if line.order.is_empty() {
            return Err(CliError::Config("--books lists no bookmakers".into()));
        }
    }
    Ok(line)
}

pub fn run(cli: Cli) -> Result<ExitCode, CliError> {
    match cli.command {
        args::Command::Serve(a) => serve::run(a),
        args::Command::Backtest(a) => commands::backtest(a),
        args::Command::Replay(a) => commands::replay(a),
        args::Command::Analyze(a) => commands::analyze(a),
    }
}
