use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "matchday", version, about = "Season-replay betting environment")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the four environment tools to an agent.
    Serve(ServeArgs),
    /// Play a built-in strategy through a whole season.
    Backtest(BacktestArgs),
    /// Re-execute a run log and check every recorded bankroll.
    Replay(ReplayArgs),
    /// Metrics, pairwise tests and bootstrap bands over run logs.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Directory of match and player CSV files.
    #[arg(long, env = "MATCHDAY_DATA")]
    pub data: PathBuf,
    /// Scenario registry; defaults to scenarios.cfg in the data directory,
    /// then to the bundled registry.
    #[arg(long, env = "MATCHDAY_SCENARIOS")]
    pub registry: Option<PathBuf>,
    /// Line policy: fallback (first complete book) or middle (median).
    #[arg(long, default_value = "fallback")]
    pub line: String,
    /// Comma-separated bookmaker preference order.
    #[arg(long)]
    pub books: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Transport {
    Stdio,
    Tcp,
    Http,
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Scenario for new sessions.
    #[arg(long)]
    pub scenario: String,
    #[arg(long, value_enum, default_value = "stdio")]
    pub transport: Transport,
    #[arg(long, default_value = "127.0.0.1:7878")]
    pub listen: SocketAddr,
    /// Label written into run logs.
    #[arg(long, default_value = "agent")]
    pub label: String,
    /// Refreshed CSV snapshots are written here after every advance
    /// (one subdirectory per session for network transports).
    #[arg(long)]
    pub drop_dir: Option<PathBuf>,
    /// Run logs are written here when a session ends.
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BacktestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub strategy: String,
    /// Strategy parameters as TOML.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Label for the run; defaults to the strategy name.
    #[arg(long)]
    pub label: Option<String>,
    /// Run log destination (NDJSON).
    #[arg(long)]
    pub out: PathBuf,
    /// Metrics destination; defaults to the run log path with a
    /// .metrics.json extension.
    #[arg(long)]
    pub metrics: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Run log to re-execute.
    pub log: PathBuf,
    #[arg(long, env = "MATCHDAY_DATA")]
    pub data: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Vig {
    Raw,
    Normalized,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    /// Run logs, or directories searched for *.ndjson.
    #[arg(required = true)]
    pub runs: Vec<PathBuf>,
    /// Output directory for report.json and the CSV tables.
    #[arg(long)]
    pub out: PathBuf,
    /// Bootstrap simulations per label; 0 disables the bootstrap.
    #[arg(long, default_value_t = 50_000)]
    pub bootstrap: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// How market probabilities are read from prices for ΔLL.
    #[arg(long, value_enum, default_value = "normalized")]
    pub vig: Vig,
}
