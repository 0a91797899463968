//! Deterministic season-replay betting environment.

pub mod dataset;
pub mod analytics;
pub mod backtest;
pub mod engine;
pub mod market;
pub mod money;
pub mod protocol;
pub mod replay;
pub mod runlog;
pub mod staking;
pub mod strategies;
pub mod synth;

pub use dataset::{Dataset, MatchRecord, MatchTable, ScenarioRegistry, ScenarioSpec};
pub use engine::{EngineError, SeasonLedger};
pub use market::{BetType, LineConfig, LinePolicy, Market, OddsBoard};
pub use money::{Money, Odds};
