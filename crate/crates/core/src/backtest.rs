//! Drives a strategy through a full season without the wire protocol.

use std::sync::Arc;

use chrono::NaiveDate;
use thiserror::Error;

use crate::analytics::{run_metrics, AnalyticsError, RunLog, RunMetrics};
use crate::dataset::{Dataset, ScenarioSpec};
use crate::engine::{EngineError, SeasonLedger};
use crate::market::LineConfig;
use crate::runlog::{LogEvent, TerminalSummary};
use crate::strategies::{MatchdayContext, Strategy, StrategyError};

#[derive(Debug, Error)]
pub enum BacktestError {
    #[error("cannot start season: {0}")]
    Start(#[source] EngineError),
    #[error("matchday {matchday} ({date}): strategy failed: {source}")]
    Strategy {
        matchday: usize,
        date: NaiveDate,
        #[source]
        source: StrategyError,
    },
    #[error("matchday {matchday} ({date}): {source}")]
    Engine {
        matchday: usize,
        date: NaiveDate,
        #[source]
        source: EngineError,
    },
    #[error("run log: {0}")]
    Analytics(#[from] AnalyticsError),
}

#[derive(Debug, Clone)]
pub struct BacktestOutcome {
    pub log: Vec<LogEvent>,
    pub summary: TerminalSummary,
    pub metrics: RunMetrics,
}

/// Plays `strategy` from the first matchday until the season ends or the
/// bankroll is ruined. Ruin is a normal outcome, not an error.
pub fn run_backtest(
    scenario: ScenarioSpec,
    data: Arc<Dataset>,
    line: LineConfig,
    strategy: &mut dyn Strategy,
    label: impl Into<String>,
) -> Result<BacktestOutcome, BacktestError> {
    let mut ledger = SeasonLedger::new(scenario, data, line, label).map_err(BacktestError::Start)?;
    while !ledger.is_terminal() {
        let matchday = ledger.matchday();
        let date = ledger.current_date();
        let engine = |source| BacktestError::Engine { matchday, date, source };
        let matches = ledger.view_matches().map_err(engine)?;
        let orders = {
            let ctx = MatchdayContext {
                date,
                matches: &matches,
                history: ledger.disclosed(),
                bankroll: ledger.bankroll(),
                available: ledger.available(),
            };
            strategy
                .decide(&ctx)
                .map_err(|source| BacktestError::Strategy { matchday, date, source })?
        };
        for o in orders {
            ledger
                .place_bet(o.match_id, o.bet_type, o.amount, o.model_probs)
                .map_err(engine)?;
        }
        ledger.next_matchday().map_err(engine)?;
    }
    let summary = ledger.terminal_summary().expect("loop ends at a terminal state");
    let log = ledger.log().to_vec();
    let run = RunLog::from_events(log.clone())?;
    let metrics = run_metrics(&run);
    debug_assert_eq!(metrics.roi, summary.roi);
    Ok(BacktestOutcome { log, summary, metrics })
}
