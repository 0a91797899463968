//! Re-executes a run log against the engine and checks every recorded
//! state bit for bit.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::engine::{EngineError, SeasonLedger};
use crate::runlog::{Event, LogEvent};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ReplayVerdict {
    Pass {
        events: usize,
        settlements: usize,
        /// The log reached a terminal summary.
        complete: bool,
    },
    Fail {
        /// First sequence number whose recorded state differs from the replay.
        seq: u64,
        reason: String,
    },
}

impl ReplayVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, ReplayVerdict::Pass { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("log is empty")]
    Empty,
    #[error("seq {seq}: log must open with season_start")]
    NoSeasonStart { seq: u64 },
    #[error("seq {seq}: data gap: {message}")]
    DataGap { seq: u64, message: String },
}

fn describe(e: &LogEvent) -> String {
    serde_json::to_string(e).expect("events serialise")
}

/// Replays `events` on a fresh ledger over `data`. A log whose fixtures are
/// absent from the data is an error; any other divergence is a failing
/// verdict naming the first differing sequence number.
pub fn replay(events: &[LogEvent], data: Arc<Dataset>) -> Result<ReplayVerdict, ReplayError> {
    let first = events.first().ok_or(ReplayError::Empty)?;
    let Event::SeasonStart(start) = &first.event else {
        return Err(ReplayError::NoSeasonStart { seq: first.seq });
    };
    let mut ledger = SeasonLedger::new(start.scenario.clone(), data, start.line.clone(), start.label.clone())
        .map_err(|e| ReplayError::DataGap {
            seq: first.seq,
            message: e.to_string(),
        })?;
    let mut settlements = 0;
    for (i, recorded) in events.iter().enumerate() {
        if i >= ledger.log().len() {
            if let Some(reason) = apply(&mut ledger, recorded)? {
                return Ok(ReplayVerdict::Fail {
                    seq: recorded.seq,
                    reason,
                });
            }
        }
        let Some(produced) = ledger.log().get(i) else {
            return Ok(ReplayVerdict::Fail {
                seq: recorded.seq,
                reason: format!("replay produced no event for {}", recorded.event.kind()),
            });
        };
        if produced.bankroll_after != recorded.bankroll_after {
            return Ok(ReplayVerdict::Fail {
                seq: recorded.seq,
                reason: format!(
                    "bankroll_after: log {}, replay {}",
                    recorded.bankroll_after, produced.bankroll_after
                ),
            });
        }
        if produced != recorded {
            return Ok(ReplayVerdict::Fail {
                seq: recorded.seq,
                reason: format!("event differs: log {}, replay {}", describe(recorded), describe(produced)),
            });
        }
        if matches!(recorded.event, Event::Settlement(_)) {
            settlements += 1;
        }
    }
    if let Some(extra) = ledger.log().get(events.len()) {
        // the engine emitted a terminal summary the log lacks
        return Ok(ReplayVerdict::Fail {
            seq: extra.seq,
            reason: format!("log ends before the replay's {}", extra.event.kind()),
        });
    }
    Ok(ReplayVerdict::Pass {
        events: events.len(),
        settlements,
        complete: ledger.is_terminal(),
    })
}

/// Performs the recorded action; `Some(reason)` when it cannot be reproduced.
fn apply(ledger: &mut SeasonLedger, recorded: &LogEvent) -> Result<Option<String>, ReplayError> {
    let refused = |e: EngineError| format!("engine refused the recorded action: {e}");
    Ok(match &recorded.event {
        Event::SeasonStart(_) | Event::Terminal(_) => {
            Some(format!("unexpected {} at this point", recorded.event.kind()))
        }
        Event::View(v) => {
            ledger.record_view(&v.tool);
            None
        }
        Event::BetPlaced(b) => {
            if !ledger.is_terminal() {
                let matches = ledger.view_matches().expect("live ledger lists matches");
                let gap = |message: String| ReplayError::DataGap {
                    seq: recorded.seq,
                    message,
                };
                let m = matches.get(b.match_id).ok_or_else(|| {
                    gap(format!(
                        "matchday {} ({}) has no match {} for {} vs {}",
                        ledger.matchday(),
                        ledger.current_date(),
                        b.match_id,
                        b.home_team,
                        b.away_team
                    ))
                })?;
                if m.home_team != b.home_team || m.away_team != b.away_team || ledger.current_date() != b.date {
                    return Err(gap(format!(
                        "fixture {} vs {} on {} not found; match {} on {} is {} vs {}",
                        b.home_team,
                        b.away_team,
                        b.date,
                        b.match_id,
                        ledger.current_date(),
                        m.home_team,
                        m.away_team
                    )));
                }
            }
            ledger
                .place_bet(b.match_id, b.bet_type, b.stake, b.model_probs.clone())
                .err()
                .map(refused)
        }
        Event::Settlement(_) => ledger.next_matchday().err().map(refused),
    })
}
