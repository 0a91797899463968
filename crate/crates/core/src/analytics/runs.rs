//! Per-bet and per-matchday views of a run log.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::dataset::ScenarioSpec;
use crate::market::BetType;
use crate::money::{Money, Odds};
use crate::runlog::{read_ndjson, Event, LogEvent, TerminalSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetRecord {
    pub ticket_id: u64,
    pub matchday: usize,
    pub bet_type: BetType,
    pub stake: Money,
    pub odds: Odds,
    pub won: bool,
    pub payout: Money,
    pub market_odds: Vec<Odds>,
    pub model_probs: Option<Vec<f64>>,
    /// The outcome that happened in the bet's market.
    pub realised: BetType,
}

impl BetRecord {
    /// `(payout − stake) / stake`.
    pub fn net_return(&self) -> f64 {
        (self.payout.milli() - self.stake.milli()) as f64 / self.stake.milli() as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub label: String,
    pub scenario: ScenarioSpec,
    pub events: Vec<LogEvent>,
    /// Settled bets in placement order; unsettled ones are dropped.
    pub bets: Vec<BetRecord>,
    /// Bankroll at the start and after each settlement.
    pub bankroll_path: Vec<Money>,
    /// Per-matchday log returns; the ruin step is absent.
    pub log_returns: Vec<f64>,
    pub ruined: bool,
    pub terminal: Option<TerminalSummary>,
}

impl RunLog {
    pub fn read(path: impl AsRef<Path>) -> Result<Self, AnalyticsError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| AnalyticsError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        let events = read_ndjson(BufReader::new(file))?;
        RunLog::from_events(events)
    }

    pub fn from_events(events: Vec<LogEvent>) -> Result<Self, AnalyticsError> {
        let Some(Event::SeasonStart(start)) = events.first().map(|e| &e.event) else {
            return Err(AnalyticsError::Malformed("log does not open with season_start".into()));
        };
        let (label, scenario) = (start.label.clone(), start.scenario.clone());
        let mut placed = BTreeMap::new();
        let mut bets = Vec::new();
        let mut bankroll_path = vec![scenario.initial_bankroll];
        let mut log_returns = Vec::new();
        let mut ruined = false;
        let mut terminal = None;
        for e in &events {
            match &e.event {
                Event::BetPlaced(b) => {
                    placed.insert(b.ticket_id, b.clone());
                }
                Event::Settlement(s) => {
                    for t in &s.tickets {
                        let b = placed.remove(&t.ticket_id).ok_or_else(|| {
                            AnalyticsError::Malformed(format!("seq {}: ticket {} was never placed", e.seq, t.ticket_id))
                        })?;
                        bets.push(BetRecord {
                            ticket_id: t.ticket_id,
                            matchday: b.matchday,
                            bet_type: t.bet_type,
                            stake: t.stake,
                            odds: t.odds,
                            won: t.won,
                            payout: t.payout,
                            market_odds: b.market_odds,
                            model_probs: b.model_probs,
                            realised: BetType::realised(t.bet_type.market(), t.home_goals, t.away_goals),
                        });
                    }
                    bankroll_path.push(s.bankroll_after);
                    match s.reward {
                        Some(r) => log_returns.push(r),
                        None => ruined = true,
                    }
                }
                Event::Terminal(t) => terminal = Some(t.clone()),
                Event::SeasonStart(_) | Event::View(_) => {}
            }
        }
        Ok(RunLog {
            label,
            scenario,
            events,
            bets,
            bankroll_path,
            log_returns,
            ruined,
            terminal,
        })
    }

    pub fn initial(&self) -> Money {
        self.scenario.initial_bankroll
    }

    pub fn final_bankroll(&self) -> Money {
        *self.bankroll_path.last().expect("path starts with the initial bankroll")
    }

    /// Log returns for resampling: a ruined run ends with `−∞`.
    pub fn trajectory(&self) -> Vec<f64> {
        let mut t = self.log_returns.clone();
        if self.ruined {
            t.push(f64::NEG_INFINITY);
        }
        t
    }
}

/// Runs grouped by label, labels in sorted order.
pub fn group_by_label(runs: &[RunLog]) -> BTreeMap<String, Vec<&RunLog>> {
    let mut groups: BTreeMap<String, Vec<&RunLog>> = BTreeMap::new();
    for r in runs {
        groups.entry(r.label.clone()).or_default().push(r);
    }
    groups
}
