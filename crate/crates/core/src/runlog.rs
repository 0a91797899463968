//! Append-only NDJSON run log: one `{seq, kind, payload, bankroll_after}`
//! object per line. It is the substrate for replay and analytics.

use std::io::{BufRead, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::ScenarioSpec;
use crate::market::{BetType, LineConfig};
use crate::money::{Money, Odds};

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: sequence number {seq} does not follow {prev}")]
    Sequence { line: usize, seq: u64, prev: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEvent {
    pub seq: u64,
    #[serde(flatten)]
    pub event: Event,
    pub bankroll_after: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    SeasonStart(SeasonStart),
    View(ViewEvent),
    BetPlaced(BetPlaced),
    Settlement(Settlement),
    Terminal(TerminalSummary),
}

impl Event {
    pub fn kind(&self) -> &'static str {
        match self {
            Event::SeasonStart(_) => "season_start",
            Event::View(_) => "view",
            Event::BetPlaced(_) => "bet_placed",
            Event::Settlement(_) => "settlement",
            Event::Terminal(_) => "terminal",
        }
    }

    /// Whether the event changed ledger state.
    pub fn is_mutation(&self) -> bool {
        !matches!(self, Event::View(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonStart {
    pub scenario: ScenarioSpec,
    /// Who drove the episode: a strategy name or an agent label.
    pub label: String,
    pub line: LineConfig,
    pub matchdays: usize,
    pub first_date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewEvent {
    pub tool: String,
    pub matchday: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetPlaced {
    pub ticket_id: u64,
    pub matchday: usize,
    pub date: NaiveDate,
    pub match_id: usize,
    pub home_team: String,
    pub away_team: String,
    pub bet_type: BetType,
    pub stake: Money,
    pub odds: Odds,
    pub potential_return: Money,
    /// All prices of the bet's market on the board, in outcome order.
    pub market_odds: Vec<Odds>,
    /// The bettor's probabilities over the bet's market, when supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model_probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettledTicket {
    pub ticket_id: u64,
    pub match_id: usize,
    pub home_team: String,
    pub away_team: String,
    pub bet_type: BetType,
    pub stake: Money,
    pub odds: Odds,
    pub won: bool,
    pub payout: Money,
    pub home_goals: u32,
    pub away_goals: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settlement {
    pub matchday: usize,
    pub date: NaiveDate,
    pub tickets: Vec<SettledTicket>,
    pub staked: Money,
    pub returned: Money,
    pub net: Money,
    /// Bankroll at the start of the matchday, before stakes were deducted.
    pub bankroll_before: Money,
    pub bankroll_after: Money,
    /// `ln(after / before)`; absent when the matchday ended in ruin.
    pub reward: Option<f64>,
    pub ruin: bool,
    pub next_date: Option<NaiveDate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalSummary {
    pub initial_bankroll: Money,
    pub final_bankroll: Money,
    pub profit_loss: Money,
    pub roi: f64,
    pub ruined: bool,
    pub matchdays_played: usize,
    pub total_reward: f64,
}

/// ROI of an episode, `(final − initial) / initial`.
pub fn roi(initial: Money, fin: Money) -> f64 {
    (fin.milli() - initial.milli()) as f64 / initial.milli() as f64
}

pub fn write_ndjson<W: Write>(events: &[LogEvent], mut out: W) -> Result<(), RunLogError> {
    for e in events {
        serde_json::to_writer(&mut out, e).map_err(|source| RunLogError::Parse { line: 0, source })?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_ndjson(events: &[LogEvent]) -> String {
    let mut buf = Vec::new();
    write_ndjson(events, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("json is utf-8")
}

/// Reads a log, checking that sequence numbers strictly increase.
pub fn read_ndjson<R: BufRead>(input: R) -> Result<Vec<LogEvent>, RunLogError> {
    let mut events: Vec<LogEvent> = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let e: LogEvent = serde_json::from_str(&line).map_err(|source| RunLogError::Parse {
            line: line_no,
            source,
        })?;
        if let Some(prev) = events.last() {
            if e.seq <= prev.seq {
                return Err(RunLogError::Sequence {
                    line: line_no,
                    seq: e.seq,
                    prev: prev.seq,
                });
            }
        }
        events.push(e);
    }
    Ok(events)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_shape() {
        let e = LogEvent {
            seq: 3,
            event: Event::View(ViewEvent {
                tool: "view_bankroll".into(),
                matchday: 1,
            }),
            bankroll_after: Money::from_pounds(192),
        };
        let text = serde_json::to_string(&e).unwrap();
        assert_eq!(
            text,
            r#"{"seq":3,"kind":"view","payload":{"tool":"view_bankroll","matchday":1},"bankroll_after":"192.000"}"#
        );
        let back: LogEvent = serde_json::from_str(&text).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn sequence_must_increase() {
        let line = r#"{"seq":1,"kind":"view","payload":{"tool":"view_matches","matchday":1},"bankroll_after":"1.000"}"#;
        let text = format!("{line}\n{line}\n");
        assert!(matches!(
            read_ndjson(text.as_bytes()),
            Err(RunLogError::Sequence { line: 2, .. })
        ));
    }

    #[test]
    fn roi_identity() {
        assert_eq!(roi(Money::from_pounds(220), Money::from_pounds(220)), 0.0);
        assert!((roi(Money::from_pounds(100_000), Money::from_pounds(105_118)) - 0.05118).abs() < 1e-12);
    }
}
