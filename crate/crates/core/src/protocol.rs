//! The four environment tools over a JSON request/response protocol.
//!
//! A request is `{"id": .., "tool": .., "args": {..}}`; a response is
//! `{"id": .., "ok": true, "payload": {"text": .., "data": ..}}` or
//! `{"id": .., "ok": false, "error": {"code": .., "message": ..}}`. Money and
//! odds in `data` are decimal strings with three fractional digits.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dataset::{write_matches, write_players, Dataset, ScenarioSpec};
use crate::engine::{BankrollReport, BetTicket, EngineError, MatchView, SeasonLedger, SettlementReport};
use crate::market::{BetType, LineConfig};
use crate::money::{parse_milli, Money};
use crate::runlog::{to_ndjson, LogEvent, TerminalSummary};

pub const TOOLS: [&str; 4] = ["view_matches", "place_bet", "view_bankroll", "next_matchday"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    UnknownTool,
    BadArgs,
    EpisodeOver,
    InvalidMatch,
    MarketUnavailable,
    StakeTooSmall,
    InsufficientFunds,
    NoBetsPlaced,
    Internal,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnknownTool => "UNKNOWN_TOOL",
            ErrorCode::BadArgs => "BAD_ARGS",
            ErrorCode::EpisodeOver => "EPISODE_OVER",
            ErrorCode::InvalidMatch => "INVALID_MATCH",
            ErrorCode::MarketUnavailable => "MARKET_UNAVAILABLE",
            ErrorCode::StakeTooSmall => "STAKE_TOO_SMALL",
            ErrorCode::InsufficientFunds => "INSUFFICIENT_FUNDS",
            ErrorCode::NoBetsPlaced => "NO_BETS_PLACED",
            ErrorCode::Internal => "INTERNAL",
        }
    }
}

impl From<&EngineError> for ErrorCode {
    fn from(e: &EngineError) -> Self {
        match e {
            EngineError::EmptySeason { .. } => ErrorCode::Internal,
            EngineError::EpisodeOver => ErrorCode::EpisodeOver,
            EngineError::InvalidMatch { .. } => ErrorCode::InvalidMatch,
            EngineError::MarketUnavailable { .. } => ErrorCode::MarketUnavailable,
            EngineError::StakeTooSmall { .. } => ErrorCode::StakeTooSmall,
            EngineError::InsufficientFunds { .. } => ErrorCode::InsufficientFunds,
            EngineError::NoBetsPlaced => ErrorCode::NoBetsPlaced,
            EngineError::BadModelProbs { .. } => ErrorCode::BadArgs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolRequest {
    #[serde(default)]
    pub id: Value,
    pub tool: String,
    #[serde(default)]
    pub args: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub text: String,
    pub data: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolResponse {
    pub id: Value,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Payload>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl ToolResponse {
    pub fn success(id: Value, text: String, data: Value) -> Self {
        ToolResponse {
            id,
            ok: true,
            payload: Some(Payload { text, data }),
            error: None,
        }
    }

    pub fn failure(id: Value, code: ErrorCode, message: impl Into<String>) -> Self {
        ToolResponse {
            id,
            ok: false,
            payload: None,
            error: Some(ErrorBody {
                code,
                message: message.into(),
            }),
        }
    }

    pub fn code(&self) -> Option<ErrorCode> {
        self.error.as_ref().map(|e| e.code)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("responses serialise")
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PlaceBetArgs {
    match_id: usize,
    bet_type: String,
    amount: Value,
    #[serde(default)]
    model_probs: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoArgs {}

/// Parses a stake given as a JSON number or decimal string. More than three
/// fractional digits is an error rather than a silent rounding.
pub fn parse_amount(v: &Value) -> Result<Money, String> {
    let text = match v {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => return Err(format!("amount must be a number or decimal string, got {other}")),
    };
    parse_milli(&text, false)
        .map(Money::from_milli)
        .map_err(|e| format!("amount {text}: {e}"))
}

fn date_text(d: NaiveDate) -> String {
    d.format("%d/%m/%Y").to_string()
}

pub fn render_matches(date: NaiveDate, matches: &[MatchView]) -> String {
    let mut out = format!("Matches for {}:", date_text(date));
    for m in matches {
        out.push_str(&format!("\n\nMatch {}: {} vs {}", m.match_id, m.home_team, m.away_team));
        match &m.board {
            Some(b) => {
                out.push_str(&format!(
                    "\n  Odds - Home: {}, Draw: {}, Away: {}",
                    b.home.display_short(),
                    b.draw.display_short(),
                    b.away.display_short()
                ));
                if let (Some(o), Some(u)) = (b.over25, b.under25) {
                    out.push_str(&format!(
                        "\n  Over 2.5: {}, Under 2.5: {}",
                        o.display_short(),
                        u.display_short()
                    ));
                }
            }
            None => out.push_str("\n  Odds unavailable"),
        }
    }
    out
}

pub fn render_bet(t: &BetTicket) -> String {
    format!(
        "Bet placed: {} on {} for {} vs {} at odds {}.\nPotential return: {}",
        t.stake.display_short(),
        t.bet_type,
        t.fixture.home_team,
        t.fixture.away_team,
        t.odds.display_short(),
        t.potential_return.display_2dp()
    )
}

pub fn render_bankroll(b: &BankrollReport) -> String {
    let mut out = format!("Current bankroll: £{}", b.balance.display_2dp());
    if b.open_bets > 0 {
        out.push_str(&format!(
            "\nStaked this matchday: £{} ({} bet{})\nAvailable: £{}",
            b.staked.display_2dp(),
            b.open_bets,
            if b.open_bets == 1 { "" } else { "s" },
            b.available.display_2dp()
        ));
    }
    if b.ruined {
        out.push_str("\nBankrupt: the episode is over.");
    } else if b.terminal {
        out.push_str("\nThe season is over.");
    }
    out
}

fn render_summary(t: &TerminalSummary) -> String {
    let mut out = String::new();
    if t.ruined {
        out.push_str("Bankrupt: bankroll reached £0.00. The episode is over.\n");
    } else {
        out.push_str("Season complete.\n");
    }
    out.push_str(&format!(
        "Final bankroll: £{}\nTotal profit/loss: £{}",
        t.final_bankroll.display_2dp(),
        t.profit_loss.display_2dp()
    ));
    out
}

pub fn render_settlement(r: &SettlementReport) -> String {
    let s = &r.settlement;
    let mut out = String::from("Bet Results:\n");
    if s.tickets.is_empty() {
        out.push_str("\nNo bets placed.");
    }
    for t in &s.tickets {
        if t.won {
            out.push_str(&format!(
                "\n+ WON: {} vs {} ({}) - Won: £{}",
                t.home_team,
                t.away_team,
                t.bet_type,
                t.payout.display_2dp()
            ));
        } else {
            out.push_str(&format!(
                "\nx LOST: {} vs {} ({}) - Lost: £{}",
                t.home_team,
                t.away_team,
                t.bet_type,
                t.stake.display_2dp()
            ));
        }
    }
    out.push_str(&format!(
        "\n\nNet result: £{}\nNew bankroll: £{}\n\n",
        s.net.display_2dp(),
        s.bankroll_after.display_2dp()
    ));
    match (&r.terminal, s.next_date) {
        (Some(t), _) => out.push_str(&render_summary(t)),
        (None, Some(d)) => out.push_str(&format!("Advanced to next matchday: {}", date_text(d))),
        (None, None) => unreachable!("a live episode always has a next matchday"),
    }
    out
}

fn matches_data(date: NaiveDate, matchday: usize, matches: &[MatchView]) -> Value {
    json!({
        "date": date,
        "matchday": matchday,
        "matches": matches.iter().map(|m| json!({
            "match_id": m.match_id,
            "home_team": m.home_team,
            "away_team": m.away_team,
            "odds": m.board.as_ref().map(|b| json!({
                "home": b.home,
                "draw": b.draw,
                "away": b.away,
                "over_2_5": b.over25,
                "under_2_5": b.under25,
            })),
            "source": m.board.as_ref().map(|b| b.source.clone()),
        })).collect::<Vec<_>>(),
    })
}

/// One episode driven by tool calls.
#[derive(Debug)]
pub struct Session {
    ledger: SeasonLedger,
    /// Responses to mutating requests, keyed by request id.
    replies: HashMap<String, ToolResponse>,
    drop_dir: Option<PathBuf>,
}

impl Session {
    pub fn new(
        scenario: ScenarioSpec,
        data: Arc<Dataset>,
        line: LineConfig,
        label: impl Into<String>,
    ) -> Result<Self, EngineError> {
        Ok(Session {
            ledger: SeasonLedger::new(scenario, data, line, label)?,
            replies: HashMap::new(),
            drop_dir: None,
        })
    }

    /// After each advance, the full disclosed tables are written to `dir`
    /// as `matches.csv` and `players.csv`.
    pub fn with_drop_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.drop_dir = Some(dir.into());
        self
    }

    pub fn ledger(&self) -> &SeasonLedger {
        &self.ledger
    }

    pub fn log(&self) -> &[LogEvent] {
        self.ledger.log()
    }

    pub fn log_ndjson(&self) -> String {
        to_ndjson(self.ledger.log())
    }

    /// Handles one protocol line; malformed input yields `BAD_ARGS`.
    pub fn handle_line(&mut self, line: &str) -> ToolResponse {
        let value: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return ToolResponse::failure(Value::Null, ErrorCode::BadArgs, format!("malformed request: {e}")),
        };
        let id = value.get("id").cloned().unwrap_or(Value::Null);
        match serde_json::from_value::<ToolRequest>(value) {
            Ok(req) => self.handle(req),
            Err(e) => ToolResponse::failure(id, ErrorCode::BadArgs, format!("malformed request: {e}")),
        }
    }

    pub fn handle(&mut self, req: ToolRequest) -> ToolResponse {
        let mutating = matches!(req.tool.as_str(), "place_bet" | "next_matchday");
        let key = (mutating && !req.id.is_null()).then(|| format!("{}:{}", req.tool, req.id));
        if let Some(cached) = key.as_ref().and_then(|k| self.replies.get(k)) {
            return cached.clone();
        }
        let response = self.dispatch(req);
        if let Some(k) = key {
            self.replies.insert(k, response.clone());
        }
        response
    }

    fn dispatch(&mut self, req: ToolRequest) -> ToolResponse {
        let id = req.id.clone();
        let args = if req.args.is_null() { json!({}) } else { req.args };
        let bad = |e: serde_json::Error| ToolResponse::failure(id.clone(), ErrorCode::BadArgs, e.to_string());
        let engine = |e: EngineError| ToolResponse::failure(id.clone(), ErrorCode::from(&e), e.to_string());
        match req.tool.as_str() {
            "view_matches" => {
                if let Err(e) = serde_json::from_value::<NoArgs>(args) {
                    return bad(e);
                }
                let matches = match self.ledger.view_matches() {
                    Ok(m) => m,
                    Err(e) => return engine(e),
                };
                self.ledger.record_view("view_matches");
                let date = self.ledger.current_date();
                ToolResponse::success(
                    id.clone(),
                    render_matches(date, &matches),
                    matches_data(date, self.ledger.matchday(), &matches),
                )
            }
            "view_bankroll" => {
                if let Err(e) = serde_json::from_value::<NoArgs>(args) {
                    return bad(e);
                }
                let report = self.ledger.view_bankroll();
                self.ledger.record_view("view_bankroll");
                let data = serde_json::to_value(&report).expect("report serialises");
                ToolResponse::success(id.clone(), render_bankroll(&report), data)
            }
            "place_bet" => {
                let a: PlaceBetArgs = match serde_json::from_value(args) {
                    Ok(a) => a,
                    Err(e) => return bad(e),
                };
                let bet_type: BetType = match a.bet_type.parse() {
                    Ok(b) => b,
                    Err(e) => return ToolResponse::failure(id.clone(), ErrorCode::BadArgs, format!("{e}")),
                };
                let amount = match parse_amount(&a.amount) {
                    Ok(m) => m,
                    Err(e) => return ToolResponse::failure(id.clone(), ErrorCode::BadArgs, e),
                };
                match self.ledger.place_bet(a.match_id, bet_type, amount, a.model_probs) {
                    Ok(t) => {
                        let data = json!({
                            "ticket": t,
                            "available": self.ledger.available(),
                        });
                        ToolResponse::success(id.clone(), render_bet(&t), data)
                    }
                    Err(e) => engine(e),
                }
            }
            "next_matchday" => {
                if let Err(e) = serde_json::from_value::<NoArgs>(args) {
                    return bad(e);
                }
                let previous = self.ledger.disclosure_date();
                let report = match self.ledger.next_matchday() {
                    Ok(r) => r,
                    Err(e) => return engine(e),
                };
                let view = self.ledger.disclosed();
                let mut matches_csv = Vec::new();
                let mut players_csv = Vec::new();
                let attach = write_matches(&report.disclosed, &mut matches_csv)
                    .and_then(|_| write_players(view.players_since(previous), &mut players_csv));
                if let Err(e) = attach {
                    return ToolResponse::failure(id.clone(), ErrorCode::Internal, e.to_string());
                }
                if let Some(dir) = &self.drop_dir {
                    if let Err(e) = write_drop(dir, &self.ledger) {
                        log::error!("drop directory {}: {e}", dir.display());
                        return ToolResponse::failure(id.clone(), ErrorCode::Internal, e);
                    }
                }
                let data = json!({
                    "settlement": report.settlement,
                    "terminal": report.terminal,
                    "disclosed_as_of": view.as_of,
                    "attachment": {
                        "matches_csv": String::from_utf8(matches_csv).expect("csv is utf-8"),
                        "players_csv": String::from_utf8(players_csv).expect("csv is utf-8"),
                    },
                });
                ToolResponse::success(id.clone(), render_settlement(&report), data)
            }
            other => ToolResponse::failure(
                id.clone(),
                ErrorCode::UnknownTool,
                format!("unknown tool {other:?}; available tools: {}", TOOLS.join(", ")),
            ),
        }
    }
}

fn write_drop(dir: &std::path::Path, ledger: &SeasonLedger) -> Result<(), String> {
    std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    let view = ledger.disclosed();
    let m = std::fs::File::create(dir.join("matches.csv")).map_err(|e| e.to_string())?;
    view.write_matches_csv(m).map_err(|e| e.to_string())?;
    let p = std::fs::File::create(dir.join("players.csv")).map_err(|e| e.to_string())?;
    view.write_players_csv(p).map_err(|e| e.to_string())
}
