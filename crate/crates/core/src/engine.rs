//! The authoritative season state machine.
//!
//! A [`SeasonLedger`] walks one scenario season matchday by matchday. Bets are
//! paid for when placed, settled against the real scoreline when the
//! matchday is advanced, and each settlement appends a log-wealth reward.
//! Every mutation is recorded in the run log.

use std::sync::Arc;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DisclosedView, FixtureKey, MatchRecord, ScenarioSpec};
use crate::market::{select_line, BetType, LineConfig, MarketError, OddsBoard};
use crate::money::{Money, Odds};
use crate::runlog::{
    roi, BetPlaced, Event, LogEvent, SeasonStart, SettledTicket, Settlement, TerminalSummary,
    ViewEvent,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("season {season} has no fixtures in the data")]
    EmptySeason { season: String },
    #[error("the episode is over")]
    EpisodeOver,
    #[error("no match {match_id} on this matchday ({available} listed)")]
    InvalidMatch { match_id: usize, available: usize },
    #[error("{bet} is not offered for match {match_id}")]
    MarketUnavailable { match_id: usize, bet: BetType },
    #[error("stake {amount} is below the minimum of {}", Money::MIN_STAKE)]
    StakeTooSmall { amount: Money },
    #[error("stake {amount} exceeds the available balance of {available}")]
    InsufficientFunds { amount: Money, available: Money },
    #[error("at least one bet must be placed before advancing to the next matchday")]
    NoBetsPlaced,
    #[error("model probabilities must cover the bet's market ({expected} outcomes)")]
    BadModelProbs { expected: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TicketStatus {
    Open,
    Won,
    Lost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetTicket {
    pub ticket_id: u64,
    pub match_id: usize,
    pub fixture: FixtureKey,
    pub bet_type: BetType,
    pub stake: Money,
    pub odds: Odds,
    pub potential_return: Money,
    pub status: TicketStatus,
}

/// One line of `view_matches`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchView {
    pub match_id: usize,
    pub home_team: String,
    pub away_team: String,
    /// Absent when no bookmaker quoted a full home/draw/away line.
    pub board: Option<OddsBoard>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BankrollReport {
    /// Bankroll at the start of the matchday (before today's stakes).
    pub balance: Money,
    pub staked: Money,
    pub available: Money,
    pub open_bets: usize,
    pub ruined: bool,
    pub terminal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementReport {
    pub settlement: Settlement,
    /// Results that became visible by advancing.
    pub disclosed: Vec<MatchRecord>,
    pub terminal: Option<TerminalSummary>,
}

#[derive(Debug, Clone)]
struct Matchday {
    date: NaiveDate,
    fixtures: Vec<MatchRecord>,
    boards: Vec<Option<OddsBoard>>,
}

#[derive(Debug, Clone)]
pub struct SeasonLedger {
    scenario: ScenarioSpec,
    label: String,
    line: LineConfig,
    data: Arc<Dataset>,
    days: Vec<Matchday>,
    day: usize,
    day_start: Money,
    available: Money,
    open: Vec<BetTicket>,
    rewards: Vec<f64>,
    bankroll_path: Vec<Money>,
    log: Vec<LogEvent>,
    next_ticket: u64,
    terminal: bool,
    ruined: bool,
}

impl SeasonLedger {
    /// Starts an episode at the first matchday of the scenario's season.
    pub fn new(
        scenario: ScenarioSpec,
        data: Arc<Dataset>,
        line: LineConfig,
        label: impl Into<String>,
    ) -> Result<Self, EngineError> {
        let days: Vec<Matchday> = data
            .matches
            .matchdays(&scenario.season_id)
            .into_iter()
            .map(|(date, fixtures)| {
                let fixtures: Vec<MatchRecord> = fixtures.into_iter().cloned().collect();
                let boards = fixtures
                    .iter()
                    .map(|r| match select_line(r, &line) {
                        Ok(b) => Some(b),
                        Err(MarketError::Untradable(key)) => {
                            log::warn!("fixture {key} has no tradable line");
                            None
                        }
                        Err(e) => unreachable!("select_line only fails as untradable: {e}"),
                    })
                    .collect();
                Matchday {
                    date,
                    fixtures,
                    boards,
                }
            })
            .collect();
        if days.is_empty() {
            return Err(EngineError::EmptySeason {
                season: scenario.season_id.clone(),
            });
        }
        if days.len() != scenario.expected_matchdays as usize {
            log::warn!(
                "scenario {:?} expects {} matchdays, data has {}",
                scenario.name,
                scenario.expected_matchdays,
                days.len()
            );
        }
        let initial = scenario.initial_bankroll;
        let mut ledger = SeasonLedger {
            label: label.into(),
            line,
            data,
            day: 0,
            day_start: initial,
            available: initial,
            open: Vec::new(),
            rewards: Vec::new(),
            bankroll_path: vec![initial],
            log: Vec::new(),
            next_ticket: 1,
            terminal: false,
            ruined: false,
            scenario,
            days,
        };
        let start = SeasonStart {
            scenario: ledger.scenario.clone(),
            label: ledger.label.clone(),
            line: ledger.line.clone(),
            matchdays: ledger.days.len(),
            first_date: ledger.days[0].date,
        };
        ledger.push(Event::SeasonStart(start));
        Ok(ledger)
    }

    fn push(&mut self, event: Event) {
        let seq = self.log.len() as u64 + 1;
        self.log.push(LogEvent {
            seq,
            event,
            bankroll_after: self.available,
        });
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn line(&self) -> &LineConfig {
        &self.line
    }

    pub fn data(&self) -> &Arc<Dataset> {
        &self.data
    }

    /// 1-based matchday index.
    pub fn matchday(&self) -> usize {
        self.day + 1
    }

    pub fn matchday_count(&self) -> usize {
        self.days.len()
    }

    pub fn pending_matchdays(&self) -> usize {
        if self.terminal {
            0
        } else {
            self.days.len() - self.day
        }
    }

    /// Date of the current matchday; after the season, the last matchday date.
    pub fn current_date(&self) -> NaiveDate {
        self.days[self.day.min(self.days.len() - 1)].date
    }

    /// Date that bounds what has been disclosed: rows strictly before it are visible.
    pub fn disclosure_date(&self) -> NaiveDate {
        if self.terminal {
            self.days[self.day.min(self.days.len() - 1)]
                .date
                .succ_opt()
                .expect("date in range")
        } else {
            self.days[self.day].date
        }
    }

    pub fn disclosed(&self) -> DisclosedView<'_> {
        self.data.snapshot_at(self.disclosure_date())
    }

    pub fn bankroll(&self) -> Money {
        self.day_start
    }

    pub fn available(&self) -> Money {
        self.available
    }

    pub fn open_tickets(&self) -> &[BetTicket] {
        &self.open
    }

    pub fn rewards(&self) -> &[f64] {
        &self.rewards
    }

    /// Bankroll at the start of the season and after every settlement.
    pub fn bankroll_path(&self) -> &[Money] {
        &self.bankroll_path
    }

    pub fn log(&self) -> &[LogEvent] {
        &self.log
    }

    pub fn is_terminal(&self) -> bool {
        self.terminal
    }

    pub fn is_ruined(&self) -> bool {
        self.ruined
    }

    fn ensure_live(&self) -> Result<&Matchday, EngineError> {
        if self.terminal {
            return Err(EngineError::EpisodeOver);
        }
        Ok(&self.days[self.day])
    }

    /// Fixtures of the current matchday. Indices are stable until the
    /// matchday is advanced.
    pub fn view_matches(&self) -> Result<Vec<MatchView>, EngineError> {
        let day = self.ensure_live()?;
        Ok(day
            .fixtures
            .iter()
            .zip(&day.boards)
            .enumerate()
            .map(|(i, (r, b))| MatchView {
                match_id: i,
                home_team: r.home_team.clone(),
                away_team: r.away_team.clone(),
                board: b.clone(),
            })
            .collect())
    }

    /// Records a read-only tool call in the run log.
    pub fn record_view(&mut self, tool: &str) {
        let matchday = self.matchday().min(self.days.len());
        self.push(Event::View(ViewEvent {
            tool: tool.to_string(),
            matchday,
        }));
    }

    /// Accepts a wager at the board price. The stake leaves the available
    /// balance immediately. `model_probs`, when given, is the bettor's
    /// distribution over the bet's market and is kept for analytics.
    pub fn place_bet(
        &mut self,
        match_id: usize,
        bet_type: BetType,
        amount: Money,
        model_probs: Option<Vec<f64>>,
    ) -> Result<BetTicket, EngineError> {
        let day = self.ensure_live()?;
        let available_matches = day.fixtures.len();
        let board = day
            .boards
            .get(match_id)
            .ok_or(EngineError::InvalidMatch {
                match_id,
                available: available_matches,
            })?
            .as_ref()
            .ok_or(EngineError::MarketUnavailable {
                match_id,
                bet: bet_type,
            })?;
        let odds = board.price(bet_type).ok_or(EngineError::MarketUnavailable {
            match_id,
            bet: bet_type,
        })?;
        let market_odds = board
            .market_prices(bet_type.market())
            .expect("priced bet has a fully quoted market");
        if let Some(p) = &model_probs {
            if p.len() != market_odds.len() || p.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(EngineError::BadModelProbs {
                    expected: market_odds.len(),
                });
            }
        }
        if amount < Money::MIN_STAKE {
            return Err(EngineError::StakeTooSmall { amount });
        }
        if amount > self.available {
            return Err(EngineError::InsufficientFunds {
                amount,
                available: self.available,
            });
        }
        let date = day.date;
        let fixture = day.fixtures[match_id].key();
        let ticket = BetTicket {
            ticket_id: self.next_ticket,
            match_id,
            fixture: fixture.clone(),
            bet_type,
            stake: amount,
            odds,
            potential_return: amount.times_odds(odds),
            status: TicketStatus::Open,
        };
        self.next_ticket += 1;
        self.available -= amount;
        self.open.push(ticket.clone());
        self.push(Event::BetPlaced(BetPlaced {
            ticket_id: ticket.ticket_id,
            matchday: self.matchday(),
            date,
            match_id,
            home_team: fixture.home_team,
            away_team: fixture.away_team,
            bet_type,
            stake: amount,
            odds,
            potential_return: ticket.potential_return,
            market_odds,
            model_probs,
        }));
        Ok(ticket)
    }

    pub fn view_bankroll(&self) -> BankrollReport {
        BankrollReport {
            balance: self.day_start,
            staked: self.open.iter().map(|t| t.stake).sum(),
            available: self.available,
            open_bets: self.open.len(),
            ruined: self.ruined,
            terminal: self.terminal,
        }
    }

    /// Settles today's tickets and moves to the next matchday. Refuses when no
    /// bet has been placed, unless the matchday had nothing tradable.
    pub fn next_matchday(&mut self) -> Result<SettlementReport, EngineError> {
        self.ensure_live()?;
        let day = &self.days[self.day];
        let tradable = day.boards.iter().any(Option::is_some);
        if self.open.is_empty() && tradable {
            return Err(EngineError::NoBetsPlaced);
        }
        let date = day.date;
        let mut tickets = Vec::with_capacity(self.open.len());
        let mut returned = Money::ZERO;
        for t in &mut self.open {
            let record = &day.fixtures[t.match_id];
            let won = t.bet_type.wins(record.home_goals, record.away_goals);
            let payout = if won { t.potential_return } else { Money::ZERO };
            t.status = if won {
                TicketStatus::Won
            } else {
                TicketStatus::Lost
            };
            returned += payout;
            tickets.push(SettledTicket {
                ticket_id: t.ticket_id,
                match_id: t.match_id,
                home_team: record.home_team.clone(),
                away_team: record.away_team.clone(),
                bet_type: t.bet_type,
                stake: t.stake,
                odds: t.odds,
                won,
                payout,
                home_goals: record.home_goals,
                away_goals: record.away_goals,
            });
        }
        let staked: Money = self.open.iter().map(|t| t.stake).sum();
        let before = self.day_start;
        let after = self.available + returned;
        debug_assert_eq!(after, before - staked + returned);
        let ruin = after.is_zero();
        let reward = (!ruin).then(|| (after.milli() as f64 / before.milli() as f64).ln());

        let previous_disclosure = self.disclosure_date();
        self.open.clear();
        self.available = after;
        self.day_start = after;
        self.bankroll_path.push(after);
        if let Some(r) = reward {
            self.rewards.push(r);
        }
        self.day += 1;
        let last = self.day >= self.days.len();
        if ruin || last {
            self.terminal = true;
            self.ruined = ruin;
        }
        let next_date = (!self.terminal).then(|| self.days[self.day].date);
        let settlement = Settlement {
            matchday: self.day,
            date,
            tickets,
            staked,
            returned,
            net: returned - staked,
            bankroll_before: before,
            bankroll_after: after,
            reward,
            ruin,
            next_date,
        };
        self.push(Event::Settlement(settlement.clone()));
        let terminal = self.terminal.then(|| {
            let summary = self.summary();
            self.push(Event::Terminal(summary.clone()));
            summary
        });
        let disclosed = self
            .disclosed()
            .matches_since(previous_disclosure)
            .to_vec();
        Ok(SettlementReport {
            settlement,
            disclosed,
            terminal,
        })
    }

    fn summary(&self) -> TerminalSummary {
        let initial = self.scenario.initial_bankroll;
        TerminalSummary {
            initial_bankroll: initial,
            final_bankroll: self.day_start,
            profit_loss: self.day_start - initial,
            roi: roi(initial, self.day_start),
            ruined: self.ruined,
            matchdays_played: self.bankroll_path.len() - 1,
            total_reward: self.rewards.iter().sum(),
        }
    }

    /// Summary of a finished episode.
    pub fn terminal_summary(&self) -> Option<TerminalSummary> {
        self.terminal.then(|| self.summary())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_date, season_of, BookQuote, FullTime, MatchTable, PlayerTable, Split};
    use std::collections::BTreeMap;

    fn odds(s: &str) -> Odds {
        s.parse().unwrap()
    }

    fn fixture(date: &str, home: &str, away: &str, hg: u32, ag: u32, prices: [&str; 5]) -> MatchRecord {
        let date = parse_date(date).unwrap();
        let mut book_odds = BTreeMap::new();
        let p = |s: &str| (!s.is_empty()).then(|| odds(s));
        book_odds.insert(
            "B365".to_string(),
            BookQuote {
                home: p(prices[0]),
                draw: p(prices[1]),
                away: p(prices[2]),
                over25: p(prices[3]),
                under25: p(prices[4]),
            },
        );
        MatchRecord {
            season_id: season_of(date),
            date,
            home_team: home.into(),
            away_team: away.into(),
            home_goals: hg,
            away_goals: ag,
            result: FullTime::from_goals(hg, ag),
            half_time: None,
            stats: None,
            book_odds,
        }
    }

    fn scenario(bankroll: i64, matchdays: u32) -> ScenarioSpec {
        ScenarioSpec {
            name: "Test".into(),
            season_id: "2023/24".into(),
            initial_bankroll: Money::from_pounds(bankroll),
            expected_matchdays: matchdays,
            split: Split::Test,
        }
    }

    fn data() -> Arc<Dataset> {
        let ab = ["8.0", "5.5", "1.33", "1.67", "2.2"];
        Arc::new(Dataset::new(
            MatchTable::new(vec![
                fixture("20/05/2023", "Arsenal", "Wolves", 5, 0, ab),
                fixture("11/08/2023", "Burnley", "Man City", 0, 3, ab),
                fixture("12/08/2023", "Arsenal", "Nott'm Forest", 2, 1, ["1.18", "7.0", "15.0", "1.4", "3.0"]),
                fixture("12/08/2023", "Bournemouth", "West Ham", 1, 1, ["2.5", "3.5", "2.7", "", ""]),
                fixture("13/08/2023", "Brentford", "Tottenham", 2, 2, ["3.0", "3.6", "2.3", "1.6", "2.3"]),
            ])
            .unwrap(),
            PlayerTable::default(),
        ))
    }

    fn ledger() -> SeasonLedger {
        SeasonLedger::new(scenario(220, 3), data(), LineConfig::default(), "test").unwrap()
    }

    #[test]
    fn opening_matchday_trace() {
        let mut l = ledger();
        assert_eq!(l.pending_matchdays(), 3);
        let view = l.view_matches().unwrap();
        assert_eq!(view.len(), 1);
        assert_eq!(view[0].home_team, "Burnley");
        let t = l.place_bet(0, BetType::Home, Money::from_pounds(17), None).unwrap();
        assert_eq!(t.potential_return, Money::from_pounds(136));
        l.place_bet(0, BetType::Draw, Money::from_pounds(6), None).unwrap();
        let t = l.place_bet(0, BetType::Under25, Money::from_pounds(5), None).unwrap();
        assert_eq!(t.potential_return, Money::from_pounds(11));
        let b = l.view_bankroll();
        assert_eq!(
            (b.balance, b.staked, b.available),
            (Money::from_pounds(220), Money::from_pounds(28), Money::from_pounds(192))
        );
        let report = l.next_matchday().unwrap();
        let s = &report.settlement;
        assert!(s.tickets.iter().all(|t| !t.won));
        assert_eq!(s.net, Money::from_pounds(-28));
        assert_eq!(s.bankroll_after, Money::from_pounds(192));
        assert!((s.reward.unwrap() - (192.0f64 / 220.0).ln()).abs() < 1e-12);
        assert_eq!(s.next_date, parse_date("12/08/2023"));
        assert_eq!(report.disclosed.len(), 1);
        assert_eq!(report.disclosed[0].home_team, "Burnley");
        assert_eq!(l.view_matches().unwrap().len(), 2);
    }

    #[test]
    fn rejections_leave_state_unchanged() {
        let mut l = ledger();
        let before = (l.available(), l.log().len());
        assert_eq!(l.next_matchday().unwrap_err(), EngineError::NoBetsPlaced);
        let too_much = Money::from_milli(220_001);
        assert!(matches!(
            l.place_bet(0, BetType::Home, too_much, None),
            Err(EngineError::InsufficientFunds { .. })
        ));
        assert!(matches!(
            l.place_bet(1, BetType::Home, Money::from_pounds(1), None),
            Err(EngineError::InvalidMatch { .. })
        ));
        assert!(matches!(
            l.place_bet(0, BetType::Home, Money::ZERO, None),
            Err(EngineError::StakeTooSmall { .. })
        ));
        assert!(matches!(
            l.place_bet(0, BetType::Home, Money::from_pounds(1), Some(vec![0.5, 0.5])),
            Err(EngineError::BadModelProbs { expected: 3 })
        ));
        assert_eq!((l.available(), l.log().len()), before);
        // full bankroll is allowed
        l.place_bet(0, BetType::Away, Money::from_pounds(220), None).unwrap();
        assert_eq!(l.available(), Money::ZERO);
    }

    #[test]
    fn missing_market_is_rejected() {
        let mut l = ledger();
        l.place_bet(0, BetType::Away, Money::from_pounds(1), None).unwrap();
        l.next_matchday().unwrap();
        assert!(matches!(
            l.place_bet(1, BetType::Over25, Money::from_pounds(1), None),
            Err(EngineError::MarketUnavailable { .. })
        ));
    }

    #[test]
    fn winning_bet_and_termination() {
        let mut l = ledger();
        l.place_bet(0, BetType::Away, Money::from_pounds(10), None).unwrap();
        let s = l.next_matchday().unwrap().settlement;
        // 10 × 1.33 = 13.3
        assert_eq!(s.returned, Money::from_milli(13_300));
        assert_eq!(s.bankroll_after, Money::from_milli(223_300));
        l.place_bet(0, BetType::Under25, Money::from_pounds(10), None).unwrap();
        l.place_bet(1, BetType::Draw, Money::from_pounds(1), None).unwrap();
        let s = l.next_matchday().unwrap().settlement;
        // Arsenal 2-1: 3 goals, under loses; Bournemouth 1-1 draw at 3.5 wins
        assert_eq!(s.net, Money::from_milli(-7_500));
        l.place_bet(0, BetType::Under25, Money::from_pounds(1), None).unwrap();
        let report = l.next_matchday().unwrap();
        let summary = report.terminal.unwrap();
        assert!(l.is_terminal());
        assert!(!summary.ruined);
        assert_eq!(summary.final_bankroll, l.bankroll());
        let total: f64 = l.rewards().iter().sum();
        let direct = (l.bankroll().as_f64() / 220.0).ln();
        assert!((total - direct).abs() < 1e-12);
        assert_eq!(l.view_matches().unwrap_err(), EngineError::EpisodeOver);
        assert_eq!(l.next_matchday().unwrap_err(), EngineError::EpisodeOver);
        assert!(l.place_bet(0, BetType::Home, Money::MIN_STAKE, None).is_err());
        assert!(matches!(l.log().last().unwrap().event, Event::Terminal(_)));
    }

    #[test]
    fn ruin_is_absorbing() {
        let mut l = ledger();
        l.place_bet(0, BetType::Home, Money::from_pounds(220), None).unwrap();
        let report = l.next_matchday().unwrap();
        assert!(report.settlement.ruin);
        assert_eq!(report.settlement.reward, None);
        assert!(l.is_ruined() && l.is_terminal());
        let b = l.view_bankroll();
        assert_eq!(b.balance, Money::ZERO);
        assert!(b.ruined);
        assert!(l.rewards().is_empty());
        assert_eq!(report.terminal.unwrap().roi, -1.0);
    }

    #[test]
    fn missing_season_is_an_error() {
        let mut s = scenario(100, 97);
        s.season_id = "2000/01".into();
        assert!(matches!(
            SeasonLedger::new(s, data(), LineConfig::default(), "x"),
            Err(EngineError::EmptySeason { .. })
        ));
    }

    #[test]
    fn disclosure_advances_with_matchdays() {
        let mut l = ledger();
        assert_eq!(l.disclosed().matches.len(), 1);
        l.place_bet(0, BetType::Home, Money::MIN_STAKE, None).unwrap();
        l.next_matchday().unwrap();
        assert_eq!(l.disclosed().matches.len(), 2);
        assert!(l.disclosed().matches.iter().all(|r| r.date < l.current_date()));
    }
}
