//! Tradable boards built from bookmaker quotes, and the probabilities they imply.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{FixtureKey, MatchRecord};
use crate::money::{div_round_half_even, Odds};

/// Order used when the configured line policy is `fallback`.
pub const DEFAULT_BOOK_ORDER: &[&str] = &["B365", "GB", "IW"];

/// Columns that summarise other bookmakers rather than quote a price.
const AGGREGATE_BOOKS: &[&str] = &["Max", "Avg", "BbMx", "BbAv", "MaxC", "AvgC"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarketError {
    #[error("no bookmaker quotes a full home/draw/away line for {0}")]
    Untradable(FixtureKey),
    #[error("market {market} is not quoted for {fixture}")]
    MissingMarket { market: Market, fixture: FixtureKey },
    #[error("unknown bet type {0:?}")]
    UnknownBetType(String),
    #[error("unknown line policy {0:?}; expected fallback or middle")]
    UnknownPolicy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Market {
    #[serde(rename = "1X2")]
    OneXTwo,
    #[serde(rename = "OU25")]
    OverUnder25,
}

impl Market {
    pub fn outcomes(self) -> &'static [BetType] {
        match self {
            Market::OneXTwo => &[BetType::Home, BetType::Draw, BetType::Away],
            Market::OverUnder25 => &[BetType::Over25, BetType::Under25],
        }
    }
}

impl fmt::Display for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Market::OneXTwo => "1X2",
            Market::OverUnder25 => "OU25",
        })
    }
}

/// The five wagers the environment accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BetType {
    #[serde(rename = "home")]
    Home,
    #[serde(rename = "draw")]
    Draw,
    #[serde(rename = "away")]
    Away,
    #[serde(rename = "over_2_5")]
    Over25,
    #[serde(rename = "under_2_5")]
    Under25,
}

impl BetType {
    pub const ALL: [BetType; 5] = [
        BetType::Home,
        BetType::Draw,
        BetType::Away,
        BetType::Over25,
        BetType::Under25,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BetType::Home => "home",
            BetType::Draw => "draw",
            BetType::Away => "away",
            BetType::Over25 => "over_2_5",
            BetType::Under25 => "under_2_5",
        }
    }

    pub fn market(self) -> Market {
        match self {
            BetType::Home | BetType::Draw | BetType::Away => Market::OneXTwo,
            BetType::Over25 | BetType::Under25 => Market::OverUnder25,
        }
    }

    /// Position within the bet's market.
    pub fn index(self) -> usize {
        match self {
            BetType::Home | BetType::Over25 => 0,
            BetType::Draw | BetType::Under25 => 1,
            BetType::Away => 2,
        }
    }

    /// Over 2.5 needs three or more goals; under needs two or fewer.
    pub fn wins(self, home_goals: u32, away_goals: u32) -> bool {
        match self {
            BetType::Home => home_goals > away_goals,
            BetType::Draw => home_goals == away_goals,
            BetType::Away => home_goals < away_goals,
            BetType::Over25 => home_goals + away_goals >= 3,
            BetType::Under25 => home_goals + away_goals <= 2,
        }
    }

    /// The outcome of `market` realised by a scoreline.
    pub fn realised(market: Market, home_goals: u32, away_goals: u32) -> BetType {
        *market
            .outcomes()
            .iter()
            .find(|b| b.wins(home_goals, away_goals))
            .expect("every scoreline settles exactly one outcome per market")
    }
}

impl fmt::Display for BetType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BetType {
    type Err = MarketError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BetType::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| MarketError::UnknownBetType(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinePolicy {
    #[default]
    Fallback,
    Middle,
}

impl FromStr for LinePolicy {
    type Err = MarketError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "fallback" => Ok(LinePolicy::Fallback),
            "middle" => Ok(LinePolicy::Middle),
            other => Err(MarketError::UnknownPolicy(other.to_string())),
        }
    }
}

impl fmt::Display for LinePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LinePolicy::Fallback => "fallback",
            LinePolicy::Middle => "middle",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct LineConfig {
    pub policy: LinePolicy,
    pub order: Vec<String>,
}

impl Default for LineConfig {
    fn default() -> Self {
        LineConfig {
            policy: LinePolicy::Fallback,
            order: DEFAULT_BOOK_ORDER.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl LineConfig {
    pub fn middle() -> Self {
        LineConfig {
            policy: LinePolicy::Middle,
            ..LineConfig::default()
        }
    }
}

/// The prices offered on one fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OddsBoard {
    pub fixture: FixtureKey,
    pub home: Odds,
    pub draw: Odds,
    pub away: Odds,
    pub over25: Option<Odds>,
    pub under25: Option<Odds>,
    /// Bookmaker id, or "middle".
    pub source: String,
}

impl OddsBoard {
    pub fn price(&self, bet: BetType) -> Option<Odds> {
        match bet {
            BetType::Home => Some(self.home),
            BetType::Draw => Some(self.draw),
            BetType::Away => Some(self.away),
            BetType::Over25 => self.over25,
            BetType::Under25 => self.under25,
        }
    }

    /// Prices of a whole market, in outcome order.
    pub fn market_prices(&self, market: Market) -> Option<Vec<Odds>> {
        market.outcomes().iter().map(|&b| self.price(b)).collect()
    }
}

fn median_milli(mut values: Vec<u32>) -> Option<Odds> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let n = values.len();
    let m = if n % 2 == 1 {
        values[n / 2]
    } else {
        let sum = i128::from(values[n / 2 - 1]) + i128::from(values[n / 2]);
        div_round_half_even(sum, 2) as u32
    };
    Odds::from_milli(m)
}

/// Chooses the tradable board for a fixture under the configured policy.
pub fn select_line(record: &MatchRecord, line: &LineConfig) -> Result<OddsBoard, MarketError> {
    let fixture = record.key();
    match line.policy {
        LinePolicy::Fallback => {
            let (source, trio) = line
                .order
                .iter()
                .find_map(|b| {
                    let q = record.book_odds.get(b)?;
                    Some((b.clone(), q.trio()?))
                })
                .ok_or_else(|| MarketError::Untradable(fixture.clone()))?;
            let totals = line
                .order
                .iter()
                .find_map(|b| record.book_odds.get(b)?.totals());
            Ok(OddsBoard {
                fixture,
                home: trio[0],
                draw: trio[1],
                away: trio[2],
                over25: totals.map(|t| t[0]),
                under25: totals.map(|t| t[1]),
                source,
            })
        }
        LinePolicy::Middle => {
            let quotes: Vec<_> = record
                .book_odds
                .iter()
                .filter(|(name, _)| !AGGREGATE_BOOKS.contains(&name.as_str()))
                .map(|(_, q)| *q)
                .collect();
            if !quotes.iter().any(|q| q.trio().is_some()) {
                return Err(MarketError::Untradable(fixture));
            }
            let med = |pick: fn(&crate::dataset::BookQuote) -> Option<Odds>| {
                median_milli(quotes.iter().filter_map(pick).map(Odds::milli).collect())
            };
            let over = med(|q| q.over25);
            let under = med(|q| q.under25);
            let (over25, under25) = match (over, under) {
                (Some(o), Some(u)) => (Some(o), Some(u)),
                _ => (None, None),
            };
            Ok(OddsBoard {
                fixture: fixture.clone(),
                home: med(|q| q.home).ok_or_else(|| MarketError::Untradable(fixture.clone()))?,
                draw: med(|q| q.draw).ok_or_else(|| MarketError::Untradable(fixture.clone()))?,
                away: med(|q| q.away).ok_or_else(|| MarketError::Untradable(fixture.clone()))?,
                over25,
                under25,
                source: "middle".into(),
            })
        }
    }
}

/// Probabilities implied by one market's prices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketDistribution {
    /// Reciprocals of the decimal odds.
    pub raw: Vec<f64>,
    /// `raw` normalised to sum to one (the vig-free distribution).
    pub q: Vec<f64>,
    /// Sum of reciprocals minus one.
    pub overround: f64,
}

impl MarketDistribution {
    pub fn from_prices(prices: &[f64]) -> Self {
        let raw: Vec<f64> = prices.iter().map(|o| 1.0 / o).collect();
        let total: f64 = raw.iter().sum();
        let q = raw.iter().map(|r| r / total).collect();
        MarketDistribution {
            raw,
            q,
            overround: total - 1.0,
        }
    }
}

pub fn implied_distribution(
    board: &OddsBoard,
    market: Market,
) -> Result<MarketDistribution, MarketError> {
    let prices = board
        .market_prices(market)
        .ok_or_else(|| MarketError::MissingMarket {
            market,
            fixture: board.fixture.clone(),
        })?;
    let decimals: Vec<f64> = prices.iter().map(|o| o.decimal()).collect();
    Ok(MarketDistribution::from_prices(&decimals))
}
