//! Rules-based baseline strategies.

pub mod dixon_coles;
pub mod optim;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dixon_coles::{fit_strengths, FitError, FitOptions, MatchForecast, StrengthModel};

use crate::dataset::{DisclosedView, FixtureKey};
use crate::engine::MatchView;
use crate::market::{implied_distribution, BetType, Market, OddsBoard};
use crate::money::{Money, Odds};
use crate::staking::{plan_stakes, stake_size, StakeCaps, StakingError};

/// Names accepted by [`build_strategy`].
pub const STRATEGY_NAMES: &[&str] = &["favourites", "dixon_coles"];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("unknown strategy {name:?}; registered strategies: {}", registered.join(", "))]
    Unknown { name: String, registered: Vec<String> },
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Staking(#[from] StakingError),
    #[error("invalid configuration: {0}")]
    Config(String),
}

/// Everything a strategy may look at on one matchday.
#[derive(Debug, Clone)]
pub struct MatchdayContext<'a> {
    pub date: NaiveDate,
    pub matches: &'a [MatchView],
    pub history: DisclosedView<'a>,
    /// Bankroll at the start of the matchday.
    pub bankroll: Money,
    pub available: Money,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetOrder {
    pub match_id: usize,
    pub bet_type: BetType,
    pub amount: Money,
    /// The strategy's distribution over the bet's market.
    pub model_probs: Option<Vec<f64>>,
}

pub trait Strategy: Send {
    fn name(&self) -> &str;
    fn decide(&mut self, ctx: &MatchdayContext<'_>) -> Result<Vec<BetOrder>, StrategyError>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    pub xi: f64,
    /// Weight on the model when blending with the market, for every team.
    pub blend_w: f64,
    /// Model weight for fixtures involving a team priced from the prior.
    pub promoted_w: f64,
    pub edge_threshold: f64,
    pub kelly_lambda: f64,
    /// Per-bet cap as a fraction of bankroll.
    pub cap: f64,
    /// Cap on total matchday exposure.
    pub total_cap: f64,
    pub history_days: Option<u32>,
    pub ridge: f64,
    /// Fraction staked by the favourites rule.
    pub favourite_fraction: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        let fit = FitOptions::default();
        let caps = StakeCaps::default();
        StrategyConfig {
            xi: fit.xi,
            blend_w: 1.0,
            promoted_w: 0.5,
            edge_threshold: 0.05,
            kelly_lambda: 0.25,
            cap: caps.per_bet,
            total_cap: caps.total,
            history_days: fit.history_days,
            ridge: fit.ridge,
            favourite_fraction: 0.05,
        }
    }
}

impl StrategyConfig {
    pub fn from_toml(text: &str) -> Result<Self, StrategyError> {
        toml::from_str(text).map_err(|e| StrategyError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        let unit = |name: &str, v: f64, open_low: bool| {
            let ok = if open_low { v > 0.0 && v <= 1.0 } else { (0.0..=1.0).contains(&v) };
            if ok {
                Ok(())
            } else {
                Err(StrategyError::Config(format!("{name} = {v} is out of range")))
            }
        };
        unit("blend_w", self.blend_w, false)?;
        unit("promoted_w", self.promoted_w, false)?;
        unit("kelly_lambda", self.kelly_lambda, true)?;
        unit("cap", self.cap, true)?;
        unit("total_cap", self.total_cap, true)?;
        unit("favourite_fraction", self.favourite_fraction, true)?;
        if !(self.xi >= 0.0 && self.xi.is_finite()) {
            return Err(StrategyError::Config(format!("xi = {} must be a nonnegative number", self.xi)));
        }
        if !(self.edge_threshold >= 0.0) {
            return Err(StrategyError::Config(format!("edge_threshold = {} is negative", self.edge_threshold)));
        }
        if !(self.ridge >= 0.0) {
            return Err(StrategyError::Config(format!("ridge = {} is negative", self.ridge)));
        }
        Ok(())
    }

    pub fn caps(&self) -> StakeCaps {
        StakeCaps {
            per_bet: self.cap,
            total: self.total_cap,
        }
    }

    pub fn fit_options(&self) -> FitOptions {
        FitOptions {
            xi: self.xi,
            ridge: self.ridge,
            history_days: self.history_days,
            ..FitOptions::default()
        }
    }
}

pub fn build_strategy(name: &str, config: &StrategyConfig) -> Result<Box<dyn Strategy>, StrategyError> {
    config.validate()?;
    match name {
        "favourites" => Ok(Box::new(Favourites {
            fraction: config.favourite_fraction,
        })),
        "dixon_coles" => Ok(Box::new(DixonColes::new(*config))),
        _ => Err(StrategyError::Unknown {
            name: name.to_string(),
            registered: STRATEGY_NAMES.iter().map(|s| s.to_string()).collect(),
        }),
    }
}

/// The 1X2 outcome with the lowest price; ties go home, then draw, then away.
pub fn favourite(board: &OddsBoard) -> BetType {
    let mut best = BetType::Home;
    for b in [BetType::Draw, BetType::Away] {
        if board.price(b) < board.price(best) {
            best = b;
        }
    }
    best
}

/// One bet per tradable fixture on the favourite, each staking `fraction` of
/// what is still available after the previous stakes, floored to the
/// milli-pound and never below the minimum stake.
pub fn favourites_only(matches: &[MatchView], available: Money, fraction: f64) -> Vec<BetOrder> {
    let mut left = available;
    let mut orders = Vec::new();
    for m in matches {
        let Some(board) = &m.board else {
            log::warn!("skipping {} vs {}: no tradable line", m.home_team, m.away_team);
            continue;
        };
        if left < Money::MIN_STAKE {
            break;
        }
        let amount = left.scale_floor(fraction).max(Money::MIN_STAKE);
        left -= amount;
        orders.push(BetOrder {
            match_id: m.match_id,
            bet_type: favourite(board),
            amount,
            model_probs: None,
        });
    }
    orders
}

#[derive(Debug, Clone)]
pub struct Favourites {
    pub fraction: f64,
}

impl Strategy for Favourites {
    fn name(&self) -> &str {
        "favourites"
    }

    fn decide(&mut self, ctx: &MatchdayContext<'_>) -> Result<Vec<BetOrder>, StrategyError> {
        Ok(favourites_only(ctx.matches, ctx.available, self.fraction))
    }
}

/// `w·model + (1 − w)·market`, renormalised.
pub fn blend_with_market(model: &[f64], market: &[f64], w: f64) -> Vec<f64> {
    assert_eq!(model.len(), market.len(), "outcome spaces differ");
    let mixed: Vec<f64> = model
        .iter()
        .zip(market)
        .map(|(p, q)| w * p + (1.0 - w) * q)
        .collect();
    let total: f64 = mixed.iter().sum();
    mixed.into_iter().map(|v| v / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueBet {
    pub fixture: FixtureKey,
    pub bet_type: BetType,
    pub model_prob: f64,
    pub odds: Odds,
    pub edge: f64,
    pub fraction: f64,
}

impl ValueBet {
    pub fn market(&self) -> Market {
        self.bet_type.market()
    }
}

/// Edge of every quoted outcome, in `BetType::ALL` order.
pub fn edges(forecast: &MatchForecast, board: &OddsBoard) -> Vec<(BetType, f64, Odds, f64)> {
    BetType::ALL
        .iter()
        .filter_map(|&b| {
            let odds = board.price(b)?;
            let p = match b.market() {
                Market::OneXTwo => forecast.outcome[b.index()],
                Market::OverUnder25 => forecast.totals[b.index()],
            };
            Some((b, p, odds, p * odds.decimal() - 1.0))
        })
        .collect()
}

/// Outcomes whose edge `p·odds − 1` exceeds `threshold`, with their
/// fractional-Kelly stake.
pub fn select_value_bets(
    forecast: &MatchForecast,
    board: &OddsBoard,
    threshold: f64,
    lambda: f64,
    caps: StakeCaps,
) -> Result<Vec<ValueBet>, StakingError> {
    edges(forecast, board)
        .into_iter()
        .filter(|&(_, _, _, edge)| edge > threshold)
        .map(|(bet_type, p, odds, edge)| {
            Ok(ValueBet {
                fixture: board.fixture.clone(),
                bet_type,
                model_prob: p,
                odds,
                edge,
                fraction: stake_size(p, odds.net(), lambda, caps.per_bet)?,
            })
        })
        .collect()
}

/// Dixon-Coles forecasts blended with the market, bet where the edge clears
/// the threshold, sized by fractional Kelly under per-bet and total caps.
#[derive(Debug, Clone)]
pub struct DixonColes {
    config: StrategyConfig,
    last_fit: Option<StrengthModel>,
}

impl DixonColes {
    pub fn new(config: StrategyConfig) -> Self {
        DixonColes {
            config,
            last_fit: None,
        }
    }

    pub fn last_fit(&self) -> Option<&StrengthModel> {
        self.last_fit.as_ref()
    }

    /// Model forecast for one fixture after blending each market with its
    /// vig-free prices.
    pub fn forecast(&self, model: &StrengthModel, m: &MatchView, board: &OddsBoard) -> Result<MatchForecast, StrategyError> {
        let mut f = model.predict(&m.home_team, &m.away_team, true)?;
        let w = if f.used_prior {
            self.config.promoted_w.min(self.config.blend_w)
        } else {
            self.config.blend_w
        };
        let q = implied_distribution(board, Market::OneXTwo).expect("boards always carry 1X2");
        let o = blend_with_market(&f.outcome, &q.q, w);
        f.outcome = [o[0], o[1], o[2]];
        if let Ok(q) = implied_distribution(board, Market::OverUnder25) {
            let t = blend_with_market(&f.totals, &q.q, w);
            f.totals = [t[0], t[1]];
        }
        Ok(f)
    }
}

fn market_probs(f: &MatchForecast, market: Market) -> Vec<f64> {
    match market {
        Market::OneXTwo => f.outcome.to_vec(),
        Market::OverUnder25 => f.totals.to_vec(),
    }
}

impl Strategy for DixonColes {
    fn name(&self) -> &str {
        "dixon_coles"
    }

    fn decide(&mut self, ctx: &MatchdayContext<'_>) -> Result<Vec<BetOrder>, StrategyError> {
        let model = fit_strengths(
            ctx.history.matches,
            ctx.date,
            &self.config.fit_options(),
            self.last_fit.as_ref(),
        )?;
        let caps = self.config.caps();
        let mut picks: Vec<(usize, ValueBet, Vec<f64>)> = Vec::new();
        let mut best: Option<(f64, usize, BetType, Vec<f64>)> = None;
        for m in ctx.matches {
            let Some(board) = &m.board else {
                log::warn!("skipping {} vs {}: no tradable line", m.home_team, m.away_team);
                continue;
            };
            let f = self.forecast(&model, m, board)?;
            for (b, _, _, edge) in edges(&f, board) {
                if best.as_ref().is_none_or(|(e, ..)| edge > *e) {
                    best = Some((edge, m.match_id, b, market_probs(&f, b.market())));
                }
            }
            for v in select_value_bets(&f, board, self.config.edge_threshold, self.config.kelly_lambda, caps)? {
                let probs = market_probs(&f, v.market());
                picks.push((m.match_id, v, probs));
            }
        }
        self.last_fit = Some(model);

        let candidates: Vec<(f64, f64)> = picks.iter().map(|(_, v, _)| (v.model_prob, v.odds.net())).collect();
        let plan = plan_stakes(&candidates, self.config.kelly_lambda, caps)?;
        let mut left = ctx.available;
        let mut orders = Vec::new();
        for ((match_id, v, probs), fraction) in picks.into_iter().zip(plan.fractions) {
            let amount = ctx.available.scale_floor(fraction);
            if amount < Money::MIN_STAKE || amount > left {
                continue;
            }
            left -= amount;
            orders.push(BetOrder {
                match_id,
                bet_type: v.bet_type,
                amount,
                model_probs: Some(probs),
            });
        }
        if orders.is_empty() && ctx.available >= Money::MIN_STAKE {
            // the environment insists on a bet: stake the minimum on the best edge
            if let Some((_, match_id, bet_type, probs)) = best {
                orders.push(BetOrder {
                    match_id,
                    bet_type,
                    amount: Money::MIN_STAKE,
                    model_probs: Some(probs),
                });
            }
        }
        Ok(orders)
    }
}

/// Seeded random bettor used to exercise the engine.
#[derive(Debug, Clone)]
pub struct RandomBettor {
    rng: ChaCha8Rng,
    /// Probability of staking everything on one bet.
    pub all_in: f64,
    pub max_bets: usize,
}

impl RandomBettor {
    pub fn new(seed: u64) -> Self {
        RandomBettor {
            rng: ChaCha8Rng::seed_from_u64(seed),
            all_in: 0.02,
            max_bets: 3,
        }
    }
}

impl Strategy for RandomBettor {
    fn name(&self) -> &str {
        "random"
    }

    fn decide(&mut self, ctx: &MatchdayContext<'_>) -> Result<Vec<BetOrder>, StrategyError> {
        let tradable: Vec<(&MatchView, &OddsBoard)> = ctx
            .matches
            .iter()
            .filter_map(|m| m.board.as_ref().map(|b| (m, b)))
            .collect();
        let mut left = ctx.available;
        let mut orders = Vec::new();
        if tradable.is_empty() {
            return Ok(orders);
        }
        let n = self.rng.random_range(1..=self.max_bets);
        for _ in 0..n {
            if left < Money::MIN_STAKE {
                break;
            }
            let (m, board) = tradable[self.rng.random_range(0..tradable.len())];
            let priced: Vec<BetType> = BetType::ALL.iter().copied().filter(|&b| board.price(b).is_some()).collect();
            let bet_type = priced[self.rng.random_range(0..priced.len())];
            let amount = if self.rng.random::<f64>() < self.all_in {
                left
            } else {
                left.scale_floor(self.rng.random_range(0.0..0.3)).max(Money::MIN_STAKE)
            };
            left -= amount;
            orders.push(BetOrder {
                match_id: m.match_id,
                bet_type,
                amount,
                model_probs: None,
            });
        }
        Ok(orders)
    }
}
