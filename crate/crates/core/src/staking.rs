//! Growth-optimal staking: Kelly fractions, expected log-growth, and the
//! divergence and mutual-information forms of the growth rate.
//!
//! All growth values are in nats. Allocations may leave part of wealth
//! unstaked; the remainder is held as cash, so a round's wealth factor for
//! outcome `x` is `(1 − Σb) + b(x)·o(x)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance on probability vectors summing to one.
pub const SUM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StakingError {
    #[error("net odds must be positive, got {0}")]
    NonPositiveOdds(f64),
    #[error("probability {0} outside [0, 1]")]
    Probability(f64),
    #[error("{0}")]
    Invalid(String),
    #[error("outcome {outcome} is reachable but leaves zero wealth")]
    NegativeInfiniteGrowth { outcome: usize },
    #[error("outcome {outcome} is reachable but has zero probability under the compared distribution")]
    InfiniteDivergence { outcome: usize },
}

fn check_distribution(name: &str, p: &[f64]) -> Result<(), StakingError> {
    if p.is_empty() {
        return Err(StakingError::Invalid(format!("{name} is empty")));
    }
    if let Some(x) = p.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(StakingError::Invalid(format!("{name} has entry {x}")));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > SUM_TOLERANCE {
        return Err(StakingError::Invalid(format!("{name} sums to {total}")));
    }
    Ok(())
}

/// Kelly fraction `f* = (r·p − (1 − p)) / r` for win probability `p` at net
/// odds `r`. Negative when the bet has negative expectation.
pub fn kelly_fraction(p: f64, net_odds: f64) -> Result<f64, StakingError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(StakingError::Probability(p));
    }
    if !(net_odds > 0.0) || !net_odds.is_finite() {
        return Err(StakingError::NonPositiveOdds(net_odds));
    }
    Ok((net_odds * p - (1.0 - p)) / net_odds)
}

/// Fractional-Kelly stake: `min(cap, λ·max(0, f*))`.
pub fn stake_size(p: f64, net_odds: f64, lambda: f64, cap: f64) -> Result<f64, StakingError> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(StakingError::Invalid(format!("kelly multiplier {lambda} outside (0, 1]")));
    }
    if !(cap > 0.0 && cap <= 1.0) {
        return Err(StakingError::Invalid(format!("cap {cap} outside (0, 1]")));
    }
    let f = kelly_fraction(p, net_odds)?;
    Ok((lambda * f.max(0.0)).min(cap))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StakeCaps {
    pub per_bet: f64,
    pub total: f64,
}

impl Default for StakeCaps {
    fn default() -> Self {
        StakeCaps {
            per_bet: 0.08,
            total: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StakePlan {
    pub fractions: Vec<f64>,
    pub total_exposure: f64,
    pub lambda: f64,
    pub caps: StakeCaps,
}

/// Sizes simultaneous bets independently, then rescales them proportionally
/// when their sum exceeds the total cap. `candidates` are `(p, net_odds)`.
pub fn plan_stakes(
    candidates: &[(f64, f64)],
    lambda: f64,
    caps: StakeCaps,
) -> Result<StakePlan, StakingError> {
    if !(caps.total > 0.0 && caps.total <= 1.0) {
        return Err(StakingError::Invalid(format!("total cap {} outside (0, 1]", caps.total)));
    }
    let mut fractions = candidates
        .iter()
        .map(|&(p, r)| stake_size(p, r, lambda, caps.per_bet))
        .collect::<Result<Vec<_>, _>>()?;
    let total: f64 = fractions.iter().sum();
    if total > caps.total {
        let k = caps.total / total;
        fractions.iter_mut().for_each(|f| *f *= k);
    }
    let total_exposure = fractions.iter().sum::<f64>().min(caps.total);
    Ok(StakePlan {
        fractions,
        total_exposure,
        lambda,
        caps,
    })
}

/// A single round over a finite outcome space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthProblem {
    /// Distribution the outcome is actually drawn from.
    pub true_probs: Vec<f64>,
    /// Gross (decimal) odds per outcome.
    pub odds: Vec<f64>,
    /// Wealth fraction staked per outcome; the remainder is kept as cash.
    pub allocation: Vec<f64>,
}

impl GrowthProblem {
    pub fn new(true_probs: Vec<f64>, odds: Vec<f64>, allocation: Vec<f64>) -> Result<Self, StakingError> {
        check_distribution("true distribution", &true_probs)?;
        if odds.len() != true_probs.len() || allocation.len() != true_probs.len() {
            return Err(StakingError::Invalid("odds, allocation and distribution differ in length".into()));
        }
        if let Some(o) = odds.iter().find(|o| !(**o > 0.0 && o.is_finite())) {
            return Err(StakingError::Invalid(format!("odds must be positive, got {o}")));
        }
        if allocation.iter().any(|b| !(*b >= 0.0)) {
            return Err(StakingError::Invalid("allocation has a negative entry".into()));
        }
        let staked: f64 = allocation.iter().sum();
        if staked > 1.0 + SUM_TOLERANCE {
            return Err(StakingError::Invalid(format!("allocation stakes {staked} > 1")));
        }
        Ok(GrowthProblem {
            true_probs,
            odds,
            allocation,
        })
    }

    /// Wealth multiplier if outcome `x` occurs.
    pub fn wealth_factor(&self, x: usize) -> f64 {
        let cash = (1.0 - self.allocation.iter().sum::<f64>()).max(0.0);
        cash + self.allocation[x] * self.odds[x]
    }
}

/// Expected log-growth `Σ p*(x)·ln((1 − Σb) + b(x)·o(x))`.
pub fn log_growth(problem: &GrowthProblem) -> Result<f64, StakingError> {
    let mut total = 0.0;
    for (x, &p) in problem.true_probs.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let factor = problem.wealth_factor(x);
        if !(factor > 0.0) {
            return Err(StakingError::NegativeInfiniteGrowth { outcome: x });
        }
        total += p * factor.ln();
    }
    Ok(total)
}

/// `D_KL(p ‖ q)` in nats.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, StakingError> {
    check_distribution("p", p)?;
    check_distribution("q", q)?;
    if p.len() != q.len() {
        return Err(StakingError::Invalid("distributions differ in length".into()));
    }
    let mut total = 0.0;
    for (x, (&px, &qx)) in p.iter().zip(q).enumerate() {
        if px == 0.0 {
            continue;
        }
        if qx == 0.0 {
            return Err(StakingError::InfiniteDivergence { outcome: x });
        }
        total += px * (px / qx).ln();
    }
    Ok(total)
}

/// Growth of betting beliefs `belief` against a market pricing `market` when
/// outcomes follow `truth`: `Σ p*(x)·ln(p(x)/q(x))`, which equals
/// `D_KL(p*‖q) − D_KL(p*‖p)`.
pub fn growth_vs_market(belief: &[f64], truth: &[f64], market: &[f64]) -> Result<f64, StakingError> {
    check_distribution("belief", belief)?;
    check_distribution("truth", truth)?;
    check_distribution("market", market)?;
    if belief.len() != truth.len() || market.len() != truth.len() {
        return Err(StakingError::Invalid("distributions differ in length".into()));
    }
    let mut total = 0.0;
    for x in 0..truth.len() {
        if truth[x] == 0.0 {
            continue;
        }
        if belief[x] == 0.0 || market[x] == 0.0 {
            return Err(StakingError::InfiniteDivergence { outcome: x });
        }
        total += truth[x] * (belief[x] / market[x]).ln();
    }
    Ok(total)
}

/// Shannon entropy in nats.
pub fn entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Joint distribution `p(x, y)`, stored with `x` as the row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    probs: Vec<f64>,
}

impl JointDistribution {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self, StakingError> {
        let rows = table.len();
        let cols = table.first().map_or(0, Vec::len);
        if rows == 0 || cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(StakingError::Invalid("joint table must be a non-empty rectangle".into()));
        }
        let probs: Vec<f64> = table.into_iter().flatten().collect();
        check_distribution("joint", &probs)?;
        Ok(JointDistribution { rows, cols, probs })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.probs[x * self.cols + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|x| (0..self.cols).map(|y| self.get(x, y)).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|y| (0..self.rows).map(|x| self.get(x, y)).sum())
            .collect()
    }

    /// `H(X | Y) = −Σ p(x,y)·ln p(x|y)`.
    pub fn conditional_entropy_x(&self) -> f64 {
        let py = self.marginal_y();
        let mut h = 0.0;
        for x in 0..self.rows {
            for (y, &pyy) in py.iter().enumerate() {
                let pxy = self.get(x, y);
                if pxy > 0.0 {
                    h -= pxy * (pxy / pyy).ln();
                }
            }
        }
        h
    }
}

/// Growth-rate gain from side information `Y`: `I(X;Y) = H(X) − H(X|Y)`.
pub fn side_info_growth(joint: &JointDistribution) -> f64 {
    entropy(&joint.marginal_x()) - joint.conditional_entropy_x()
}

/// Growth of betting `b(x|y) = p(x|y)` at fair odds `o(x) = 1/p(x)`, averaged
/// over `y`. Equals [`side_info_growth`] computed the other way round.
pub fn conditional_betting_growth(joint: &JointDistribution) -> Result<f64, StakingError> {
    let px = joint.marginal_x();
    let py = joint.marginal_y();
    // Outcomes that never occur get a nominal price; nothing is staked on them.
    let odds: Vec<f64> = px.iter().map(|&p| if p > 0.0 { 1.0 / p } else { 1.0 }).collect();
    let mut total = 0.0;
    for (y, &pyy) in py.iter().enumerate() {
        if pyy == 0.0 {
            continue;
        }
        let conditional: Vec<f64> = (0..joint.rows).map(|x| joint.get(x, y) / pyy).collect();
        let problem = GrowthProblem {
            true_probs: conditional.clone(),
            odds: odds.clone(),
            allocation: conditional,
        };
        total += pyy * log_growth(&problem)?;
    }
    Ok(total)
}
