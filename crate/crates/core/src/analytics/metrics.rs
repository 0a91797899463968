use serde::{Deserialize, Serialize};

use super::runs::{BetRecord, RunLog};
use crate::market::MarketDistribution;
use crate::money::Money;
use crate::runlog::roi;

/// Starting bankroll that reports are rescaled to.
pub const NORMALISED_BANKROLL: f64 = 100_000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub label: String,
    pub scenario: String,
    pub roi: f64,
    /// Mean over sample standard deviation of per-bet returns.
    pub sharpe: Option<f64>,
    pub zero_variance: bool,
    pub n_bets: usize,
    pub initial_bankroll: Money,
    pub final_bankroll: Money,
    pub normalised_final: f64,
    /// Largest peak-to-trough fall of the bankroll path, as a fraction of the peak.
    pub max_drawdown: f64,
    pub matchdays: usize,
    pub ruined: bool,
}

pub fn run_metrics(run: &RunLog) -> RunMetrics {
    let initial = run.initial();
    let fin = run.final_bankroll();
    let returns: Vec<f64> = run.bets.iter().map(BetRecord::net_return).collect();
    let (sharpe, zero_variance) = sharpe(&returns);
    RunMetrics {
        label: run.label.clone(),
        scenario: run.scenario.name.clone(),
        roi: roi(initial, fin),
        sharpe,
        zero_variance,
        n_bets: run.bets.len(),
        initial_bankroll: initial,
        final_bankroll: fin,
        normalised_final: fin.milli() as f64 * NORMALISED_BANKROLL / initial.milli() as f64,
        max_drawdown: max_drawdown(&run.bankroll_path),
        matchdays: run.bankroll_path.len() - 1,
        ruined: run.ruined,
    }
}

/// Unannualised Sharpe ratio; absent below two samples, and absent with the
/// zero-variance flag when every return is equal.
pub fn sharpe(returns: &[f64]) -> (Option<f64>, bool) {
    if returns.len() < 2 {
        return (None, false);
    }
    let n = returns.len() as f64;
    let mean = returns.iter().sum::<f64>() / n;
    let var = returns.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return (None, true);
    }
    (Some(mean / var.sqrt()), false)
}

pub fn max_drawdown(path: &[Money]) -> f64 {
    let mut peak = 0i64;
    let mut worst = 0.0f64;
    for m in path {
        peak = peak.max(m.milli());
        if peak > 0 {
            worst = worst.max((peak - m.milli()) as f64 / peak as f64);
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VigHandling {
    /// Reciprocal prices as quoted.
    Raw,
    /// Reciprocals rescaled to sum to one.
    #[default]
    Normalized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaLogLoss {
    /// Model log loss minus market log loss; absent when no bet qualified.
    pub value: Option<f64>,
    pub used: usize,
    /// Bets without recorded model probabilities.
    pub excluded: usize,
}

/// `mean(−ln p_model) − mean(−ln q_market)` at the realised outcomes.
pub fn delta_log_loss_from(model: &[f64], market: &[f64]) -> f64 {
    assert_eq!(model.len(), market.len());
    let n = model.len() as f64;
    let lm = model.iter().map(|p| -p.ln()).sum::<f64>() / n;
    let lq = market.iter().map(|q| -q.ln()).sum::<f64>() / n;
    lm - lq
}

/// ΔLL over the placed bets, each scored in its own market at the outcome
/// that happened.
pub fn delta_log_loss(bets: &[BetRecord], vig: VigHandling) -> DeltaLogLoss {
    let mut model = Vec::new();
    let mut market = Vec::new();
    let mut excluded = 0;
    for b in bets {
        let Some(probs) = &b.model_probs else {
            excluded += 1;
            continue;
        };
        let k = b.realised.index();
        let prices: Vec<f64> = b.market_odds.iter().map(|o| o.decimal()).collect();
        let dist = MarketDistribution::from_prices(&prices);
        let q = match vig {
            VigHandling::Raw => dist.raw[k],
            VigHandling::Normalized => dist.q[k],
        };
        debug_assert_eq!(probs.len(), b.realised.market().outcomes().len());
        model.push(probs[k]);
        market.push(q);
    }
    let used = model.len();
    DeltaLogLoss {
        value: (used > 0).then(|| delta_log_loss_from(&model, &market)),
        used,
        excluded,
    }
}
