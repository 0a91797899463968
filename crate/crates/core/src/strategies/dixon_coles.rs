//! Exponentially weighted Poisson team-strength model with the Dixon-Coles
//! low-score correction.
//!
//! Goals are modelled as `λ_H = exp(μ + γ + α_home − β_away)` and
//! `λ_A = exp(μ + α_away − β_home)`; each match's log-likelihood is weighted
//! by `exp(−ξ·days_before_fit)`.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::optim::{minimize, LbfgsOptions};
use crate::dataset::MatchRecord;

pub const MODEL_FORMAT_VERSION: u32 = 1;
/// Highest goal count on the score grid.
pub const MAX_GOALS: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("no matches before {as_of} to fit on")]
    EmptyHistory { as_of: NaiveDate },
    #[error(
        "fit did not converge after {iterations} iterations \
         (log-likelihood {log_likelihood:.6}, gradient norm {grad_norm:.3e}, {matches} matches)"
    )]
    NotConverged {
        iterations: usize,
        log_likelihood: f64,
        grad_norm: f64,
        matches: usize,
    },
    #[error("team {0:?} is unknown to the model")]
    UnknownTeam(String),
    #[error("model document version {found} is not supported (expected {MODEL_FORMAT_VERSION})")]
    Version { found: u32 },
    #[error("model document: {0}")]
    Json(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Time decay per day.
    pub xi: f64,
    /// L2 penalty on attack and defence parameters.
    pub ridge: f64,
    /// Only matches at most this many days before the fit date are used.
    pub history_days: Option<u32>,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            xi: 0.0065,
            ridge: 0.01,
            history_days: Some(3 * 365),
            max_iter: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub log_likelihood: f64,
    pub grad_norm: f64,
    pub matches: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrengthModel {
    pub version: u32,
    pub teams: Vec<String>,
    pub attack: Vec<f64>,
    pub defence: Vec<f64>,
    pub home_advantage: f64,
    pub baseline: f64,
    pub decay: f64,
    pub rho: f64,
    pub fitted_at: NaiveDate,
    /// `(attack, defence)` given to teams absent from the fit.
    pub prior: (f64, f64),
    pub diagnostics: FitDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchForecast {
    pub home_team: String,
    pub away_team: String,
    /// Home, draw, away.
    pub outcome: [f64; 3],
    /// Over 2.5, under 2.5.
    pub totals: [f64; 2],
    pub expected_goals: (f64, f64),
    /// Whether either side was priced from the promoted-team prior.
    pub used_prior: bool,
}

/// The low-score dependence factor; only cells with both scores ≤ 1 differ from one.
pub fn tau(home: u32, away: u32, lh: f64, la: f64, rho: f64) -> f64 {
    match (home, away) {
        (0, 0) => 1.0 - lh * la * rho,
        (0, 1) => 1.0 + lh * rho,
        (1, 0) => 1.0 + la * rho,
        (1, 1) => 1.0 - rho,
        _ => 1.0,
    }
}

fn ln_factorial(k: u32) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

struct Term {
    home: usize,
    away: usize,
    hg: u32,
    ag: u32,
    weight: f64,
    ln_fact: f64,
}

struct Problem {
    n: usize,
    terms: Vec<Term>,
    ridge: f64,
    total_weight: f64,
}

// layout: [μ, γ, ρ, α_0..α_{n−1}, β_0..β_{n−1}]
const MU: usize = 0;
const GAMMA: usize = 1;
const RHO: usize = 2;
const OFFSET: usize = 3;

impl Problem {
    /// Penalised weighted log-likelihood and its gradient; `−∞` when the
    /// correction is invalid on an observed score.
    fn log_likelihood(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        grad.iter_mut().for_each(|g| *g = 0.0);
        let (mu, gamma, rho) = (x[MU], x[GAMMA], x[RHO]);
        let alpha = &x[OFFSET..OFFSET + self.n];
        let beta = &x[OFFSET + self.n..];
        let mut ll = 0.0;
        for t in &self.terms {
            let eta_h = mu + gamma + alpha[t.home] - beta[t.away];
            let eta_a = mu + alpha[t.away] - beta[t.home];
            let (lh, la) = (eta_h.exp(), eta_a.exp());
            let tv = tau(t.hg, t.ag, lh, la, rho);
            if !(tv > 0.0) || !lh.is_finite() || !la.is_finite() {
                return f64::NEG_INFINITY;
            }
            let (hg, ag) = (t.hg as f64, t.ag as f64);
            ll += t.weight * (hg * eta_h - lh + ag * eta_a - la - t.ln_fact + tv.ln());
            // derivatives of ln τ
            let (dh, da, dr) = match (t.hg, t.ag) {
                (0, 0) => (-lh * la * rho, -lh * la * rho, -lh * la),
                (0, 1) => (lh * rho, 0.0, lh),
                (1, 0) => (0.0, la * rho, la),
                (1, 1) => (0.0, 0.0, -1.0),
                _ => (0.0, 0.0, 0.0),
            };
            let gh = t.weight * (hg - lh + dh / tv);
            let ga = t.weight * (ag - la + da / tv);
            grad[MU] += gh + ga;
            grad[GAMMA] += gh;
            grad[RHO] += t.weight * dr / tv;
            grad[OFFSET + t.home] += gh;
            grad[OFFSET + self.n + t.away] -= gh;
            grad[OFFSET + t.away] += ga;
            grad[OFFSET + self.n + t.home] -= ga;
        }
        for i in OFFSET..x.len() {
            ll -= 0.5 * self.ridge * x[i] * x[i];
            grad[i] -= self.ridge * x[i];
        }
        ll
    }

    fn project(&self, g: &mut [f64]) {
        let n = self.n;
        for block in [OFFSET..OFFSET + n, OFFSET + n..OFFSET + 2 * n] {
            let mean = g[block.clone()].iter().sum::<f64>() / n as f64;
            g[block].iter_mut().for_each(|v| *v -= mean);
        }
    }
}

/// Fits the model to matches dated strictly before `as_of`. `warm` seeds the
/// optimiser with a previous fit's parameters for the teams it knows.
pub fn fit_strengths(
    history: &[MatchRecord],
    as_of: NaiveDate,
    opts: &FitOptions,
    warm: Option<&StrengthModel>,
) -> Result<StrengthModel, FitError> {
    let rows: Vec<&MatchRecord> = history
        .iter()
        .filter(|r| r.date < as_of)
        .filter(|r| {
            let age = (as_of - r.date).num_days();
            opts.history_days.is_none_or(|h| age <= i64::from(h))
        })
        .collect();
    if rows.is_empty() {
        return Err(FitError::EmptyHistory { as_of });
    }
    let mut index: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &rows {
        index.insert(&r.home_team, 0);
        index.insert(&r.away_team, 0);
    }
    for (i, v) in index.values_mut().enumerate() {
        *v = i;
    }
    let teams: Vec<String> = index.keys().map(|s| s.to_string()).collect();
    let n = teams.len();
    let terms: Vec<Term> = rows
        .iter()
        .map(|r| Term {
            home: index[r.home_team.as_str()],
            away: index[r.away_team.as_str()],
            hg: r.home_goals,
            ag: r.away_goals,
            weight: (-opts.xi * (as_of - r.date).num_days() as f64).exp(),
            ln_fact: ln_factorial(r.home_goals) + ln_factorial(r.away_goals),
        })
        .collect();
    let total_weight: f64 = terms.iter().map(|t| t.weight).sum();
    let problem = Problem {
        n,
        terms,
        ridge: opts.ridge,
        total_weight,
    };

    let mut x0 = vec![0.0; OFFSET + 2 * n];
    let goals: f64 = rows.iter().map(|r| f64::from(r.total_goals())).sum();
    x0[MU] = (goals / (2.0 * rows.len() as f64)).max(0.05).ln();
    if let Some(w) = warm {
        x0[MU] = w.baseline;
        x0[GAMMA] = w.home_advantage;
        for (i, team) in teams.iter().enumerate() {
            if let Ok(k) = w.teams.binary_search(team) {
                x0[OFFSET + i] = w.attack[k];
                x0[OFFSET + n + i] = w.defence[k];
            }
        }
        for block in [OFFSET..OFFSET + n, OFFSET + n..OFFSET + 2 * n] {
            let mean = x0[block.clone()].iter().sum::<f64>() / n as f64;
            x0[block].iter_mut().for_each(|v| *v -= mean);
        }
        // the warm ρ may be invalid on this history; start it neutral
        let mut scratch = vec![0.0; x0.len()];
        x0[RHO] = w.rho;
        if !problem.log_likelihood(&x0, &mut scratch).is_finite() {
            x0[RHO] = 0.0;
        }
    }

    let scale = problem.total_weight.max(f64::MIN_POSITIVE);
    let objective = |x: &[f64], g: &mut [f64]| {
        let ll = problem.log_likelihood(x, g);
        g.iter_mut().for_each(|v| *v = -*v / scale);
        -ll / scale
    };
    let lbfgs = LbfgsOptions {
        max_iter: opts.max_iter,
        ..LbfgsOptions::default()
    };
    let m = minimize(objective, |g| problem.project(g), x0, lbfgs);
    let log_likelihood = -m.value * scale;
    if !m.converged {
        return Err(FitError::NotConverged {
            iterations: m.iterations,
            log_likelihood,
            grad_norm: m.grad_norm,
            matches: rows.len(),
        });
    }
    let attack = m.x[OFFSET..OFFSET + n].to_vec();
    let defence = m.x[OFFSET + n..].to_vec();
    let prior = bottom_quartile(&attack, &defence);
    Ok(StrengthModel {
        version: MODEL_FORMAT_VERSION,
        teams,
        attack,
        defence,
        home_advantage: m.x[GAMMA],
        baseline: m.x[MU],
        decay: opts.xi,
        rho: m.x[RHO],
        fitted_at: as_of,
        prior,
        diagnostics: FitDiagnostics {
            iterations: m.iterations,
            log_likelihood,
            grad_norm: m.grad_norm,
            matches: rows.len(),
        },
    })
}

/// Mean attack and defence of the weakest quarter of teams, ranked by `α − β`.
fn bottom_quartile(attack: &[f64], defence: &[f64]) -> (f64, f64) {
    let mut order: Vec<usize> = (0..attack.len()).collect();
    order.sort_by(|&a, &b| {
        (attack[a] - defence[a])
            .total_cmp(&(attack[b] - defence[b]))
            .then(a.cmp(&b))
    });
    let k = attack.len().div_ceil(4).max(1);
    let picked = &order[..k];
    let mean = |v: &[f64]| picked.iter().map(|&i| v[i]).sum::<f64>() / k as f64;
    (mean(attack), mean(defence))
}

fn poisson_pmf(lambda: f64) -> [f64; MAX_GOALS + 1] {
    let mut p = [0.0; MAX_GOALS + 1];
    p[0] = (-lambda).exp();
    for k in 1..=MAX_GOALS {
        p[k] = p[k - 1] * lambda / k as f64;
    }
    p
}

impl StrengthModel {
    fn team(&self, name: &str) -> Option<usize> {
        self.teams.binary_search_by(|t| t.as_str().cmp(name)).ok()
    }

    pub fn knows(&self, team: &str) -> bool {
        self.team(team).is_some()
    }

    fn strengths(&self, team: &str, allow_prior: bool) -> Result<(f64, f64, bool), FitError> {
        match self.team(team) {
            Some(i) => Ok((self.attack[i], self.defence[i], false)),
            None if allow_prior => Ok((self.prior.0, self.prior.1, true)),
            None => Err(FitError::UnknownTeam(team.to_string())),
        }
    }

    /// Expected goals for a pairing.
    pub fn rates(&self, home: &str, away: &str) -> Result<(f64, f64), FitError> {
        let (ah, bh, _) = self.strengths(home, false)?;
        let (aa, ba, _) = self.strengths(away, false)?;
        Ok((
            (self.baseline + self.home_advantage + ah - ba).exp(),
            (self.baseline + aa - bh).exp(),
        ))
    }

    /// Forecast from the score grid. Teams the model has not seen receive
    /// the promoted-team prior when `allow_prior` is set.
    pub fn predict(&self, home: &str, away: &str, allow_prior: bool) -> Result<MatchForecast, FitError> {
        let (ah, bh, ph) = self.strengths(home, allow_prior)?;
        let (aa, ba, pa) = self.strengths(away, allow_prior)?;
        let lh = (self.baseline + self.home_advantage + ah - ba).exp();
        let la = (self.baseline + aa - bh).exp();
        let grid = score_grid(lh, la, self.rho);
        let mut outcome = [0.0; 3];
        let mut over = 0.0;
        for (i, row) in grid.iter().enumerate() {
            for (j, &p) in row.iter().enumerate() {
                let k = match i.cmp(&j) {
                    std::cmp::Ordering::Greater => 0,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 2,
                };
                outcome[k] += p;
                if i + j >= 3 {
                    over += p;
                }
            }
        }
        Ok(MatchForecast {
            home_team: home.to_string(),
            away_team: away.to_string(),
            outcome,
            totals: [over, 1.0 - over],
            expected_goals: (lh, la),
            used_prior: ph || pa,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serialises")
    }

    pub fn from_json(text: &str) -> Result<Self, FitError> {
        #[derive(Deserialize)]
        struct Header {
            version: u32,
        }
        let header: Header = serde_json::from_str(text).map_err(|e| FitError::Json(e.to_string()))?;
        if header.version != MODEL_FORMAT_VERSION {
            return Err(FitError::Version {
                found: header.version,
            });
        }
        serde_json::from_str(text).map_err(|e| FitError::Json(e.to_string()))
    }
}

/// Normalised joint score probabilities on `0..=MAX_GOALS` squared.
pub fn score_grid(lh: f64, la: f64, rho: f64) -> Vec<[f64; MAX_GOALS + 1]> {
    let ph = poisson_pmf(lh);
    let pa = poisson_pmf(la);
    let mut grid = vec![[0.0; MAX_GOALS + 1]; MAX_GOALS + 1];
    let mut total = 0.0;
    for i in 0..=MAX_GOALS {
        for j in 0..=MAX_GOALS {
            let t = tau(i as u32, j as u32, lh, la, rho).max(0.0);
            grid[i][j] = ph[i] * pa[j] * t;
            total += grid[i][j];
        }
    }
    grid.iter_mut().flatten().for_each(|p| *p /= total);
    grid
}
