//! Post-hoc analysis of run logs: returns, risk, calibration against the
//! market, pairwise significance and bootstrapped season outcomes.

pub mod bootstrap;
pub mod metrics;
pub mod runs;
pub mod significance;

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bootstrap::{hierarchical_bootstrap, percentile, Band, BootstrapResult, DEFAULT_PERCENTILES};
pub use metrics::{
    delta_log_loss, delta_log_loss_from, max_drawdown, run_metrics, sharpe, DeltaLogLoss, RunMetrics, VigHandling,
    NORMALISED_BANKROLL,
};
pub use runs::{group_by_label, BetRecord, RunLog};
pub use significance::{exact_distribution, exact_p_value, holm, mann_whitney, pairwise_tests, MannWhitney, TestMatrix};

use crate::runlog::RunLogError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("empty sample")]
    EmptySample,
    #[error("{0}")]
    Malformed(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("run log: {0}")]
    RunLog(String),
    #[error("csv: {0}")]
    Csv(String),
}

impl From<RunLogError> for AnalyticsError {
    fn from(e: RunLogError) -> Self {
        AnalyticsError::RunLog(e.to_string())
    }
}

impl From<csv::Error> for AnalyticsError {
    fn from(e: csv::Error) -> Self {
        AnalyticsError::Csv(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOptions {
    /// Simulations per label; no bootstrap when absent.
    pub bootstrap: Option<usize>,
    pub seed: u64,
    pub vig: VigHandling,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions {
            bootstrap: None,
            seed: 0,
            vig: VigHandling::Normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub label: String,
    pub runs: usize,
    pub mean_roi: f64,
    pub ruined_runs: usize,
    /// Per-matchday log returns pooled across the label's runs.
    pub pooled_returns: usize,
    pub delta_log_loss: DeltaLogLoss,
    pub bootstrap: Option<BootstrapSummary>,
}

/// Bootstrap output without the per-simulation finals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub initial: f64,
    pub horizon: usize,
    pub n_sims: usize,
    pub seed: u64,
    pub fraction_profitable: f64,
    pub percentiles: Vec<f64>,
    pub final_percentiles: Vec<f64>,
    pub bands: Vec<Band>,
}

impl From<BootstrapResult> for BootstrapSummary {
    fn from(r: BootstrapResult) -> Self {
        BootstrapSummary {
            initial: r.initial,
            horizon: r.horizon,
            n_sims: r.n_sims,
            seed: r.seed,
            fraction_profitable: r.fraction_profitable,
            percentiles: r.percentiles,
            final_percentiles: r.final_percentiles,
            bands: r.bands,
        }
    }
}

/// One run's bankroll path rescaled to [`NORMALISED_BANKROLL`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub label: String,
    pub scenario: String,
    pub values: Vec<f64>,
}

impl Curve {
    pub fn of(run: &RunLog) -> Self {
        let initial = run.initial().milli() as f64;
        Curve {
            label: run.label.clone(),
            scenario: run.scenario.name.clone(),
            values: run
                .bankroll_path
                .iter()
                .map(|m| m.milli() as f64 * NORMALISED_BANKROLL / initial)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub vig: VigHandling,
    pub runs: Vec<RunMetrics>,
    /// In the same order as `runs`.
    pub curves: Vec<Curve>,
    pub groups: Vec<GroupReport>,
    /// Present when at least two labels were analysed.
    pub tests: Option<TestMatrix>,
    pub notes: Vec<String>,
}

/// Metrics per run, then per label: pooled returns feed the pairwise tests
/// and the bootstrap, which runs on the normalised bankroll scale.
pub fn analyze(runs: &[RunLog], opts: &AnalyzeOptions) -> Result<AnalysisReport, AnalyticsError> {
    if runs.is_empty() {
        return Err(AnalyticsError::Malformed("no runs to analyse".into()));
    }
    let metrics: Vec<RunMetrics> = runs.iter().map(run_metrics).collect();
    let mut groups = Vec::new();
    let mut samples = Vec::new();
    for (label, members) in group_by_label(runs) {
        let pooled: Vec<f64> = members.iter().flat_map(|r| r.log_returns.iter().copied()).collect();
        let bets: Vec<BetRecord> = members.iter().flat_map(|r| r.bets.iter().cloned()).collect();
        let bootstrap = match opts.bootstrap {
            Some(n) => {
                let trajectories: Vec<Vec<f64>> = members.iter().map(|r| r.trajectory()).collect();
                Some(hierarchical_bootstrap(&trajectories, NORMALISED_BANKROLL, n, opts.seed, &DEFAULT_PERCENTILES)?.into())
            }
            None => None,
        };
        let rois: Vec<f64> = members.iter().map(|r| run_metrics(r).roi).collect();
        groups.push(GroupReport {
            label: label.clone(),
            runs: members.len(),
            mean_roi: rois.iter().sum::<f64>() / rois.len() as f64,
            ruined_runs: members.iter().filter(|r| r.ruined).count(),
            pooled_returns: pooled.len(),
            delta_log_loss: delta_log_loss(&bets, opts.vig),
            bootstrap,
        });
        samples.push((label, pooled));
    }
    let mut notes = Vec::new();
    let tests = if samples.len() >= 2 {
        if samples.iter().any(|(_, s)| s.is_empty()) {
            notes.push("pairwise tests skipped: a label has no matchday returns".into());
            None
        } else {
            notes.push(
                "pairwise tests pool matchday returns across runs of a label, treating them as independent; \
                 p-values may overstate significance"
                    .into(),
            );
            Some(pairwise_tests(&samples)?)
        }
    } else {
        None
    };
    Ok(AnalysisReport {
        vig: opts.vig,
        runs: metrics,
        curves: runs.iter().map(Curve::of).collect(),
        groups,
        tests,
        notes,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_metrics_csv<W: Write>(report: &AnalysisReport, out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label", "scenario", "roi", "sharpe", "zero_variance", "n_bets", "initial_bankroll", "final_bankroll",
        "normalised_final", "max_drawdown", "matchdays", "ruined",
    ])?;
    for m in &report.runs {
        w.write_record([
            m.label.clone(),
            m.scenario.clone(),
            m.roi.to_string(),
            opt(m.sharpe),
            m.zero_variance.to_string(),
            m.n_bets.to_string(),
            m.initial_bankroll.to_string(),
            m.final_bankroll.to_string(),
            m.normalised_final.to_string(),
            m.max_drawdown.to_string(),
            m.matchdays.to_string(),
            m.ruined.to_string(),
        ])?;
    }
    w.flush().map_err(|e| AnalyticsError::Csv(e.to_string()))
}

pub fn write_bands_csv<W: Write>(report: &AnalysisReport, out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    let pcts = report
        .groups
        .iter()
        .find_map(|g| g.bootstrap.as_ref().map(|b| b.percentiles.clone()))
        .unwrap_or_else(|| DEFAULT_PERCENTILES.to_vec());
    let mut header = vec!["label".to_string(), "step".to_string()];
    header.extend(pcts.iter().map(|p| format!("p{p}")));
    w.write_record(&header)?;
    for g in &report.groups {
        if let Some(b) = &g.bootstrap {
            for band in &b.bands {
                let mut row = vec![g.label.clone(), band.step.to_string()];
                row.extend(band.values.iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
    }
    w.flush().map_err(|e| AnalyticsError::Csv(e.to_string()))
}

pub fn write_curves_csv<W: Write>(report: &AnalysisReport, out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["run", "label", "scenario", "step", "bankroll"])?;
    for (i, c) in report.curves.iter().enumerate() {
        for (step, v) in c.values.iter().enumerate() {
            w.write_record([i.to_string(), c.label.clone(), c.scenario.clone(), step.to_string(), v.to_string()])?;
        }
    }
    w.flush().map_err(|e| AnalyticsError::Csv(e.to_string()))
}

pub fn write_tests_csv<W: Write>(report: &AnalysisReport, out: W) -> Result<(), AnalyticsError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label_a", "label_b", "u", "p_raw", "p_holm"])?;
    if let Some(t) = &report.tests {
        for i in 0..t.labels.len() {
            for j in 0..i {
                w.write_record([
                    t.labels[i].clone(),
                    t.labels[j].clone(),
                    opt(t.u[i][j]),
                    opt(t.raw[i][j]),
                    opt(t.adjusted[i][j]),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| AnalyticsError::Csv(e.to_string()))
}
