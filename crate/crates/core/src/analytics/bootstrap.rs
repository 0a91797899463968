//! Hierarchical bootstrap of season outcomes: draw a trajectory, then draw
//! its per-matchday log returns with replacement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AnalyticsError;

pub const DEFAULT_PERCENTILES: [f64; 5] = [5.0, 25.0, 50.0, 75.0, 95.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub step: usize,
    /// Wealth at each requested percentile.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    pub initial: f64,
    /// Matchdays per simulated season: the longest trajectory's length.
    pub horizon: usize,
    pub n_sims: usize,
    pub seed: u64,
    pub finals: Vec<f64>,
    pub fraction_profitable: f64,
    pub percentiles: Vec<f64>,
    pub final_percentiles: Vec<f64>,
    /// Wealth percentiles after each step, starting from step 0.
    pub bands: Vec<Band>,
}

/// Linear-interpolation percentile of sorted data.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = pct / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi || frac == 0.0 {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

struct Pool<'a> {
    values: &'a [f64],
    /// index of each value among the distinct values
    class: Vec<usize>,
    distinct: Vec<f64>,
}

impl<'a> Pool<'a> {
    fn new(values: &'a [f64]) -> Self {
        let mut distinct: Vec<f64> = values.to_vec();
        distinct.sort_by(f64::total_cmp);
        distinct.dedup_by(|a, b| a.total_cmp(b).is_eq());
        let class = values
            .iter()
            .map(|v| distinct.binary_search_by(|d| d.total_cmp(v)).expect("present"))
            .collect();
        Pool { values, class, distinct }
    }
}

/// Runs `n_sims` simulated seasons of `horizon` steps each. Simulation `i`
/// draws from its own stream of a generator seeded with `seed`, so results
/// do not depend on scheduling. A ruined trajectory should carry `−∞` for
/// its ruin step.
pub fn hierarchical_bootstrap(
    trajectories: &[Vec<f64>],
    initial: f64,
    n_sims: usize,
    seed: u64,
    percentiles: &[f64],
) -> Result<BootstrapResult, AnalyticsError> {
    let pools: Vec<Pool> = trajectories.iter().filter(|t| !t.is_empty()).map(|t| Pool::new(t)).collect();
    if pools.is_empty() || n_sims == 0 {
        return Err(AnalyticsError::Malformed(
            "bootstrap needs at least one nonempty trajectory and one simulation".into(),
        ));
    }
    let horizon = pools.iter().map(|p| p.values.len()).max().expect("nonempty");

    let sims: Vec<(f64, Vec<f64>)> = (0..n_sims)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let pool = &pools[rng.random_range(0..pools.len())];
            let mut counts = vec![0u64; pool.distinct.len()];
            let mut running = 0.0;
            let mut path = Vec::with_capacity(horizon);
            for _ in 0..horizon {
                let k = rng.random_range(0..pool.values.len());
                counts[pool.class[k]] += 1;
                running += pool.values[k];
                path.push(initial * running.exp());
            }
            // summing count × value per distinct value keeps a constant
            // trajectory exact: the total is one product
            let total: f64 = counts
                .iter()
                .zip(&pool.distinct)
                .filter(|(c, _)| **c > 0)
                .map(|(&c, &v)| c as f64 * v)
                .sum();
            (initial * total.exp(), path)
        })
        .collect();

    let finals: Vec<f64> = sims.iter().map(|s| s.0).collect();
    let mut sorted = finals.clone();
    sorted.sort_by(f64::total_cmp);
    let final_percentiles = percentiles.iter().map(|&p| percentile(&sorted, p)).collect();
    let profitable = finals.iter().filter(|&&f| f > initial).count();

    let mut bands = vec![Band {
        step: 0,
        values: vec![initial; percentiles.len()],
    }];
    bands.extend((0..horizon).into_par_iter().map(|step| {
        let mut column: Vec<f64> = sims.iter().map(|s| s.1[step]).collect();
        column.sort_by(f64::total_cmp);
        Band {
            step: step + 1,
            values: percentiles.iter().map(|&p| percentile(&column, p)).collect(),
        }
    }).collect::<Vec<_>>());

    Ok(BootstrapResult {
        initial,
        horizon,
        n_sims,
        seed,
        finals,
        fraction_profitable: profitable as f64 / n_sims as f64,
        percentiles: percentiles.to_vec(),
        final_percentiles,
        bands,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_returns_are_exact() {
        let c = 0.0123;
        let t = 37;
        let r = hierarchical_bootstrap(&[vec![c; t]], 220.0, 500, 7, &DEFAULT_PERCENTILES).unwrap();
        let expected = 220.0 * (c * t as f64).exp();
        assert!(r.finals.iter().all(|&f| f == expected));
        assert_eq!(r.fraction_profitable, 1.0);
    }

    #[test]
    fn zero_returns_stay_put() {
        let r = hierarchical_bootstrap(&[vec![0.0; 10], vec![0.0; 4]], 100.0, 200, 1, &DEFAULT_PERCENTILES).unwrap();
        assert!(r.finals.iter().all(|&f| f == 100.0));
        assert_eq!(r.horizon, 10);
        assert_eq!(r.fraction_profitable, 0.0);
    }

    #[test]
    fn same_seed_same_distribution() {
        let t = vec![vec![0.01, -0.02, 0.03, 0.0], vec![-0.05, 0.04]];
        let a = hierarchical_bootstrap(&t, 1.0, 1000, 42, &DEFAULT_PERCENTILES).unwrap();
        let b = hierarchical_bootstrap(&t, 1.0, 1000, 42, &DEFAULT_PERCENTILES).unwrap();
        assert_eq!(a, b);
        let c = hierarchical_bootstrap(&t, 1.0, 1000, 43, &DEFAULT_PERCENTILES).unwrap();
        assert_ne!(a.finals, c.finals);
    }

    #[test]
    fn ruin_is_absorbing_in_resamples() {
        let t = vec![vec![0.1, f64::NEG_INFINITY]];
        let r = hierarchical_bootstrap(&t, 1.0, 2000, 3, &DEFAULT_PERCENTILES).unwrap();
        // a sim survives only by drawing 0.1 twice: probability 1/4
        let alive = r.finals.iter().filter(|&&f| f > 0.0).count() as f64 / 2000.0;
        assert!((alive - 0.25).abs() < 0.04, "{alive}");
        assert!(r.finals.iter().all(|f| !f.is_nan()));
    }

    #[test]
    fn percentile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&s, 0.0), 1.0);
        assert_eq!(percentile(&s, 100.0), 4.0);
        assert!((percentile(&s, 50.0) - 2.5).abs() < 1e-15);
        assert!((percentile(&s, 5.0) - 1.15).abs() < 1e-12);
    }

    #[test]
    fn bands_are_ordered() {
        let t = vec![vec![0.02, -0.01, 0.005, -0.03, 0.01]];
        let r = hierarchical_bootstrap(&t, 100.0, 3000, 11, &DEFAULT_PERCENTILES).unwrap();
        assert_eq!(r.bands.len(), 6);
        for b in &r.bands {
            assert!(b.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }
}
