//! Two-sided Mann-Whitney U tests and Holm step-down correction.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::AnalyticsError;

/// Largest smaller-sample size for which the exact null distribution is used.
pub const EXACT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    /// `U` of the first sample: pairs `(x, y)` with `x > y`, ties counting ½.
    pub u: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Mid-ranks (1-based) of the pooled sample.
fn mid_ranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

/// Distribution of `U` for sample sizes `(n, m)` without ties, as
/// probabilities indexed by `u = 0..=n·m`.
pub fn exact_distribution(n: usize, m: usize) -> Vec<f64> {
    let (k, big) = if n <= m { (n, m) } else { (m, n) };
    // ways[j][s]: choices of j of the items seen so far whose count of
    // smaller unchosen items sums to s
    let max_u = k * big;
    let mut ways = vec![vec![0.0f64; max_u + 1]; k + 1];
    ways[0][0] = 1.0;
    for item in 0..k + big {
        for j in (1..=k.min(item + 1)).rev() {
            // the item is chosen as the j-th smallest; it sits above item − (j − 1) unchosen items
            let above = item + 1 - j;
            if above > big {
                continue;
            }
            for s in (above..=max_u).rev() {
                let add = ways[j - 1][s - above];
                if add != 0.0 {
                    ways[j][s] += add;
                }
            }
        }
    }
    let total: f64 = ways[k].iter().sum();
    ways[k].iter().map(|w| w / total).collect()
}

/// Exact two-sided p-value: twice the smaller tail, capped at one.
pub fn exact_p_value(u: f64, n: usize, m: usize) -> f64 {
    let dist = exact_distribution(n, m);
    let u = u.round() as usize;
    let lower: f64 = dist[..=u.min(n * m)].iter().sum();
    let upper: f64 = dist[u.min(n * m)..].iter().sum();
    (2.0 * lower.min(upper)).min(1.0)
}

pub fn mann_whitney(x: &[f64], y: &[f64]) -> Result<MannWhitney, AnalyticsError> {
    if x.is_empty() || y.is_empty() {
        return Err(AnalyticsError::EmptySample);
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(AnalyticsError::Malformed("sample contains NaN".into()));
    }
    let (n, m) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = mid_ranks(&pooled);
    let rank_sum: f64 = ranks[..n].iter().sum();
    let u = rank_sum - (n * (n + 1)) as f64 / 2.0;
    if n.min(m) <= EXACT_LIMIT && ties.is_empty() {
        return Ok(MannWhitney {
            u,
            p_value: exact_p_value(u, n, m),
            exact: true,
        });
    }
    let total = (n + m) as f64;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (total * (total - 1.0));
    let var = (n * m) as f64 / 12.0 * ((total + 1.0) - tie_term);
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((u - (n * m) as f64 / 2.0).abs() - 0.5).max(0.0) / var.sqrt();
        erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(MannWhitney {
        u,
        p_value,
        exact: false,
    })
}

/// Holm step-down adjusted p-values, in the input order.
pub fn holm(p: &[f64]) -> Vec<f64> {
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let mut adjusted = vec![0.0; m];
    let mut running = 0.0f64;
    for (rank, &i) in order.iter().enumerate() {
        running = running.max(((m - rank) as f64 * p[i]).min(1.0));
        adjusted[i] = running;
    }
    adjusted
}

/// Pairwise tests between labelled samples; entries are filled below the
/// diagonal only (`raw[i][j]` for `j < i`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestMatrix {
    pub labels: Vec<String>,
    pub u: Vec<Vec<Option<f64>>>,
    pub raw: Vec<Vec<Option<f64>>>,
    pub adjusted: Vec<Vec<Option<f64>>>,
}

impl TestMatrix {
    /// Looks up a pair in either order.
    pub fn pair(&self, a: &str, b: &str) -> Option<(f64, f64)> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        let (r, c) = if i > j { (i, j) } else { (j, i) };
        Some((self.raw[r][c]?, self.adjusted[r][c]?))
    }
}

pub fn pairwise_tests(samples: &[(String, Vec<f64>)]) -> Result<TestMatrix, AnalyticsError> {
    if samples.len() < 2 {
        return Err(AnalyticsError::Malformed("pairwise tests need at least two samples".into()));
    }
    let k = samples.len();
    let mut u = vec![vec![None; k]; k];
    let mut raw = vec![vec![None; k]; k];
    let mut pairs = Vec::new();
    let mut flat = Vec::new();
    for i in 0..k {
        for j in 0..i {
            let t = mann_whitney(&samples[i].1, &samples[j].1)?;
            u[i][j] = Some(t.u);
            raw[i][j] = Some(t.p_value);
            pairs.push((i, j));
            flat.push(t.p_value);
        }
    }
    let mut adjusted = vec![vec![None; k]; k];
    for ((i, j), a) in pairs.into_iter().zip(holm(&flat)) {
        adjusted[i][j] = Some(a);
    }
    Ok(TestMatrix {
        labels: samples.iter().map(|(l, _)| l.clone()).collect(),
        u,
        raw,
        adjusted,
    })
}

#[cfg(test)]
mod unit {
    use super::*;

    #[test]
    fn separated_triples() {
        let t = mann_whitney(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
        assert_eq!(t.u, 0.0);
        assert!(t.exact);
        assert!((t.p_value - 0.1).abs() < 1e-15);
    }

    #[test]
    fn identical_singletons() {
        let t = mann_whitney(&[1.0], &[1.0]).unwrap();
        assert_eq!(t.p_value, 1.0);
        assert!(!t.exact);
    }

    #[test]
    fn holm_example() {
        let a = holm(&[0.01, 0.03, 0.04]);
        for (x, y) in a.iter().zip([0.03, 0.06, 0.06]) {
            assert!((x - y).abs() < 1e-15);
        }
        assert_eq!(holm(&[0.04, 0.01, 0.03]), vec![a[2], a[0], a[1]]);
    }

    #[test]
    fn distribution_is_symmetric() {
        let d = exact_distribution(4, 7);
        assert_eq!(d.len(), 29);
        for u in 0..d.len() {
            assert!((d[u] - d[d.len() - 1 - u]).abs() < 1e-15);
        }
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn empty_sample_is_rejected() {
        assert_eq!(mann_whitney(&[], &[1.0]).unwrap_err(), AnalyticsError::EmptySample);
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..30).map(|i| i as f64 + 0.5).collect();
        let t = mann_whitney(&x, &y).unwrap();
        assert!(!t.exact);
        assert!(t.p_value > 0.5 && t.p_value <= 1.0);
    }

    #[test]
    fn matrix_permutes_with_labels() {
        let s = vec![
            ("a".to_string(), vec![0.1, 0.2, 0.3, 0.25]),
            ("b".to_string(), vec![0.5, 0.6, 0.7]),
            ("c".to_string(), vec![-0.2, 0.15, 0.4]),
        ];
        let m1 = pairwise_tests(&s).unwrap();
        let rev: Vec<_> = s.iter().rev().cloned().collect();
        let m2 = pairwise_tests(&rev).unwrap();
        for a in ["a", "b", "c"] {
            for b in ["a", "b", "c"] {
                if a != b {
                    let (r1, a1) = m1.pair(a, b).unwrap();
                    let (r2, a2) = m2.pair(a, b).unwrap();
                    assert!((r1 - r2).abs() < 1e-15 && (a1 - a2).abs() < 1e-15);
                }
            }
        }
    }
}
