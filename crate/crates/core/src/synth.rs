//! Synthetic leagues with planted team strengths, for tests and benchmarks.
//!
//! Scores are independent Poisson draws (sampled by CDF inversion) and each
//! fixture is priced at the true probabilities plus a fixed margin.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{season_of, BookQuote, FullTime, MatchRecord};
use crate::money::Odds;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthLeague {
    pub teams: Vec<String>,
    pub attack: Vec<f64>,
    pub defence: Vec<f64>,
    pub home_advantage: f64,
    pub baseline: f64,
    /// Bookmaker margin added to the fair prices (0.05 is a 5% overround).
    pub margin: f64,
}

impl SynthLeague {
    /// `n` teams with evenly spread, centred strengths in shuffled pairings.
    pub fn planted(n: usize, seed: u64) -> Self {
        assert!(n >= 2, "a league needs two teams");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spread = |i: usize| -0.45 + 0.9 * i as f64 / (n - 1) as f64;
        let mut attack: Vec<f64> = (0..n).map(spread).collect();
        let mut defence: Vec<f64> = (0..n).map(spread).collect();
        attack.shuffle(&mut rng);
        defence.shuffle(&mut rng);
        SynthLeague {
            teams: (1..=n).map(|i| format!("Team {i:02}")).collect(),
            attack,
            defence,
            home_advantage: 0.25,
            baseline: 0.15,
            margin: 0.05,
        }
    }

    pub fn rates(&self, home: usize, away: usize) -> (f64, f64) {
        (
            (self.baseline + self.home_advantage + self.attack[home] - self.defence[away]).exp(),
            (self.baseline + self.attack[away] - self.defence[home]).exp(),
        )
    }

    /// Double round robin starting on `start`: one round per week, each
    /// round split over a Saturday and a Sunday.
    pub fn season(&self, start: NaiveDate, rng: &mut impl Rng) -> Vec<MatchRecord> {
        let mut out = Vec::new();
        for (r, round) in double_round_robin(self.teams.len()).into_iter().enumerate() {
            let saturday = start + Duration::days(7 * r as i64);
            let half = round.len().div_ceil(2);
            for (k, (h, a)) in round.into_iter().enumerate() {
                let date = if k < half { saturday } else { saturday + Duration::days(1) };
                out.push(self.play(date, h, a, rng));
            }
        }
        out
    }

    fn play(&self, date: NaiveDate, h: usize, a: usize, rng: &mut impl Rng) -> MatchRecord {
        let (lh, la) = self.rates(h, a);
        let hg = poisson_sample(lh, rng);
        let ag = poisson_sample(la, rng);
        let (outcome, over) = fair_probabilities(lh, la);
        let price = |p: f64| {
            let decimal = 1.0 / (p * (1.0 + self.margin));
            // two decimals, as bookmakers quote
            let milli = ((decimal * 100.0).round() as u32 * 10).max(1010);
            Odds::from_milli(milli)
        };
        let quote = BookQuote {
            home: price(outcome[0]),
            draw: price(outcome[1]),
            away: price(outcome[2]),
            over25: price(over),
            under25: price(1.0 - over),
        };
        MatchRecord {
            season_id: season_of(date),
            date,
            home_team: self.teams[h].clone(),
            away_team: self.teams[a].clone(),
            home_goals: hg,
            away_goals: ag,
            result: FullTime::from_goals(hg, ag),
            half_time: None,
            stats: None,
            book_odds: BTreeMap::from([("B365".to_string(), quote)]),
        }
    }
}

/// Season fixtures via the circle method; the second half mirrors the first
/// with venues swapped.
pub fn double_round_robin(n: usize) -> Vec<Vec<(usize, usize)>> {
    let m = n + n % 2; // a phantom team gives byes for odd n
    let mut ring: Vec<usize> = (0..m).collect();
    let mut first = Vec::new();
    for r in 0..m - 1 {
        let mut round = Vec::new();
        for i in 0..m / 2 {
            let (x, y) = (ring[i], ring[m - 1 - i]);
            if x < n && y < n {
                round.push(if (r + i) % 2 == 0 { (x, y) } else { (y, x) });
            }
        }
        first.push(round);
        ring[1..].rotate_right(1);
    }
    let second: Vec<Vec<(usize, usize)>> = first
        .iter()
        .map(|round| round.iter().map(|&(h, a)| (a, h)).collect())
        .collect();
    first.into_iter().chain(second).collect()
}

/// Poisson draw by inverting the CDF.
pub fn poisson_sample(lambda: f64, rng: &mut impl Rng) -> u32 {
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut p = (-lambda).exp();
    let mut cdf = p;
    while u > cdf && k < 100 {
        k += 1;
        p *= lambda / f64::from(k);
        cdf += p;
    }
    k
}

/// Home/draw/away and over-2.5 probabilities for independent Poisson scores.
pub fn fair_probabilities(lh: f64, la: f64) -> ([f64; 3], f64) {
    const N: usize = 25;
    let pmf = |l: f64| {
        let mut v = vec![(-l).exp()];
        for k in 1..N {
            let prev = v[k - 1];
            v.push(prev * l / k as f64);
        }
        v
    };
    let (ph, pa) = (pmf(lh), pmf(la));
    let mut o = [0.0; 3];
    let mut under = 0.0;
    for i in 0..N {
        for j in 0..N {
            let p = ph[i] * pa[j];
            o[if i > j { 0 } else if i == j { 1 } else { 2 }] += p;
            if i + j <= 2 {
                under += p;
            }
        }
    }
    let total: f64 = o.iter().sum();
    ([o[0] / total, o[1] / total, o[2] / total], 1.0 - under / total)
}

/// Several consecutive seasons of the same league, starting in August of
/// `first_year`.
pub fn seasons(league: &SynthLeague, first_year: i32, count: usize, seed: u64) -> Vec<MatchRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .flat_map(|k| {
            let start = NaiveDate::from_ymd_opt(first_year + k as i32, 8, 12).expect("valid date");
            league.season(start, &mut rng)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::MatchTable;

    #[test]
    fn round_robin_covers_every_ordered_pair_once() {
        for n in [2, 5, 20] {
            let rounds = double_round_robin(n);
            let mut seen = std::collections::BTreeSet::new();
            for round in &rounds {
                let mut playing = std::collections::BTreeSet::new();
                for &(h, a) in round {
                    assert!(playing.insert(h) && playing.insert(a));
                    assert!(seen.insert((h, a)));
                }
            }
            assert_eq!(seen.len(), n * (n - 1));
        }
    }

    #[test]
    fn poisson_sample_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let mean = (0..n).map(|_| f64::from(poisson_sample(1.7, &mut rng))).sum::<f64>() / n as f64;
        assert!((mean - 1.7).abs() < 0.01, "{mean}");
    }

    #[test]
    fn fair_tail_matches_closed_form() {
        let (_, over) = fair_probabilities(1.25, 1.25);
        let closed = 1.0 - (-2.5f64).exp() * (1.0 + 2.5 + 3.125);
        assert!((over - closed).abs() < 1e-12);
    }

    #[test]
    fn seasons_form_a_valid_table() {
        let league = SynthLeague::planted(20, 1);
        let rows = seasons(&league, 2021, 2, 9);
        assert_eq!(rows.len(), 2 * 380);
        let table = MatchTable::new(rows).unwrap();
        let days = table.matchdays("2022/23");
        assert_eq!(days.len(), 76);
        assert!(table.season("2021/22").all(|r| !r.book_odds.is_empty()));
    }
}
