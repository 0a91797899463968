//! Fixtures shared by the benchmarks.

use std::sync::Arc;

use matchday_core::dataset::{PlayerTable, Split};
use matchday_core::synth::{seasons, SynthLeague};
use matchday_core::{Dataset, MatchRecord, MatchTable, Money, ScenarioSpec};

/// `count` seasons of a planted 20-team league starting in 2013.
pub fn league_history(count: usize, seed: u64) -> (SynthLeague, Vec<MatchRecord>) {
    let league = SynthLeague::planted(20, seed);
    let history = seasons(&league, 2013, count, seed);
    (league, history)
}

/// A dataset whose last season (2023/24) is playable behind `count - 1`
/// seasons of history.
pub fn playable(count: usize, seed: u64) -> Arc<Dataset> {
    let league = SynthLeague::planted(20, seed);
    let table = MatchTable::new(seasons(&league, 2024 - count as i32, count, seed)).expect("synthetic table");
    Arc::new(Dataset::new(table, PlayerTable::default()))
}

pub fn scenario() -> ScenarioSpec {
    ScenarioSpec {
        name: "bench".into(),
        season_id: "2023/24".into(),
        initial_bankroll: Money::from_pounds(220),
        expected_matchdays: 1,
        split: Split::Test,
    }
}
