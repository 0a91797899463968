use std::sync::Arc;

use matchday_core::backtest::run_backtest;
use matchday_core::dataset::{PlayerTable, Split};
use matchday_core::runlog::Event;
use matchday_core::strategies::RandomBettor;
use matchday_core::synth::{seasons, SynthLeague};
use matchday_core::{Dataset, LineConfig, MatchTable, Money, ScenarioSpec, SeasonLedger};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn synthetic(teams: usize, seed: u64) -> Arc<Dataset> {
    let league = SynthLeague::planted(teams, seed);
    let table = MatchTable::new(seasons(&league, 2023, 1, seed)).unwrap();
    Arc::new(Dataset::new(table, PlayerTable::default()))
}

fn scenario(bankroll: Money, matchdays: u32) -> ScenarioSpec {
    ScenarioSpec {
        name: "synthetic".into(),
        season_id: "2023/24".into(),
        initial_bankroll: bankroll,
        expected_matchdays: matchdays,
        split: Split::Test,
    }
}

#[test]
fn rewards_telescope_over_random_episodes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut ruined = 0;
    for episode in 0..100u64 {
        let data = synthetic(6 + 2 * (episode as usize % 4), episode);
        let bankroll = Money::from_milli(rng.random_range(1_000..1_000_000));
        let mut bettor = RandomBettor::new(episode);
        let out = run_backtest(scenario(bankroll, 1), data, LineConfig::default(), &mut bettor, "random").unwrap();
        let s = &out.summary;
        if s.ruined {
            ruined += 1;
            assert_eq!(s.final_bankroll, Money::ZERO);
            continue;
        }
        let log_ratio = (s.final_bankroll.milli() as f64 / s.initial_bankroll.milli() as f64).ln();
        assert!(
            (s.total_reward - log_ratio).abs() < 1e-9,
            "episode {episode}: {} vs {log_ratio}",
            s.total_reward
        );
    }
    // both branches are exercised
    assert!(ruined > 0 && ruined < 100, "{ruined}");
}

#[test]
fn every_settlement_conserves_money() {
    for seed in 0..20 {
        let data = synthetic(8, seed);
        let mut bettor = RandomBettor::new(seed);
        let out = run_backtest(scenario(Money::from_pounds(500), 1), data, LineConfig::default(), &mut bettor, "r").unwrap();
        let mut previous = Money::from_pounds(500);
        for e in &out.log {
            if let Event::Settlement(s) = &e.event {
                assert_eq!(s.bankroll_before, previous);
                let staked: i64 = s.tickets.iter().map(|t| t.stake.milli()).sum();
                let returned: i64 = s
                    .tickets
                    .iter()
                    .filter(|t| t.won)
                    .map(|t| {
                        // half-to-even on the milli, recomputed in 128-bit
                        let raw = t.stake.milli() as i128 * t.odds.milli() as i128;
                        let (q, r) = (raw / 1000, raw % 1000);
                        (q + i128::from(r > 500 || (r == 500 && q % 2 == 1))) as i64
                    })
                    .sum();
                assert_eq!(s.bankroll_after.milli(), s.bankroll_before.milli() - staked + returned);
                assert_eq!(e.bankroll_after, s.bankroll_after);
                previous = s.bankroll_after;
            }
        }
    }
}

#[test]
fn ruin_is_terminal() {
    let data = synthetic(6, 3);
    let mut ledger = SeasonLedger::new(scenario(Money::from_pounds(10), 1), data, LineConfig::default(), "x").unwrap();
    // stake everything on the longest price until it loses
    while !ledger.is_terminal() {
        let matches = ledger.view_matches().unwrap();
        let board = matches[0].board.as_ref().unwrap();
        let bet = if board.home > board.away {
            matchday_core::BetType::Home
        } else {
            matchday_core::BetType::Away
        };
        ledger.place_bet(0, bet, ledger.available(), None).unwrap();
        ledger.next_matchday().unwrap();
    }
    assert!(ledger.is_ruined());
    assert_eq!(ledger.bankroll(), Money::ZERO);
    assert!(ledger.next_matchday().is_err());
    assert!(ledger.view_matches().is_err());
    // the ruin step carries no reward
    assert_eq!(ledger.rewards().len(), ledger.bankroll_path().len() - 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn read_tools_commute(reads in prop::collection::vec(any::<bool>(), 0..8), seed in 0u64..50) {
        let data = synthetic(6, seed);
        let ledger = SeasonLedger::new(scenario(Money::from_pounds(100), 1), data, LineConfig::default(), "x").unwrap();
        let m0 = ledger.view_matches().unwrap();
        let b0 = ledger.view_bankroll();
        for r in reads {
            if r {
                prop_assert_eq!(ledger.view_matches().unwrap(), m0.clone());
            } else {
                prop_assert_eq!(ledger.view_bankroll(), b0.clone());
            }
        }
        prop_assert_eq!(ledger.available(), Money::from_pounds(100));
    }
}
