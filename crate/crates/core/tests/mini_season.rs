use std::sync::Arc;

use matchday_core::backtest::run_backtest;
use matchday_core::dataset::MINI_DIR;
use matchday_core::protocol::{ErrorCode, Session, ToolResponse};
use matchday_core::replay::{replay, ReplayError, ReplayVerdict};
use matchday_core::runlog::{read_ndjson, to_ndjson, Event};
use matchday_core::strategies::{build_strategy, StrategyConfig};
use matchday_core::{Dataset, LineConfig, Money, ScenarioRegistry, ScenarioSpec};

fn mini() -> (ScenarioSpec, Arc<Dataset>) {
    let registry: ScenarioRegistry = std::fs::read_to_string(format!("{MINI_DIR}/scenarios.cfg"))
        .unwrap()
        .parse()
        .unwrap();
    let spec = registry.get("Mini Season").unwrap().clone();
    (spec, Arc::new(Dataset::load_dir(MINI_DIR).unwrap()))
}

fn session() -> Session {
    let (spec, data) = mini();
    Session::new(spec, data, LineConfig::default(), "test").unwrap()
}

fn call(s: &mut Session, line: &str) -> ToolResponse {
    s.handle_line(line)
}

fn text(r: &ToolResponse) -> &str {
    assert!(r.ok, "{r:?}");
    &r.payload.as_ref().unwrap().text
}

#[test]
fn opening_matchday_golden_trace() {
    let mut s = session();
    let r = call(&mut s, r#"{"id":1,"tool":"view_matches"}"#);
    assert_eq!(
        text(&r),
        "Matches for 11/08/2023:\n\nMatch 0: Burnley vs Man City\n  Odds - Home: 8.0, Draw: 5.5, Away: 1.33\n  Over 2.5: 1.67, Under 2.5: 2.2"
    );
    let r = call(&mut s, r#"{"id":2,"tool":"place_bet","args":{"match_id":0,"bet_type":"home","amount":17}}"#);
    assert_eq!(
        text(&r),
        "Bet placed: 17.0 on home for Burnley vs Man City at odds 8.0.\nPotential return: 136.00"
    );
    assert_eq!(r.payload.as_ref().unwrap().data["ticket"]["potential_return"], "136.000");
    let r = call(&mut s, r#"{"id":3,"tool":"place_bet","args":{"match_id":0,"bet_type":"draw","amount":6}}"#);
    assert_eq!(
        text(&r),
        "Bet placed: 6.0 on draw for Burnley vs Man City at odds 5.5.\nPotential return: 33.00"
    );
    let r = call(
        &mut s,
        r#"{"id":4,"tool":"place_bet","args":{"match_id":0,"bet_type":"under_2_5","amount":"5.000"}}"#,
    );
    assert_eq!(
        text(&r),
        "Bet placed: 5.0 on under_2_5 for Burnley vs Man City at odds 2.2.\nPotential return: 11.00"
    );
    let r = call(&mut s, r#"{"id":5,"tool":"view_bankroll"}"#);
    assert!(text(&r).starts_with("Current bankroll: £220.00\nStaked this matchday: £28.00"));
    assert!(text(&r).contains("Available: £192.00"));

    let r = call(&mut s, r#"{"id":6,"tool":"next_matchday"}"#);
    assert_eq!(
        text(&r),
        "Bet Results:\n\n\
         x LOST: Burnley vs Man City (home) - Lost: £17.00\n\
         x LOST: Burnley vs Man City (draw) - Lost: £6.00\n\
         x LOST: Burnley vs Man City (under_2_5) - Lost: £5.00\n\n\
         Net result: £-28.00\nNew bankroll: £192.00\n\n\
         Advanced to next matchday: 12/08/2023"
    );
    let data = &r.payload.as_ref().unwrap().data;
    assert_eq!(data["settlement"]["net"], "-28.000");
    assert_eq!(data["settlement"]["bankroll_after"], "192.000");
    let reward = data["settlement"]["reward"].as_f64().unwrap();
    assert!((reward - (192.0f64 / 220.0).ln()).abs() < 1e-12);
    assert!((reward + 0.13613217432458).abs() < 1e-12);
}

#[test]
fn advance_discloses_the_settled_rows() {
    let mut s = session();
    let before = s.ledger().disclosed().matches.len();
    call(&mut s, r#"{"id":1,"tool":"place_bet","args":{"match_id":0,"bet_type":"away","amount":1}}"#);
    let r = call(&mut s, r#"{"id":2,"tool":"next_matchday"}"#);
    let data = &r.payload.as_ref().unwrap().data;
    let matches_csv = data["attachment"]["matches_csv"].as_str().unwrap();
    let players_csv = data["attachment"]["players_csv"].as_str().unwrap();
    // header plus the one fixture of 11/08, and its three player lines
    assert_eq!(matches_csv.lines().count(), 2);
    assert!(matches_csv.contains("Burnley,Man City,0,3,A"));
    assert_eq!(players_csv.lines().count(), 4);
    assert_eq!(s.ledger().disclosed().matches.len(), before + 1);
}

#[test]
fn drop_directory_receives_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = session().with_drop_dir(dir.path());
    call(&mut s, r#"{"id":1,"tool":"place_bet","args":{"match_id":0,"bet_type":"away","amount":1}}"#);
    assert!(call(&mut s, r#"{"id":2,"tool":"next_matchday"}"#).ok);
    let m = std::fs::read_to_string(dir.path().join("matches.csv")).unwrap();
    // the full 2022/23 history plus the first 2023/24 fixture
    assert_eq!(m.lines().count(), 1 + 132 + 1);
    assert!(dir.path().join("players.csv").exists());
}

#[test]
fn protocol_rejections_leave_the_ledger_untouched() {
    let mut s = session();
    let cases = [
        (r#"{"id":1,"tool":"fly_to_moon"}"#, ErrorCode::UnknownTool),
        (r#"{"id":2,"tool":"place_bet","args":{"match_id":0,"bet_ty"#, ErrorCode::BadArgs),
        (r#"{"id":3,"tool":"place_bet","args":{"match_id":0,"bet_type":"home"}}"#, ErrorCode::BadArgs),
        (
            r#"{"id":4,"tool":"place_bet","args":{"match_id":0,"bet_type":"home","amount":1.0001}}"#,
            ErrorCode::BadArgs,
        ),
        (
            r#"{"id":5,"tool":"place_bet","args":{"match_id":0,"bet_type":"btts","amount":1}}"#,
            ErrorCode::BadArgs,
        ),
        (
            r#"{"id":6,"tool":"place_bet","args":{"match_id":3,"bet_type":"home","amount":1}}"#,
            ErrorCode::InvalidMatch,
        ),
        (
            r#"{"id":7,"tool":"place_bet","args":{"match_id":0,"bet_type":"home","amount":0}}"#,
            ErrorCode::StakeTooSmall,
        ),
        (
            r#"{"id":8,"tool":"place_bet","args":{"match_id":0,"bet_type":"home","amount":220.001}}"#,
            ErrorCode::InsufficientFunds,
        ),
        (r#"{"id":9,"tool":"next_matchday"}"#, ErrorCode::NoBetsPlaced),
        (r#"{"id":10,"tool":"view_bankroll","args":{"verbose":true}}"#, ErrorCode::BadArgs),
    ];
    for (line, code) in cases {
        let r = call(&mut s, line);
        assert_eq!(r.code(), Some(code), "{line}");
        assert_eq!(s.log().len(), 1, "{line} mutated the log");
        assert_eq!(s.ledger().available(), Money::from_pounds(220));
    }
    assert_eq!(call(&mut s, "not json").id, serde_json::Value::Null);
}

#[test]
fn repeated_request_ids_place_one_ticket() {
    let mut s = session();
    let line = r#"{"id":"slip-1","tool":"place_bet","args":{"match_id":0,"bet_type":"home","amount":17}}"#;
    let a = call(&mut s, line);
    let b = call(&mut s, line);
    assert_eq!(a, b);
    assert_eq!(s.ledger().open_tickets().len(), 1);
    assert_eq!(s.ledger().available(), Money::from_pounds(203));
}

#[test]
fn untradable_primary_book_falls_back() {
    let mut s = session();
    for id in 0..2 {
        call(
            &mut s,
            &format!(r#"{{"id":{id},"tool":"place_bet","args":{{"match_id":0,"bet_type":"home","amount":1}}}}"#),
        );
        call(&mut s, &format!(r#"{{"id":"adv{id}","tool":"next_matchday"}}"#));
    }
    let r = call(&mut s, r#"{"id":9,"tool":"view_matches"}"#);
    assert!(text(&r).contains("Match 1: Chelsea vs Liverpool\n  Odds - Home: 2.6, Draw: 3.5, Away: 2.6"));
    assert_eq!(r.payload.unwrap().data["matches"][1]["source"], "IW");
}

/// Hand settlement of favourites-only on the mini season: 5% of what is
/// still available, floored to the milli, on the shortest 1X2 price.
fn favourites_oracle() -> i64 {
    // (odds in milli per fixture on the favourite, won)
    let days: [&[(i64, bool)]; 3] = [
        &[(1330, true)],
        &[(1300, true), (1400, true)],
        &[(2250, false), (2600, false)],
    ];
    let mut bankroll: i64 = 220_000;
    for day in days {
        let mut available = bankroll;
        let mut returned = 0;
        for &(odds, won) in day {
            let stake = available * 5 / 100;
            available -= stake;
            if won {
                // stakes here never land on a half milli
                returned += (stake * odds + 500) / 1000;
            }
        }
        bankroll = available + returned;
    }
    bankroll
}

#[test]
fn favourites_mini_season_matches_hand_settlement() {
    let (spec, data) = mini();
    let mut strategy = build_strategy("favourites", &StrategyConfig::default()).unwrap();
    let out = run_backtest(spec, data, LineConfig::default(), strategy.as_mut(), "favourites").unwrap();
    assert_eq!(favourites_oracle(), 208_689);
    assert_eq!(out.summary.final_bankroll, Money::from_milli(208_689));
    assert_eq!(out.summary.matchdays_played, 3);
    assert_eq!(out.metrics.roi, out.summary.roi);
    assert!(!out.summary.ruined);
}

#[test]
fn backtests_are_byte_identical() {
    for name in ["favourites", "dixon_coles"] {
        let logs: Vec<String> = (0..2)
            .map(|_| {
                let (spec, data) = mini();
                let mut strategy = build_strategy(name, &StrategyConfig::default()).unwrap();
                let out = run_backtest(spec, data, LineConfig::default(), strategy.as_mut(), name).unwrap();
                to_ndjson(&out.log)
            })
            .collect();
        assert_eq!(logs[0], logs[1], "{name}");
    }
}

fn favourites_log() -> String {
    let (spec, data) = mini();
    let mut strategy = build_strategy("favourites", &StrategyConfig::default()).unwrap();
    to_ndjson(&run_backtest(spec, data, LineConfig::default(), strategy.as_mut(), "f").unwrap().log)
}

#[test]
fn replay_passes_on_backtest_logs() {
    let (_, data) = mini();
    let events = read_ndjson(favourites_log().as_bytes()).unwrap();
    let v = replay(&events, data).unwrap();
    assert_eq!(
        v,
        ReplayVerdict::Pass {
            events: events.len(),
            settlements: 3,
            complete: true
        }
    );
}

#[test]
fn replay_flags_a_tampered_bankroll() {
    let (_, data) = mini();
    let mut events = read_ndjson(favourites_log().as_bytes()).unwrap();
    let target = events
        .iter()
        .position(|e| matches!(e.event, Event::Settlement(_)))
        .unwrap();
    events[target].bankroll_after = events[target].bankroll_after + Money::from_milli(1);
    let seq = events[target].seq;
    match replay(&events, data).unwrap() {
        ReplayVerdict::Fail { seq: at, reason } => {
            assert_eq!(at, seq);
            assert!(reason.starts_with("bankroll_after"), "{reason}");
        }
        v => panic!("{v:?}"),
    }
}

#[test]
fn replay_flags_a_tampered_payload() {
    let (_, data) = mini();
    let text = favourites_log().replacen("\"1.330\"", "\"1.340\"", 1);
    let events = read_ndjson(text.as_bytes()).unwrap();
    let v = replay(&events, data).unwrap();
    assert!(matches!(v, ReplayVerdict::Fail { seq: 2, .. }), "{v:?}");
}

#[test]
fn replay_reports_a_missing_fixture() {
    let (_, data) = mini();
    let text = favourites_log().replace("Nott'm Forest", "Notts County");
    let events = read_ndjson(text.as_bytes()).unwrap();
    let err = replay(&events, data).unwrap_err();
    match err {
        ReplayError::DataGap { seq, message } => {
            assert_eq!(seq, 4);
            assert!(message.contains("Notts County"), "{message}");
        }
        e => panic!("{e:?}"),
    }
}

#[test]
fn replay_of_a_truncated_session_log_passes_incomplete() {
    let (_, data) = mini();
    let mut s = session();
    call(&mut s, r#"{"id":1,"tool":"view_matches"}"#);
    call(&mut s, r#"{"id":2,"tool":"place_bet","args":{"match_id":0,"bet_type":"home","amount":17}}"#);
    call(&mut s, r#"{"id":3,"tool":"next_matchday"}"#);
    let events = read_ndjson(s.log_ndjson().as_bytes()).unwrap();
    let v = replay(&events, data).unwrap();
    assert_eq!(
        v,
        ReplayVerdict::Pass {
            events: 4,
            settlements: 1,
            complete: false
        }
    );
}
