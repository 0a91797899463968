use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use matchday_core::dataset::MINI_DIR;

fn matchday(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_matchday"))
        .args(args)
        .env_remove("MATCHDAY_DATA")
        .env_remove("MATCHDAY_SCENARIOS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn backtest(strategy: &str, out: &Path) -> Output {
    matchday(&[
        "backtest",
        "--data",
        MINI_DIR,
        "--scenario",
        "Mini Season",
        "--strategy",
        strategy,
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn backtest_then_replay_passes_for_every_strategy() {
    let dir = tempfile::tempdir().unwrap();
    for strategy in ["favourites", "dixon_coles"] {
        let a = dir.path().join(format!("{strategy}-a.ndjson"));
        let b = dir.path().join(format!("{strategy}-b.ndjson"));
        assert!(backtest(strategy, &a).status.success());
        assert!(backtest(strategy, &b).status.success());
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap(), "{strategy}");
        assert!(a.with_extension("metrics.json").exists());
        let r = matchday(&["replay", a.to_str().unwrap(), "--data", MINI_DIR]);
        assert!(r.status.success(), "{}", stdout(&r));
        assert!(stdout(&r).starts_with("PASS"));
    }
}

#[test]
fn favourites_reports_the_hand_computed_bankroll() {
    let dir = tempfile::tempdir().unwrap();
    let out = backtest("favourites", &dir.path().join("run.ndjson"));
    assert!(stdout(&out).contains("final £208.689 from £220.000"), "{}", stdout(&out));
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = backtest("unicorn", &dir.path().join("run.ndjson"));
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("favourites, dixon_coles"), "{err}");
    let out = matchday(&[
        "backtest", "--data", MINI_DIR, "--scenario", "Atlantis", "--strategy", "favourites", "--out", "x.ndjson",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Mini Season"));
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "kelly_lambda = 3.0\n").unwrap();
    let out = matchday(&[
        "backtest", "--data", MINI_DIR, "--scenario", "Mini Season", "--strategy", "dixon_coles", "--config",
        cfg.to_str().unwrap(), "--out", "x.ndjson",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tampered_log_fails_replay_at_its_seq() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("run.ndjson");
    backtest("favourites", &log);
    let text = std::fs::read_to_string(&log).unwrap();
    let tampered: Vec<String> = text
        .lines()
        .map(|l| {
            if l.starts_with("{\"seq\":3,") {
                l.replace("\"bankroll_after\":\"223.630\"", "\"bankroll_after\":\"223.631\"")
            } else {
                l.to_string()
            }
        })
        .collect();
    assert_ne!(tampered.join("\n") + "\n", text);
    std::fs::write(&log, tampered.join("\n") + "\n").unwrap();
    let r = matchday(&["replay", log.to_str().unwrap(), "--data", MINI_DIR]);
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).starts_with("FAIL at seq 3"), "{}", stdout(&r));
}

#[test]
fn environment_supplies_the_data_directory() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_matchday"))
        .args(["backtest", "--scenario", "Mini Season", "--strategy", "favourites", "--out"])
        .arg(dir.path().join("run.ndjson"))
        .env("MATCHDAY_DATA", MINI_DIR)
        .env("MATCHDAY_SCENARIOS", format!("{MINI_DIR}/scenarios.cfg"))
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn stdio_session_speaks_ndjson() {
    let dir = tempfile::tempdir().unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_matchday"))
        .args(["serve", "--data", MINI_DIR, "--scenario", "Mini Season", "--log-dir"])
        .arg(dir.path())
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    child
        .stdin
        .take()
        .unwrap()
        .write_all(
            b"{\"id\":1,\"tool\":\"place_bet\",\"args\":{\"match_id\":0,\"bet_type\":\"home\",\"amount\":17.0}}\n\
              \n\
              {\"id\":2,\"tool\":\"next_matchday\"}\n\
              {\"id\":3,\"tool\":\"fly_to_moon\"}\n",
        )
        .unwrap();
    let out = child.wait_with_output().unwrap();
    let lines: Vec<serde_json::Value> = stdout(&out).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0]["payload"]["data"]["ticket"]["potential_return"], "136.000");
    assert_eq!(lines[1]["payload"]["data"]["settlement"]["bankroll_after"], "203.000");
    assert_eq!(lines[2]["error"]["code"], "UNKNOWN_TOOL");
    let log = std::fs::read_to_string(dir.path().join("session-1.ndjson")).unwrap();
    assert_eq!(log.lines().count(), 3);
}

#[test]
fn analyze_writes_the_console_exports() {
    let dir = tempfile::tempdir().unwrap();
    backtest("favourites", &dir.path().join("fav.ndjson"));
    backtest("dixon_coles", &dir.path().join("dc.ndjson"));
    let out_dir = dir.path().join("report");
    let out = matchday(&[
        "analyze",
        dir.path().to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
        "--bootstrap",
        "500",
        "--seed",
        "9",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    assert_eq!(report["curves"][0]["values"][0], 100000.0);
    assert_eq!(report["groups"][0]["bootstrap"]["n_sims"], 500);
    assert_eq!(report["tests"]["labels"].as_array().unwrap().len(), 2);
    for f in ["metrics.csv", "curves.csv", "bands.csv", "tests.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let bands = std::fs::read_to_string(out_dir.join("bands.csv")).unwrap();
    assert!(bands.starts_with("label,step,p5,p25,p50,p75,p95"));
}
