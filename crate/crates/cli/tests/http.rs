use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use matchday_cli::http::router;
use matchday_cli::serve::SessionFactory;
use matchday_core::dataset::MINI_DIR;
use matchday_core::{Dataset, LineConfig, ScenarioRegistry};
use serde_json::Value;
use tower::ServiceExt;

fn app() -> Router {
    let registry: ScenarioRegistry = std::fs::read_to_string(format!("{MINI_DIR}/scenarios.cfg"))
        .unwrap()
        .parse()
        .unwrap();
    let data = Arc::new(Dataset::load_dir(MINI_DIR).unwrap());
    let factory = SessionFactory::new(data, registry, "Mini Season", LineConfig::default(), "human").unwrap();
    router(Arc::new(factory))
}

async fn send(app: &Router, method: &str, uri: &str, body: &str, key: Option<&str>) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    if let Some(k) = key {
        req = req.header("Idempotency-Key", k);
    }
    let res = app
        .clone()
        .oneshot(req.body(Body::from(body.to_string())).unwrap())
        .await
        .unwrap();
    let status = res.status();
    let bytes = res.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn json(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

async fn open(app: &Router) -> String {
    let (status, body) = send(app, "POST", "/sessions", "", None).await;
    assert_eq!(status, StatusCode::CREATED);
    json(&body)["session_id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn opening_slip_over_http() {
    let app = app();
    let id = open(&app).await;
    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/tools/view_matches"), "", None).await;
    assert_eq!(status, StatusCode::OK);
    assert!(json(&body)["payload"]["text"].as_str().unwrap().contains("Odds - Home: 8.0"));

    let bet = |t: &str, a: &str| format!(r#"{{"match_id":0,"bet_type":"{t}","amount":"{a}"}}"#);
    let uri = format!("/sessions/{id}/tools/place_bet");
    let (status, body) = send(&app, "POST", &uri, &bet("home", "17.000"), Some("slip-1")).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&body)["payload"]["data"]["ticket"]["potential_return"], "136.000");
    // a retried submission with the same key is not a second ticket
    let (_, again) = send(&app, "POST", &uri, &bet("home", "17.000"), Some("slip-1")).await;
    assert_eq!(again, body);
    send(&app, "POST", &uri, &bet("draw", "6"), Some("slip-2")).await;
    send(&app, "POST", &uri, &bet("under_2_5", "5"), Some("slip-3")).await;

    let (_, body) = send(&app, "POST", &format!("/sessions/{id}/tools/view_bankroll"), "{}", None).await;
    let b = json(&body);
    assert_eq!(b["payload"]["data"]["balance"], "220.000");
    assert_eq!(b["payload"]["data"]["staked"], "28.000");
    assert_eq!(b["payload"]["data"]["available"], "192.000");

    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/tools/next_matchday"), "", Some("adv-1")).await;
    assert_eq!(status, StatusCode::OK);
    let r = json(&body);
    assert_eq!(r["payload"]["data"]["settlement"]["net"], "-28.000");
    assert_eq!(r["payload"]["data"]["settlement"]["bankroll_after"], "192.000");
    assert_eq!(r["payload"]["text"].as_str().unwrap().matches("x LOST").count(), 3);

    let (status, log) = send(&app, "GET", &format!("/sessions/{id}/log"), "", None).await;
    assert_eq!(status, StatusCode::OK);
    let kinds: Vec<String> = log.lines().map(|l| json(l)["kind"].as_str().unwrap().to_string()).collect();
    assert_eq!(
        kinds,
        ["season_start", "view", "bet_placed", "bet_placed", "bet_placed", "view", "settlement"]
    );
}

#[tokio::test]
async fn refusals_map_to_status_codes() {
    let app = app();
    let id = open(&app).await;
    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/tools/next_matchday"), "", None).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert_eq!(json(&body)["error"]["code"], "NO_BETS_PLACED");
    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/tools/fly_to_moon"), "", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(json(&body)["error"]["code"], "UNKNOWN_TOOL");
    let (status, body) = send(&app, "POST", &format!("/sessions/{id}/tools/place_bet"), "{\"match_id\":", None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(json(&body)["error"]["code"], "BAD_ARGS");
    let (status, _) = send(&app, "POST", "/sessions/999/tools/view_matches", "", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = send(&app, "POST", "/sessions", r#"{"scenario":"Atlantis"}"#, None).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (_, log) = send(&app, "GET", &format!("/sessions/{id}/log"), "", None).await;
    assert_eq!(log.lines().count(), 1);
}

#[tokio::test]
async fn sessions_are_independent() {
    let app = app();
    let a = open(&app).await;
    let b = open(&app).await;
    assert_ne!(a, b);
    let body = r#"{"match_id":0,"bet_type":"away","amount":100}"#;
    send(&app, "POST", &format!("/sessions/{a}/tools/place_bet"), body, None).await;
    let (_, res) = send(&app, "POST", &format!("/sessions/{b}/tools/view_bankroll"), "", None).await;
    assert_eq!(json(&res)["payload"]["data"]["available"], "220.000");
    let (status, _) = send(&app, "DELETE", &format!("/sessions/{a}"), "", None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = send(&app, "GET", &format!("/sessions/{a}"), "", None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, info) = send(&app, "GET", &format!("/sessions/{b}"), "", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(json(&info)["label"], "human");
}
