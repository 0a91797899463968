//! HTTP binding of the tool protocol.
//!
//! - `POST /sessions` with an optional `{"scenario", "label"}` body opens a
//!   session and returns its id.
//! - `POST /sessions/{id}/tools/{tool}` takes the tool's args object as the
//!   body and answers with the same response object as the NDJSON
//!   transports. An `Idempotency-Key` header becomes the request id.
//! - `GET /sessions/{id}/log` returns the session's run log as NDJSON.
//! - `DELETE /sessions/{id}` closes a session, writing its log if configured.

use std::collections::HashMap;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use matchday_core::protocol::{ErrorCode, Session, ToolRequest, ToolResponse};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;
use tower_http::cors::CorsLayer;

use crate::serve::SessionFactory;
use crate::CliError;

pub const IDEMPOTENCY_HEADER: &str = "idempotency-key";

struct AppState {
    factory: Arc<SessionFactory>,
    sessions: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
}

type Shared = Arc<AppState>;

pub fn router(factory: Arc<SessionFactory>) -> Router {
    let state = Arc::new(AppState {
        factory,
        sessions: Mutex::new(HashMap::new()),
    });
    Router::new()
        .route("/sessions", post(open_session))
        .route("/sessions/{id}", get(describe_session).delete(close_session))
        .route("/sessions/{id}/tools/{tool}", post(call_tool))
        .route("/sessions/{id}/log", get(session_log))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct OpenRequest {
    scenario: Option<String>,
    label: Option<String>,
}

fn error(status: StatusCode, code: ErrorCode, message: impl Into<String>) -> Response {
    (status, Json(ToolResponse::failure(Value::Null, code, message))).into_response()
}

fn status_for(code: ErrorCode) -> StatusCode {
    match code {
        ErrorCode::UnknownTool => StatusCode::NOT_FOUND,
        ErrorCode::BadArgs => StatusCode::BAD_REQUEST,
        ErrorCode::Internal => StatusCode::INTERNAL_SERVER_ERROR,
        _ => StatusCode::CONFLICT,
    }
}

async fn open_session(State(state): State<Shared>, body: Bytes) -> Response {
    let req: OpenRequest = if body.iter().all(u8::is_ascii_whitespace) {
        OpenRequest::default()
    } else {
        match serde_json::from_slice(&body) {
            Ok(r) => r,
            Err(e) => return error(StatusCode::BAD_REQUEST, ErrorCode::BadArgs, e.to_string()),
        }
    };
    let (id, session) = match state.factory.open(req.scenario.as_deref(), req.label.as_deref()) {
        Ok(s) => s,
        Err(CliError::Config(m)) => return error(StatusCode::BAD_REQUEST, ErrorCode::BadArgs, m),
        Err(e) => return error(StatusCode::INTERNAL_SERVER_ERROR, ErrorCode::Internal, e.to_string()),
    };
    let body = json!({
        "session_id": id.to_string(),
        "scenario": session.ledger().scenario(),
        "matchdays": session.ledger().matchday_count(),
        "date": session.ledger().current_date(),
    });
    state.sessions.lock().await.insert(id, Arc::new(Mutex::new(session)));
    (StatusCode::CREATED, Json(body)).into_response()
}

async fn lookup(state: &AppState, id: &str) -> Result<Arc<Mutex<Session>>, Response> {
    let missing = || error(StatusCode::NOT_FOUND, ErrorCode::BadArgs, format!("no session {id}"));
    let key: u64 = id.parse().map_err(|_| missing())?;
    state.sessions.lock().await.get(&key).cloned().ok_or_else(missing)
}

async fn describe_session(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    let session = match lookup(&state, &id).await {
        Ok(s) => s,
        Err(r) => return r,
    };
    let s = session.lock().await;
    let ledger = s.ledger();
    Json(json!({
        "session_id": id,
        "scenario": ledger.scenario(),
        "label": ledger.label(),
        "matchday": ledger.matchday(),
        "matchdays": ledger.matchday_count(),
        "bankroll": ledger.view_bankroll(),
        "terminal": ledger.terminal_summary(),
    }))
    .into_response()
}

async fn call_tool(
    State(state): State<Shared>,
    Path((id, tool)): Path<(String, String)>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    let session = match lookup(&state, &id).await {
        Ok(s) => s,
        Err(r) => return r,
    };
    let request_id = match headers.get(IDEMPOTENCY_HEADER) {
        Some(v) => match v.to_str() {
            Ok(s) => Value::String(s.to_string()),
            Err(_) => return error(StatusCode::BAD_REQUEST, ErrorCode::BadArgs, "idempotency key is not text"),
        },
        None => Value::Null,
    };
    let args = if body.iter().all(u8::is_ascii_whitespace) {
        Value::Null
    } else {
        match serde_json::from_slice(&body) {
            Ok(v) => v,
            Err(e) => {
                let r = ToolResponse::failure(request_id, ErrorCode::BadArgs, format!("malformed body: {e}"));
                return (StatusCode::BAD_REQUEST, Json(r)).into_response();
            }
        }
    };
    let response = session.lock().await.handle(ToolRequest {
        id: request_id,
        tool,
        args,
    });
    let status = response.code().map_or(StatusCode::OK, status_for);
    (status, Json(response)).into_response()
}

async fn session_log(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    match lookup(&state, &id).await {
        Ok(s) => (
            [(header::CONTENT_TYPE, "application/x-ndjson")],
            s.lock().await.log_ndjson(),
        )
            .into_response(),
        Err(r) => r,
    }
}

async fn close_session(State(state): State<Shared>, Path(id): Path<String>) -> Response {
    let session = match lookup(&state, &id).await {
        Ok(s) => s,
        Err(r) => return r,
    };
    let key: u64 = id.parse().expect("looked up");
    state.sessions.lock().await.remove(&key);
    state.factory.finish(key, &*session.lock().await);
    StatusCode::NO_CONTENT.into_response()
}
