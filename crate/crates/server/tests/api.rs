use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use pacebound_core::telemetry::read_log;
use pacebound_core::{
    ControllerParams, DelayController, DeveloperState, MinuteFeedback, StateBands,
};
use pacebound_server::{router, ServerConfig};
use serde_json::{json, Value};
use tower::ServiceExt;

fn app(config: ServerConfig) -> Router {
    router(config.into_state().unwrap())
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder()
        .method(method)
        .uri(uri)
        .header("content-type", "application/json")
        .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = if bytes.is_empty() {
        Value::Null
    } else {
        serde_json::from_slice(&bytes).unwrap()
    };
    (status, value)
}

async fn new_session(app: &Router, body: Option<Value>) -> String {
    let (status, v) = call(app, Method::POST, "/sessions", body).await;
    assert_eq!(status, StatusCode::CREATED, "{v}");
    v["session_id"].as_str().unwrap().to_string()
}

async fn minute(app: &Router, id: &str, state: &str, acc: u32, rej: u32) -> f64 {
    let (status, v) = call(
        app,
        Method::POST,
        &format!("/sessions/{id}/minute"),
        Some(json!({ "state": state, "accepted": acc, "rejected": rej })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    v["delay_s"].as_f64().unwrap()
}

#[tokio::test]
async fn fresh_session_idle_minute_moves_up_one_cap() {
    let app = app(ServerConfig::default());
    let id = new_session(&app, None).await;
    let (_, v) = call(&app, Method::GET, &format!("/sessions/{id}/delay"), None).await;
    assert!((v["delay_s"].as_f64().unwrap() - 1.1).abs() < 1e-12);
    let d = minute(&app, &id, "implementing", 0, 0).await;
    assert!((d - 1.20).abs() < 1e-12, "{d}");
    let (_, v) = call(&app, Method::GET, &format!("/sessions/{id}/delay"), None).await;
    assert_eq!(v["delay_s"].as_f64().unwrap(), d);
}

#[tokio::test]
async fn unknown_session_is_not_found() {
    let app = app(ServerConfig::default());
    let cases = [
        (
            Method::POST,
            "/sessions/nope/minute",
            Some(json!({"state": "implementing"})),
        ),
        (Method::GET, "/sessions/nope/delay", None),
        (
            Method::POST,
            "/sessions/nope/events",
            Some(json!({"ts_ms": 1, "kind": "keystroke"})),
        ),
        (Method::DELETE, "/sessions/nope", None),
    ];
    for (method, uri, body) in cases {
        let (status, v) = call(&app, method, uri, body).await;
        assert_eq!(status, StatusCode::NOT_FOUND, "{uri}");
        assert!(v["error"].as_str().unwrap().contains("nope"));
    }
}

#[tokio::test]
async fn sessions_are_isolated() {
    let app = app(ServerConfig::default());
    let a = new_session(&app, None).await;
    let b = new_session(&app, Some(json!({ "state": "debugging" }))).await;
    assert_ne!(a, b);
    let mut ca = DelayController::new(
        DeveloperState::Implementing,
        ControllerParams::default(),
        StateBands::default(),
    )
    .unwrap();
    let mut cb = DelayController::new(
        DeveloperState::Debugging,
        ControllerParams::default(),
        StateBands::default(),
    )
    .unwrap();
    for i in 0..8 {
        let da = minute(&app, &a, "implementing", 10, 0).await;
        let db = minute(&app, &b, "debugging", 0, i).await;
        assert_eq!(
            da,
            ca.update(&MinuteFeedback::new(DeveloperState::Implementing, 10, 0))
        );
        assert_eq!(
            db,
            cb.update(&MinuteFeedback::new(DeveloperState::Debugging, 0, i))
        );
    }
    assert!((ca.current_delay() - 0.8).abs() < 1e-12);
    assert!((cb.current_delay() - 1.6).abs() < 1e-12);
}

#[tokio::test]
async fn delete_ends_a_session() {
    let app = app(ServerConfig::default());
    let id = new_session(&app, None).await;
    let (status, _) = call(&app, Method::DELETE, &format!("/sessions/{id}"), None).await;
    assert_eq!(status, StatusCode::NO_CONTENT);
    let (status, _) = call(&app, Method::GET, &format!("/sessions/{id}/delay"), None).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn bad_requests_are_rejected_with_json_errors() {
    let app = app(ServerConfig::default());
    let (status, v) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({ "params": { "gamma": -1.0 } })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("gamma"));
    let (status, _) = call(
        &app,
        Method::POST,
        "/sessions",
        Some(json!({ "initial_delay_s": -0.5 })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let id = new_session(&app, None).await;
    let uri = format!("/sessions/{id}/minute");
    let (status, v) = call(&app, Method::POST, &uri, Some(json!({ "state": "bogus" }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST, "{v}");
    let (status, v) = call(&app, Method::POST, &uri, Some(json!({ "accepted": 1 }))).await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("summary"));
}

#[tokio::test]
async fn custom_start_and_params() {
    let app = app(ServerConfig::default());
    let id = new_session(
        &app,
        Some(json!({ "initial_delay_s": 0.85, "params": { "smoothing_cap": 0.02 } })),
    )
    .await;
    let d = minute(&app, &id, "implementing", 10, 0).await;
    assert!((d - 0.83).abs() < 1e-12, "{d}");
}

#[tokio::test]
async fn unlabelled_minutes_are_classified() {
    let app = app(ServerConfig::default());
    let id = new_session(&app, None).await;
    let summary = json!({
        "minute_index": 0, "typing_speed_cps": 0.0, "keystroke_count": 0, "edit_count": 0,
        "navigation_count": 3, "command_count": 0, "idle_seconds": 60.0
    });
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/minute"),
        Some(json!({ "accepted": 0, "rejected": 2, "summary": summary })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["classification"]["state"], "debugging");
    assert_eq!(v["classification"]["source"], "heuristic");
    assert!((v["delay_s"].as_f64().unwrap() - 1.2).abs() < 1e-12);
}

#[tokio::test]
async fn events_are_validated_and_persisted() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(ServerConfig {
        log_dir: Some(dir.path().to_path_buf()),
        classifier: None,
    });
    let id = new_session(&app, None).await;
    let uri = format!("/sessions/{id}/events");
    let events = [
        json!({"ts_ms": 0, "kind": "state_label", "state": "implementing"}),
        json!({"ts_ms": 100, "kind": "keystroke", "key_code": 65}),
        json!({"ts_ms": 1300, "kind": "suggestion_shown", "suggestion_id": "s1", "delay_applied_s": 1.2}),
        json!({"ts_ms": 1500, "kind": "suggestion_rejected", "suggestion_id": "s1", "decision_time_s": 0.2}),
    ];
    for e in &events {
        let (status, v) = call(&app, Method::POST, &uri, Some(e.clone())).await;
        assert_eq!(status, StatusCode::ACCEPTED, "{v}");
        assert_eq!(v["stored"], true);
    }
    let (status, v) = call(
        &app,
        Method::POST,
        &uri,
        Some(json!({"ts_ms": 10, "kind": "keystroke"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(v["error"].as_str().unwrap().contains("line 6"), "{v}");
    let (status, _) = call(
        &app,
        Method::POST,
        &uri,
        Some(json!({"ts_ms": 2000, "kind": "suggestion_accepted", "suggestion_id": "ghost"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let (status, _) = call(
        &app,
        Method::POST,
        &uri,
        Some(json!({"ts_ms": 2000, "kind": "teleport"})),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);

    let log = read_log(dir.path().join(format!("{id}.jsonl"))).unwrap();
    assert_eq!(log.header.session_id, id);
    assert!(log.header.extra.contains_key("controller"));
    assert_eq!(log.events.len(), 4);
    assert_eq!(log.events[1].extra["key_code"], 65);
}

#[tokio::test]
async fn events_without_log_dir_are_only_validated() {
    let app = app(ServerConfig::default());
    let id = new_session(&app, None).await;
    let (status, v) = call(
        &app,
        Method::POST,
        &format!("/sessions/{id}/events"),
        Some(json!({"ts_ms": 5, "kind": "keystroke"})),
    )
    .await;
    assert_eq!(status, StatusCode::ACCEPTED);
    assert_eq!(v["stored"], false);
}
