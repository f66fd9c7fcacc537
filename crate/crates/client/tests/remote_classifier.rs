use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::{Json, Router};
use pacebound_client::{classify_remote, RemoteClassifierConfig};
use pacebound_core::stateinfer::{classify_heuristic, ClassificationSource};
use pacebound_core::{DeveloperState, MinuteSummary};
use serde_json::{json, Value};

#[derive(Clone, Default)]
struct Mock {
    calls: Arc<AtomicUsize>,
    prompts: Arc<Mutex<Vec<String>>>,
    auth: Arc<Mutex<Vec<Option<String>>>>,
}

/// Serves `reply(call_index)` on a background runtime.
fn spawn_mock<F>(reply: F) -> (SocketAddr, Mock)
where
    F: Fn(usize) -> (StatusCode, Value, Duration) + Send + Sync + 'static,
{
    let mock = Mock::default();
    let reply = Arc::new(reply);
    let state = (mock.clone(), reply);
    let app = Router::new()
        .route(
            "/classify",
            post(
                |State((mock, reply)): State<(Mock, Arc<F>)>,
                 headers: HeaderMap,
                 Json(body): Json<Value>| async move {
                    let n = mock.calls.fetch_add(1, Ordering::SeqCst);
                    mock.prompts
                        .lock()
                        .unwrap()
                        .push(body["prompt"].as_str().unwrap_or_default().to_string());
                    mock.auth.lock().unwrap().push(
                        headers
                            .get("authorization")
                            .map(|v| v.to_str().unwrap().to_string()),
                    );
                    let (status, value, wait) = reply(n);
                    tokio::time::sleep(wait).await;
                    (status, Json(value))
                },
            ),
        )
        .with_state(state);
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (rx.recv().unwrap(), mock)
}

fn config(addr: SocketAddr) -> RemoteClassifierConfig {
    RemoteClassifierConfig {
        timeout: Duration::from_millis(300),
        retry_count: 1,
        ..RemoteClassifierConfig::new(format!("http://{addr}/classify"))
    }
}

fn busy_debugger() -> MinuteSummary {
    MinuteSummary {
        navigation_count: 3,
        idle_seconds: 60.0,
        typing_speed_cps: 2.5,
        ..MinuteSummary::empty(4, DeveloperState::Implementing)
    }
}

fn text(t: &'static str) -> impl Fn(usize) -> (StatusCode, Value, Duration) {
    move |_| (StatusCode::OK, json!({ "text": t }), Duration::ZERO)
}

#[test]
fn one_word_reply() {
    let (addr, mock) = spawn_mock(text("debugging"));
    let r = classify_remote(
        &config(addr),
        &MinuteSummary::empty(0, DeveloperState::Implementing),
        None,
    );
    assert_eq!(r.state, DeveloperState::Debugging);
    assert_eq!(r.source, ClassificationSource::Remote);
    assert_eq!(mock.calls.load(Ordering::SeqCst), 1);
}

#[test]
fn sentence_reply_is_searched() {
    let (addr, _) = spawn_mock(text("The developer is implementing new code."));
    let r = classify_remote(&config(addr), &busy_debugger(), Some("+ fn x() {}"));
    assert_eq!(r.state, DeveloperState::Implementing);
    assert_eq!(r.source, ClassificationSource::Remote);
}

#[test]
fn prompt_and_token_are_sent() {
    let (addr, mock) = spawn_mock(text("implementing"));
    let mut cfg = config(addr);
    cfg.auth_token = Some("s3cret".into());
    classify_remote(&cfg, &busy_debugger(), Some("- old\n+ new"));
    let prompt = mock.prompts.lock().unwrap()[0].clone();
    assert!(prompt.contains("2.5"));
    assert!(prompt.contains("- old\n+ new"));
    assert_eq!(
        mock.auth.lock().unwrap()[0].as_deref(),
        Some("Bearer s3cret")
    );
    assert!(!format!("{cfg:?}").contains("s3cret"));
}

#[test]
fn timeout_falls_back_to_heuristic() {
    let (addr, mock) = spawn_mock(|_| {
        (
            StatusCode::OK,
            json!({ "text": "implementing" }),
            Duration::from_secs(3),
        )
    });
    let summary = busy_debugger();
    let r = classify_remote(&config(addr), &summary, None);
    assert_eq!(r.source, ClassificationSource::Fallback);
    assert_eq!(r.state, classify_heuristic(&summary).state);
    assert_eq!(r.state, DeveloperState::Debugging);
    assert_eq!(mock.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn ambiguous_reply_falls_back() {
    let (addr, _) = spawn_mock(text("implementing and debugging"));
    let r = classify_remote(&config(addr), &busy_debugger(), None);
    assert_eq!(r.source, ClassificationSource::Fallback);
}

#[test]
fn retry_recovers_from_server_error() {
    let (addr, mock) = spawn_mock(|n| {
        if n == 0 {
            (StatusCode::INTERNAL_SERVER_ERROR, json!({}), Duration::ZERO)
        } else {
            (
                StatusCode::OK,
                json!({ "text": "DEBUGGING" }),
                Duration::ZERO,
            )
        }
    });
    let r = classify_remote(
        &config(addr),
        &MinuteSummary::empty(0, DeveloperState::Implementing),
        None,
    );
    assert_eq!(r.source, ClassificationSource::Remote);
    assert_eq!(r.state, DeveloperState::Debugging);
    assert_eq!(mock.calls.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_endpoint_falls_back() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let r = classify_remote(&config(addr), &busy_debugger(), None);
    assert_eq!(r.source, ClassificationSource::Fallback);
}

#[test]
fn zero_timeout_uses_heuristic() {
    let cfg = RemoteClassifierConfig {
        timeout: Duration::ZERO,
        ..RemoteClassifierConfig::new("http://127.0.0.1:9/never")
    };
    let r = classify_remote(&cfg, &busy_debugger(), None);
    assert_eq!(r.source, ClassificationSource::Fallback);
}

#[test]
fn config_from_environment() {
    std::env::remove_var("PACEBOUND_CLASSIFIER_URL");
    assert!(RemoteClassifierConfig::from_env().is_none());
    std::env::set_var("PACEBOUND_CLASSIFIER_URL", " http://example.invalid/c ");
    std::env::set_var("PACEBOUND_CLASSIFIER_TOKEN", "tok");
    let cfg = RemoteClassifierConfig::from_env().unwrap();
    assert_eq!(cfg.endpoint_url, "http://example.invalid/c");
    assert_eq!(cfg.auth_token.as_deref(), Some("tok"));
    std::env::remove_var("PACEBOUND_CLASSIFIER_URL");
    std::env::remove_var("PACEBOUND_CLASSIFIER_TOKEN");
}
