use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::routing::{get, post};
use axum::{Json, Router};
use pacebound_client::api::{
    CreateSessionRequest, CreateSessionResponse, DelayResponse, MinuteRequest,
};
use pacebound_core::{Event, MinuteFeedback};
use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use crate::error::ApiError;
use crate::session::AppState;

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", axum::routing::delete(delete_session))
        .route("/sessions/{id}/minute", post(post_minute))
        .route("/sessions/{id}/delay", get(get_delay))
        .route("/sessions/{id}/events", post(post_event))
        .with_state(state)
}

/// JSON body parsing with errors in the API's error shape. An empty body
/// reads as `{}`.
fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    let text: &[u8] = if body.iter().all(u8::is_ascii_whitespace) {
        b"{}"
    } else {
        body
    };
    serde_json::from_slice(text).map_err(|e| ApiError::BadRequest(format!("invalid body: {e}")))
}

async fn create_session(
    State(app): State<AppState>,
    body: Bytes,
) -> Result<(StatusCode, Json<CreateSessionResponse>), ApiError> {
    let req: CreateSessionRequest = parse(&body)?;
    let session_id = app.create(&req)?;
    Ok((
        StatusCode::CREATED,
        Json(CreateSessionResponse { session_id }),
    ))
}

async fn post_minute(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<Json<DelayResponse>, ApiError> {
    let req: MinuteRequest = parse(&body)?;
    let session = app.get(&id)?;
    let (state, classification) = match (req.state, req.summary) {
        (Some(state), _) => (state, None),
        (None, Some(summary)) => {
            let classifier = app.classifier.clone();
            let result = tokio::task::spawn_blocking(move || {
                classifier.classify(&summary, req.diff.as_deref())
            })
            .await
            .map_err(|e| ApiError::Internal(format!("classifier task failed: {e}")))?;
            (result.state, Some(result))
        }
        (None, None) => {
            return Err(ApiError::BadRequest(
                "minute needs either a state or a summary to classify".into(),
            ))
        }
    };
    let mut s = session.lock().expect("session poisoned");
    let delay_s = s
        .controller
        .update(&MinuteFeedback::new(state, req.accepted, req.rejected));
    s.state = state;
    s.minutes += 1;
    Ok(Json(DelayResponse {
        delay_s,
        classification,
    }))
}

async fn get_delay(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<Json<DelayResponse>, ApiError> {
    let session = app.get(&id)?;
    let delay_s = session
        .lock()
        .expect("session poisoned")
        .controller
        .current_delay();
    Ok(Json(DelayResponse {
        delay_s,
        classification: None,
    }))
}

async fn post_event(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> Result<(StatusCode, Json<Value>), ApiError> {
    let value: Value = serde_json::from_slice(&body)
        .map_err(|e| ApiError::BadRequest(format!("invalid body: {e}")))?;
    let event = Event::from_value(value).map_err(ApiError::BadRequest)?;
    let session = app.get(&id)?;
    let stored = session.lock().expect("session poisoned").record(&event)?;
    Ok((StatusCode::ACCEPTED, Json(json!({ "stored": stored }))))
}

async fn delete_session(
    State(app): State<AppState>,
    Path(id): Path<String>,
) -> Result<StatusCode, ApiError> {
    app.remove(&id)?;
    Ok(StatusCode::NO_CONTENT)
}
