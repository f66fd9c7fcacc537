//! JSON bodies of the service API.

use pacebound_core::stateinfer::ClassificationResult;
use pacebound_core::{ControllerParams, DeveloperState, MinuteSummary};
use serde::{Deserialize, Serialize};

/// `POST /sessions`. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CreateSessionRequest {
    /// State whose base delay the session starts at.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub state: Option<DeveloperState>,
    /// Overrides the starting delay.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_delay_s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<ControllerParams>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreateSessionResponse {
    pub session_id: String,
}

/// `POST /sessions/{id}/minute`: one minute of feedback.
///
/// Without `state` the server classifies `summary` (and `diff`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MinuteRequest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<DeveloperState>,
    #[serde(default)]
    pub accepted: u32,
    #[serde(default)]
    pub rejected: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<MinuteSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diff: Option<String>,
}

impl MinuteRequest {
    pub fn labelled(state: DeveloperState, accepted: u32, rejected: u32) -> Self {
        Self {
            state: Some(state),
            accepted,
            rejected,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayResponse {
    pub delay_s: f64,
    /// Present when the server classified the minute itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classification: Option<ClassificationResult>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
