use std::fmt;
use std::time::Duration;

use pacebound_core::stateinfer::{
    build_prompt, classify_heuristic, parse_state_response, ClassificationResult,
    ClassificationSource, StateClassifier,
};
use pacebound_core::MinuteSummary;
use reqwest::blocking::Client;
use serde::{Deserialize, Serialize};

pub const ENV_CLASSIFIER_URL: &str = "PACEBOUND_CLASSIFIER_URL";
pub const ENV_CLASSIFIER_TOKEN: &str = "PACEBOUND_CLASSIFIER_TOKEN";

#[derive(Clone)]
pub struct RemoteClassifierConfig {
    pub endpoint_url: String,
    /// Sent as a bearer token when set.
    pub auth_token: Option<String>,
    /// Per attempt. Must be positive.
    pub timeout: Duration,
    /// Attempts after the first one.
    pub retry_count: u32,
}

impl fmt::Debug for RemoteClassifierConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteClassifierConfig")
            .field("endpoint_url", &self.endpoint_url)
            .field(
                "auth_token",
                &self.auth_token.as_ref().map(|_| "<redacted>"),
            )
            .field("timeout", &self.timeout)
            .field("retry_count", &self.retry_count)
            .finish()
    }
}

impl RemoteClassifierConfig {
    pub fn new(endpoint_url: impl Into<String>) -> Self {
        Self {
            endpoint_url: endpoint_url.into(),
            auth_token: None,
            timeout: Duration::from_secs(5),
            retry_count: 1,
        }
    }

    /// Reads the endpoint and token from the environment; `None` when no
    /// endpoint is configured.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(ENV_CLASSIFIER_URL)
            .ok()
            .filter(|u| !u.trim().is_empty())?;
        let mut config = Self::new(url.trim());
        config.auth_token = std::env::var(ENV_CLASSIFIER_TOKEN)
            .ok()
            .filter(|t| !t.is_empty());
        Some(config)
    }
}

#[derive(Serialize)]
struct PromptBody<'a> {
    prompt: &'a str,
}

#[derive(Deserialize)]
struct ReplyBody {
    text: String,
}

/// Prompt-based classifier behind `POST {endpoint_url}`. Falls back to the
/// heuristic on any failure.
#[derive(Debug, Clone)]
pub struct RemoteClassifier {
    config: RemoteClassifierConfig,
    http: Option<Client>,
}

impl RemoteClassifier {
    pub fn new(config: RemoteClassifierConfig) -> Self {
        let http = if config.timeout.is_zero() {
            log::warn!("classifier timeout must be positive; using the heuristic only");
            None
        } else {
            Client::builder()
                .timeout(config.timeout)
                .build()
                .map_err(|e| log::warn!("cannot build classifier HTTP client: {e}"))
                .ok()
        };
        Self { config, http }
    }

    pub fn config(&self) -> &RemoteClassifierConfig {
        &self.config
    }

    fn ask(&self, http: &Client, prompt: &str) -> Result<String, String> {
        let mut req = http
            .post(&self.config.endpoint_url)
            .json(&PromptBody { prompt });
        if let Some(token) = &self.config.auth_token {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| e.to_string())?;
        let status = resp.status();
        if status != reqwest::StatusCode::OK {
            return Err(format!("endpoint answered {status}"));
        }
        resp.json::<ReplyBody>()
            .map(|r| r.text)
            .map_err(|e| format!("bad reply body: {e}"))
    }
}

impl StateClassifier for RemoteClassifier {
    fn classify(&self, summary: &MinuteSummary, diff: Option<&str>) -> ClassificationResult {
        let fallback = || ClassificationResult {
            source: ClassificationSource::Fallback,
            ..classify_heuristic(summary)
        };
        let Some(http) = &self.http else {
            return fallback();
        };
        let prompt = build_prompt(summary, diff.unwrap_or(""));
        for attempt in 0..=self.config.retry_count {
            match self.ask(http, &prompt) {
                Ok(text) => match parse_state_response(&text) {
                    Some(state) => {
                        return ClassificationResult {
                            state,
                            confidence: 1.0,
                            source: ClassificationSource::Remote,
                        }
                    }
                    None => {
                        log::warn!("classifier reply not understood (attempt {attempt}): {text:?}")
                    }
                },
                Err(e) => log::warn!("classifier call failed (attempt {attempt}): {e}"),
            }
        }
        log::warn!("falling back to the heuristic classifier");
        fallback()
    }
}

/// One-shot remote classification.
pub fn classify_remote(
    config: &RemoteClassifierConfig,
    summary: &MinuteSummary,
    diff: Option<&str>,
) -> ClassificationResult {
    RemoteClassifier::new(config.clone()).classify(summary, diff)
}
