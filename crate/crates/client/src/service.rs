use pacebound_core::Event;
use reqwest::blocking::{Client, Response};
use reqwest::StatusCode;
use serde::de::DeserializeOwned;
use thiserror::Error;

use crate::api::{
    CreateSessionRequest, CreateSessionResponse, DelayResponse, ErrorBody, MinuteRequest,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("request failed: {0}")]
    Transport(#[from] reqwest::Error),
    #[error("server answered {status}: {message}")]
    Status { status: StatusCode, message: String },
}

/// Blocking client of the pacebound service.
#[derive(Debug, Clone)]
pub struct PaceboundClient {
    base: String,
    http: Client,
}

impl PaceboundClient {
    /// `base_url` like `http://127.0.0.1:8080`.
    pub fn new(base_url: impl Into<String>) -> Result<Self, ClientError> {
        let base = base_url.into().trim_end_matches('/').to_string();
        Ok(Self {
            base,
            http: Client::builder().build()?,
        })
    }

    pub fn base_url(&self) -> &str {
        &self.base
    }

    pub fn create_session(&self, request: &CreateSessionRequest) -> Result<String, ClientError> {
        let resp = self
            .http
            .post(format!("{}/sessions", self.base))
            .json(request)
            .send()?;
        Ok(decode::<CreateSessionResponse>(resp)?.session_id)
    }

    pub fn post_minute(
        &self,
        id: &str,
        request: &MinuteRequest,
    ) -> Result<DelayResponse, ClientError> {
        let resp = self
            .http
            .post(format!("{}/sessions/{id}/minute", self.base))
            .json(request)
            .send()?;
        decode(resp)
    }

    pub fn get_delay(&self, id: &str) -> Result<f64, ClientError> {
        let resp = self
            .http
            .get(format!("{}/sessions/{id}/delay", self.base))
            .send()?;
        Ok(decode::<DelayResponse>(resp)?.delay_s)
    }

    pub fn post_event(&self, id: &str, event: &Event) -> Result<(), ClientError> {
        let resp = self
            .http
            .post(format!("{}/sessions/{id}/events", self.base))
            .json(&event.to_value())
            .send()?;
        check(resp).map(drop)
    }

    pub fn delete_session(&self, id: &str) -> Result<(), ClientError> {
        let resp = self
            .http
            .delete(format!("{}/sessions/{id}", self.base))
            .send()?;
        check(resp).map(drop)
    }
}

fn check(resp: Response) -> Result<Response, ClientError> {
    let status = resp.status();
    if status.is_success() {
        return Ok(resp);
    }
    let text = resp.text().unwrap_or_default();
    let message = serde_json::from_str::<ErrorBody>(&text)
        .map(|b| b.error)
        .unwrap_or(text);
    Err(ClientError::Status { status, message })
}

fn decode<T: DeserializeOwned>(resp: Response) -> Result<T, ClientError> {
    Ok(check(resp)?.json()?)
}
