//! Blocking HTTP clients: [`PaceboundClient`] for the pacebound service and
//! [`RemoteClassifier`] for a prompt-based state classifier.
//!
//! The request and response bodies in [`api`] are shared with the server.

pub mod api;
mod remote;
mod service;

pub use remote::{
    classify_remote, RemoteClassifier, RemoteClassifierConfig, ENV_CLASSIFIER_TOKEN,
    ENV_CLASSIFIER_URL,
};
pub use service::{ClientError, PaceboundClient};
