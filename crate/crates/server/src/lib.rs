//! HTTP/JSON service holding one delay controller per editor session.
//!
//! Each `POST /sessions/{id}/minute` is one controller update; the service
//! keeps no wall clock of its own. Sessions live in memory. With a log
//! directory configured, posted events are validated and appended to
//! `{log_dir}/{session_id}.jsonl` in the session-log format.

mod error;
mod routes;
mod session;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use pacebound_client::{RemoteClassifier, RemoteClassifierConfig};
use pacebound_core::stateinfer::{HeuristicClassifier, StateClassifier};
use tokio::net::TcpListener;

pub use error::{ApiError, ServerError};
pub use routes::router;
pub use session::AppState;

pub const ENV_LOG_DIR: &str = "PACEBOUND_LOG_DIR";

/// Classifier used for minutes posted without a state.
pub type SharedClassifier = Arc<dyn StateClassifier + Send + Sync>;

#[derive(Debug, Clone, Default)]
pub struct ServerConfig {
    pub log_dir: Option<PathBuf>,
    pub classifier: Option<RemoteClassifierConfig>,
}

impl ServerConfig {
    /// Log directory from `PACEBOUND_LOG_DIR`, remote classifier from
    /// `PACEBOUND_CLASSIFIER_URL` / `PACEBOUND_CLASSIFIER_TOKEN`.
    pub fn from_env() -> Self {
        Self {
            log_dir: std::env::var_os(ENV_LOG_DIR)
                .filter(|d| !d.is_empty())
                .map(PathBuf::from),
            classifier: RemoteClassifierConfig::from_env(),
        }
    }

    pub fn into_state(self) -> Result<AppState, ServerError> {
        if let Some(dir) = &self.log_dir {
            std::fs::create_dir_all(dir).map_err(|source| ServerError::LogDir {
                path: dir.clone(),
                source,
            })?;
        }
        let classifier: SharedClassifier = match self.classifier {
            Some(c) => {
                log::info!("classifying unlabelled minutes via {}", c.endpoint_url);
                Arc::new(RemoteClassifier::new(c))
            }
            None => Arc::new(HeuristicClassifier::default()),
        };
        Ok(AppState::new(self.log_dir, classifier))
    }
}

/// Binds `addr` and serves until ctrl-c.
pub async fn serve(addr: SocketAddr, config: ServerConfig) -> Result<(), ServerError> {
    let listener = TcpListener::bind(addr)
        .await
        .map_err(|source| ServerError::Bind { addr, source })?;
    serve_on(listener, config).await
}

pub async fn serve_on(listener: TcpListener, config: ServerConfig) -> Result<(), ServerError> {
    let state = config.into_state()?;
    if let Ok(addr) = listener.local_addr() {
        log::info!("listening on http://{addr}");
    }
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(ServerError::Io)
}
