use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};
use std::time::SystemTime;

use pacebound_client::api::CreateSessionRequest;
use pacebound_core::telemetry::{LogHeader, LogValidator};
use pacebound_core::{DelayController, DeveloperState, Event, Phase, StateBands};
use serde_json::json;

use crate::error::ApiError;
use crate::SharedClassifier;

pub(crate) struct Session {
    pub controller: DelayController,
    pub state: DeveloperState,
    pub created_at: SystemTime,
    pub minutes: u64,
    validator: LogValidator,
    events: usize,
    log: Option<File>,
}

impl Session {
    /// Validates `event` against the session's earlier events and appends it
    /// to the session log, if any.
    pub fn record(&mut self, event: &Event) -> Result<bool, ApiError> {
        // Line 1 is the header.
        self.validator
            .check(event, self.events + 2)
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;
        self.events += 1;
        match &mut self.log {
            Some(f) => {
                writeln!(f, "{}", event.to_json_line())
                    .map_err(|e| ApiError::Internal(format!("cannot append event: {e}")))?;
                Ok(true)
            }
            None => Ok(false),
        }
    }
}

#[derive(Clone)]
pub struct AppState {
    sessions: Arc<RwLock<HashMap<String, Arc<Mutex<Session>>>>>,
    log_dir: Option<PathBuf>,
    pub(crate) classifier: SharedClassifier,
}

impl AppState {
    pub fn new(log_dir: Option<PathBuf>, classifier: SharedClassifier) -> Self {
        Self {
            sessions: Arc::default(),
            log_dir,
            classifier,
        }
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().expect("session table poisoned").len()
    }

    pub(crate) fn create(&self, req: &CreateSessionRequest) -> Result<String, ApiError> {
        let state = req.state.unwrap_or_default();
        let params = req.params.unwrap_or_default();
        let bands = StateBands::default();
        let start = req
            .initial_delay_s
            .unwrap_or_else(|| bands.for_state(state).d_base());
        let controller = DelayController::with_delay(start, params, bands)
            .map_err(|e| ApiError::BadRequest(e.to_string()))?;

        let id = uuid::Uuid::new_v4().to_string();
        let log = match &self.log_dir {
            Some(dir) => Some(open_log(dir, &id, &controller)?),
            None => None,
        };
        let session = Session {
            controller,
            state,
            created_at: SystemTime::now(),
            minutes: 0,
            validator: LogValidator::default(),
            events: 0,
            log,
        };
        self.sessions
            .write()
            .expect("session table poisoned")
            .insert(id.clone(), Arc::new(Mutex::new(session)));
        log::debug!("created session {id}");
        Ok(id)
    }

    pub(crate) fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .read()
            .expect("session table poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }

    pub(crate) fn remove(&self, id: &str) -> Result<(), ApiError> {
        let session = self
            .sessions
            .write()
            .expect("session table poisoned")
            .remove(id)
            .ok_or_else(|| ApiError::NotFound(id.to_string()))?;
        let s = session.lock().expect("session poisoned");
        let age = s.created_at.elapsed().unwrap_or_default();
        log::debug!("closed session {id} after {} minutes ({age:?})", s.minutes);
        Ok(())
    }
}

fn open_log(
    dir: &std::path::Path,
    id: &str,
    controller: &DelayController,
) -> Result<File, ApiError> {
    let path = dir.join(format!("{id}.jsonl"));
    let mut header = LogHeader::new(id, Phase::Adaptive);
    header.extra.insert(
        "controller".into(),
        json!({ "params": controller.params(), "bands": controller.bands() }),
    );
    let mut f = OpenOptions::new()
        .create_new(true)
        .write(true)
        .open(&path)
        .map_err(|e| ApiError::Internal(format!("cannot create {}: {e}", path.display())))?;
    writeln!(f, "{}", header.to_value())
        .map_err(|e| ApiError::Internal(format!("cannot write {}: {e}", path.display())))?;
    Ok(f)
}
