//! Recomputes the adaptive delay trace of a recorded session and compares
//! it with the delays the session actually applied.

use serde::{Deserialize, Serialize};

use crate::controller::{ControllerError, ControllerParams, DelayController, StateBands};
use crate::telemetry::{minute_feedback, EventPayload, SessionLog, MINUTE_MS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayReport {
    /// Delay in force during each minute of the log.
    pub trace: Vec<f64>,
    /// Number of shown suggestions compared against the trace.
    pub compared: usize,
    pub max_abs_divergence: f64,
    /// Minute of the first suggestion whose recorded delay differs, if any.
    pub first_divergent_minute: Option<usize>,
}

/// Controller settings recorded in a log header by the simulator, if any.
pub fn header_controller(log: &SessionLog) -> Option<(ControllerParams, StateBands)> {
    let c = log.header.extra.get("controller")?;
    let params = serde_json::from_value(c.get("params")?.clone()).ok()?;
    let bands = serde_json::from_value(c.get("bands")?.clone()).ok()?;
    Some((params, bands))
}

/// Replays the minute-level feedback of `log` through a fresh controller.
///
/// The controller starts at the base delay of the first minute's state and
/// is updated at each minute boundary. A shown suggestion is compared with
/// the delay of the minute in which its delay timer started
/// (`ts_ms - delay_applied_s`).
pub fn replay_log(
    log: &SessionLog,
    params: ControllerParams,
    bands: StateBands,
) -> Result<ReplayReport, ControllerError> {
    let feedback = minute_feedback(log);
    let mut trace = Vec::with_capacity(feedback.len());
    if let Some(first) = feedback.first() {
        let mut controller = DelayController::new(first.state, params, bands)?;
        trace.push(controller.current_delay());
        for fb in &feedback[..feedback.len() - 1] {
            trace.push(controller.update(fb));
        }
    }

    let mut compared = 0;
    let mut max_abs_divergence: f64 = 0.0;
    let mut first_divergent_minute = None;
    for e in &log.events {
        let EventPayload::SuggestionShown {
            delay_applied_s, ..
        } = e.payload
        else {
            continue;
        };
        let delay_ms = (delay_applied_s * 1000.0).round() as u64;
        let minute = (e.ts_ms.saturating_sub(delay_ms) / MINUTE_MS) as usize;
        let Some(&expected) = trace.get(minute) else {
            continue;
        };
        compared += 1;
        let diff = (expected - delay_applied_s).abs();
        if diff > 0.0 && first_divergent_minute.is_none() {
            first_divergent_minute = Some(minute);
        }
        max_abs_divergence = max_abs_divergence.max(diff);
    }
    Ok(ReplayReport {
        trace,
        compared,
        max_abs_divergence,
        first_divergent_minute,
    })
}
