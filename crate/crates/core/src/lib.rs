//! Feedback-driven suggestion timing for code assistants.
//!
//! - [`controller`]: the bounded, smoothed adaptive delay controller.
//! - [`telemetry`]: session logs, minute aggregation, base-delay derivation.
//! - [`stateinfer`]: implementing/debugging classification.
//! - [`simulator`]: closed-loop developer-session simulation.
//! - [`evalstats`]: rates, z-tests, Fisher's exact test, cost model.
//! - [`replay`]: recompute a recorded session's delay trace.
//! - [`report`]: the reference deployment counts and their statistics.

pub mod controller;
pub mod evalstats;
pub mod replay;
pub mod report;
pub mod simulator;
pub mod stateinfer;
pub mod telemetry;

pub use controller::{
    acceptance_rate, band_for_state, normalized_score, predicted_delay, scaled_logistic,
    smooth_step, ControllerError, ControllerParams, DelayBand, DelayController, DeveloperState,
    MinuteFeedback, PerState, StateBands,
};
pub use evalstats::{PhaseCounts, RateEstimate, StatsError, TestResult, Usd};
pub use telemetry::{Event, EventPayload, LogError, MinuteSummary, Phase, SessionLog};
