//! Adaptive suggestion-delay controller.
//!
//! Once per minute the controller turns acceptance feedback into a new
//! suggestion delay:
//!
//! ```text
//! A      = n_acc / (n_acc + n_rej)            (0 when no decisions)
//! S_raw  = L(gamma * (A - a0))                L(x) = 2 / (1 + e^-x) - 1
//! S_norm = 2 (S_raw - S0) / (S1 - S0) - 1     S0 = L(-gamma a0), S1 = L(gamma (1 - a0))
//! D_pred = D_base * (1 - K * S_norm)          K = (D_max - D_min) / (D_max + D_min)
//! D_new  = D_old + clip(D_pred - D_old, -cap, +cap)
//! ```
//!
//! `D_pred` always lies in the band `[D_min, D_max]` selected by the
//! developer state, hitting `D_max` at `A = 0` and `D_min` at `A = 1`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControllerError {
    #[error("invalid delay band: need 0 < d_min < d_max, got d_min={d_min}, d_max={d_max}")]
    InvalidBand { d_min: f64, d_max: f64 },
    #[error("invalid controller parameter {name}={value}: {reason}")]
    InvalidParam {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("unknown developer state {0:?} (expected \"implementing\" or \"debugging\")")]
    UnknownState(String),
}

/// High-level cognitive mode of the developer. Anchors the delay band.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum DeveloperState {
    #[default]
    Implementing,
    Debugging,
}

impl DeveloperState {
    pub const ALL: [DeveloperState; 2] = [DeveloperState::Implementing, DeveloperState::Debugging];

    pub fn as_str(self) -> &'static str {
        match self {
            DeveloperState::Implementing => "implementing",
            DeveloperState::Debugging => "debugging",
        }
    }
}

impl fmt::Display for DeveloperState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DeveloperState {
    type Err = ControllerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "implementing" => Ok(DeveloperState::Implementing),
            "debugging" => Ok(DeveloperState::Debugging),
            _ => Err(ControllerError::UnknownState(s.to_string())),
        }
    }
}

/// One value per developer state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PerState<T> {
    pub implementing: T,
    pub debugging: T,
}

impl<T> PerState<T> {
    pub fn new(implementing: T, debugging: T) -> Self {
        Self {
            implementing,
            debugging,
        }
    }

    pub fn get(&self, state: DeveloperState) -> &T {
        match state {
            DeveloperState::Implementing => &self.implementing,
            DeveloperState::Debugging => &self.debugging,
        }
    }

    pub fn get_mut(&mut self, state: DeveloperState) -> &mut T {
        match state {
            DeveloperState::Implementing => &mut self.implementing,
            DeveloperState::Debugging => &mut self.debugging,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(DeveloperState, &T) -> U) -> PerState<U> {
        PerState {
            implementing: f(DeveloperState::Implementing, &self.implementing),
            debugging: f(DeveloperState::Debugging, &self.debugging),
        }
    }
}

/// Per-state delay bounds in seconds. Base delay and gain are derived.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBand", into = "RawBand")]
pub struct DelayBand {
    d_min: f64,
    d_max: f64,
}

#[derive(Serialize, Deserialize)]
struct RawBand {
    d_min: f64,
    d_max: f64,
}

impl TryFrom<RawBand> for DelayBand {
    type Error = ControllerError;
    fn try_from(raw: RawBand) -> Result<Self, Self::Error> {
        DelayBand::new(raw.d_min, raw.d_max)
    }
}

impl From<DelayBand> for RawBand {
    fn from(band: DelayBand) -> Self {
        RawBand {
            d_min: band.d_min,
            d_max: band.d_max,
        }
    }
}

impl DelayBand {
    pub fn new(d_min: f64, d_max: f64) -> Result<Self, ControllerError> {
        if !(d_min.is_finite() && d_max.is_finite() && 0.0 < d_min && d_min < d_max) {
            return Err(ControllerError::InvalidBand { d_min, d_max });
        }
        Ok(Self { d_min, d_max })
    }

    pub fn d_min(&self) -> f64 {
        self.d_min
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    /// Band midpoint, the neutral delay.
    pub fn d_base(&self) -> f64 {
        (self.d_min + self.d_max) / 2.0
    }

    /// Dimensionless gain `(d_max - d_min) / (d_max + d_min)`, always in (0, 1).
    pub fn gain(&self) -> f64 {
        (self.d_max - self.d_min) / (self.d_max + self.d_min)
    }

    pub fn contains(&self, delay: f64) -> bool {
        self.d_min <= delay && delay <= self.d_max
    }
}

/// The deployed bands: implementing 0.80–1.40 s, debugging 1.00–1.60 s.
pub fn band_for_state(state: DeveloperState) -> DelayBand {
    match state {
        DeveloperState::Implementing => DelayBand {
            d_min: 0.80,
            d_max: 1.40,
        },
        DeveloperState::Debugging => DelayBand {
            d_min: 1.00,
            d_max: 1.60,
        },
    }
}

/// One band per developer state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateBands {
    pub implementing: DelayBand,
    pub debugging: DelayBand,
}

impl Default for StateBands {
    fn default() -> Self {
        Self {
            implementing: band_for_state(DeveloperState::Implementing),
            debugging: band_for_state(DeveloperState::Debugging),
        }
    }
}

impl StateBands {
    pub fn for_state(&self, state: DeveloperState) -> DelayBand {
        match state {
            DeveloperState::Implementing => self.implementing,
            DeveloperState::Debugging => self.debugging,
        }
    }

    /// `(min d_min, max d_max)` over all states.
    pub fn envelope(&self) -> (f64, f64) {
        (
            self.implementing.d_min.min(self.debugging.d_min),
            self.implementing.d_max.max(self.debugging.d_max),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControllerParams {
    /// Logistic steepness.
    pub gamma: f64,
    /// Acceptance rate at the logistic inflection point.
    pub a0: f64,
    /// Largest change of the delay per update, in seconds.
    pub smoothing_cap: f64,
    /// Feedback window length in seconds.
    pub update_period: f64,
    /// When false, minutes without any decided suggestion leave the delay unchanged
    /// instead of being treated as `A = 0`.
    pub idle_drift: bool,
}

impl Default for ControllerParams {
    fn default() -> Self {
        Self {
            gamma: 10.0,
            a0: 0.15,
            smoothing_cap: 0.10,
            update_period: 60.0,
            idle_drift: true,
        }
    }
}

impl ControllerParams {
    pub fn validate(&self) -> Result<(), ControllerError> {
        let bad = |name, value, reason| {
            Err(ControllerError::InvalidParam {
                name,
                value,
                reason,
            })
        };
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return bad("gamma", self.gamma, "must be positive");
        }
        if !(self.a0 > 0.0 && self.a0 < 1.0) {
            return bad("a0", self.a0, "must lie in (0, 1)");
        }
        if !(self.smoothing_cap.is_finite() && self.smoothing_cap > 0.0) {
            return bad("smoothing_cap", self.smoothing_cap, "must be positive");
        }
        if !(self.update_period.is_finite() && self.update_period > 0.0) {
            return bad("update_period", self.update_period, "must be positive");
        }
        Ok(())
    }
}

/// Acceptance feedback collected over one update window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MinuteFeedback {
    pub n_accepted: u32,
    pub n_rejected: u32,
    pub state: DeveloperState,
}

impl MinuteFeedback {
    pub fn new(state: DeveloperState, n_accepted: u32, n_rejected: u32) -> Self {
        Self {
            n_accepted,
            n_rejected,
            state,
        }
    }

    pub fn is_idle(&self) -> bool {
        self.n_accepted == 0 && self.n_rejected == 0
    }
}

pub fn acceptance_rate(feedback: &MinuteFeedback) -> f64 {
    let total = u64::from(feedback.n_accepted) + u64::from(feedback.n_rejected);
    if total == 0 {
        0.0
    } else {
        feedback.n_accepted as f64 / total as f64
    }
}

/// `2 / (1 + e^-x) - 1`, an odd, strictly increasing map onto (-1, 1).
pub fn scaled_logistic(x: f64) -> f64 {
    2.0 / (1.0 + (-x).exp()) - 1.0
}

/// Logistic score of the acceptance rate, rescaled so that `a = 0` maps to
/// exactly -1 and `a = 1` to exactly +1.
pub fn normalized_score(a: f64, params: &ControllerParams) -> f64 {
    let a = a.clamp(0.0, 1.0);
    let raw = |x: f64| scaled_logistic(params.gamma * (x - params.a0));
    let s0 = raw(0.0);
    let s1 = raw(1.0);
    2.0 * (raw(a) - s0) / (s1 - s0) - 1.0
}

/// Delay target for acceptance rate `a` within `band`.
pub fn predicted_delay(band: &DelayBand, a: f64, params: &ControllerParams) -> f64 {
    let score = normalized_score(a, params);
    let delay = band.d_base() * (1.0 - band.gain() * score);
    // Mathematically inside the band already; the clamp only absorbs rounding.
    delay.clamp(band.d_min, band.d_max)
}

/// Moves `d_old` toward `d_pred` by at most `cap`. Reaches the target exactly
/// when it is within `cap`.
pub fn smooth_step(d_old: f64, d_pred: f64, cap: f64) -> f64 {
    let delta = d_pred - d_old;
    if delta.abs() <= cap {
        d_pred
    } else {
        d_old + delta.clamp(-cap, cap)
    }
}

/// Controller state: the delay currently in force plus its tuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayController {
    current_delay: f64,
    params: ControllerParams,
    bands: StateBands,
}

impl DelayController {
    /// Starts at the base delay of `initial_state`'s band.
    pub fn new(
        initial_state: DeveloperState,
        params: ControllerParams,
        bands: StateBands,
    ) -> Result<Self, ControllerError> {
        let start = bands.for_state(initial_state).d_base();
        Self::with_delay(start, params, bands)
    }

    /// Starts from an explicit delay (e.g. one restored from a previous session).
    pub fn with_delay(
        current_delay: f64,
        params: ControllerParams,
        bands: StateBands,
    ) -> Result<Self, ControllerError> {
        params.validate()?;
        if !(current_delay.is_finite() && current_delay >= 0.0) {
            return Err(ControllerError::InvalidParam {
                name: "current_delay",
                value: current_delay,
                reason: "must be a finite, non-negative number of seconds",
            });
        }
        Ok(Self {
            current_delay,
            params,
            bands,
        })
    }

    pub fn current_delay(&self) -> f64 {
        self.current_delay
    }

    pub fn params(&self) -> &ControllerParams {
        &self.params
    }

    pub fn bands(&self) -> &StateBands {
        &self.bands
    }

    /// Delay target for `feedback` without applying it.
    pub fn target(&self, feedback: &MinuteFeedback) -> f64 {
        let band = self.bands.for_state(feedback.state);
        predicted_delay(&band, acceptance_rate(feedback), &self.params)
    }

    /// Applies one minute of feedback and returns the new delay.
    ///
    /// No clamping into the new band happens on a state switch; the delay
    /// walks toward it at the smoothing rate.
    pub fn update(&mut self, feedback: &MinuteFeedback) -> f64 {
        if feedback.is_idle() && !self.params.idle_drift {
            return self.current_delay;
        }
        let target = self.target(feedback);
        self.current_delay = smooth_step(self.current_delay, target, self.params.smoothing_cap);
        self.current_delay
    }
}
