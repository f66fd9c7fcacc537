//! Binary developer-state classification from one minute of activity.
//!
//! Two implementations share the [`StateClassifier`] contract: a transparent
//! linear heuristic over the minute summary, and (in `pacebound-client`) a
//! remote LLM classifier that sends [`build_prompt`] and reads the reply
//! with [`parse_state_response`], falling back to the heuristic on failure.

use serde::{Deserialize, Serialize};

use crate::controller::DeveloperState;
use crate::telemetry::MinuteSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassificationSource {
    Heuristic,
    Remote,
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub state: DeveloperState,
    /// In [0, 1].
    pub confidence: f64,
    pub source: ClassificationSource,
}

pub trait StateClassifier {
    /// Must return a state for every summary.
    fn classify(&self, summary: &MinuteSummary, diff: Option<&str>) -> ClassificationResult;
}

/// `score = w_nav·navigation + w_cmd·commands + w_idle·idle/60 - w_typing·cps`;
/// debugging when `score > threshold`, implementing otherwise (ties included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicWeights {
    pub navigation: f64,
    pub command: f64,
    pub idle: f64,
    pub typing: f64,
    pub threshold: f64,
}

impl Default for HeuristicWeights {
    fn default() -> Self {
        Self {
            navigation: 1.0,
            command: 1.0,
            idle: 1.0,
            typing: 1.0,
            threshold: 1.0,
        }
    }
}

impl HeuristicWeights {
    pub fn score(&self, s: &MinuteSummary) -> f64 {
        self.navigation * s.navigation_count as f64
            + self.command * s.command_count as f64
            + self.idle * (s.idle_seconds / 60.0)
            - self.typing * s.typing_speed_cps
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct HeuristicClassifier {
    pub weights: HeuristicWeights,
}

impl HeuristicClassifier {
    pub fn new(weights: HeuristicWeights) -> Self {
        Self { weights }
    }
}

impl StateClassifier for HeuristicClassifier {
    fn classify(&self, summary: &MinuteSummary, _diff: Option<&str>) -> ClassificationResult {
        classify_with(&self.weights, summary)
    }
}

pub fn classify_heuristic(summary: &MinuteSummary) -> ClassificationResult {
    classify_with(&HeuristicWeights::default(), summary)
}

fn classify_with(weights: &HeuristicWeights, summary: &MinuteSummary) -> ClassificationResult {
    let score = weights.score(summary);
    let state = if score > weights.threshold {
        DeveloperState::Debugging
    } else {
        DeveloperState::Implementing
    };
    let distance = (score - weights.threshold).abs();
    // NaN scores (non-finite inputs) land on implementing with zero confidence.
    let confidence = if distance.is_finite() {
        1.0 - (-distance).exp()
    } else {
        0.0
    };
    ClassificationResult {
        state,
        confidence: confidence.clamp(0.0, 1.0),
        source: ClassificationSource::Heuristic,
    }
}

pub const NO_DIFF_MARKER: &str = "(no code changes)";

/// Prompt for the remote classifier. Deterministic in its inputs.
pub fn build_prompt(summary: &MinuteSummary, diff: &str) -> String {
    let diff = if diff.trim().is_empty() {
        NO_DIFF_MARKER
    } else {
        diff
    };
    format!(
        "You are classifying what a software developer was doing during one minute in their IDE.\n\
         \n\
         Activity during minute {minute}:\n\
         - typing speed: {cps} characters per second\n\
         - keystrokes: {keys}\n\
         - file edits: {edits}\n\
         - navigation actions: {nav}\n\
         - commands run: {cmds}\n\
         - idle time: {idle} seconds\n\
         \n\
         Code changes (diff):\n\
         {diff}\n\
         \n\
         Was the developer implementing (writing or extending code) or debugging \
         (inspecting, diagnosing or searching for the cause of a problem)?\n\
         Answer with exactly one word: \"implementing\" or \"debugging\".",
        minute = summary.minute_index,
        cps = summary.typing_speed_cps,
        keys = summary.keystroke_count,
        edits = summary.edit_count,
        nav = summary.navigation_count,
        cmds = summary.command_count,
        idle = summary.idle_seconds,
    )
}

/// Finds exactly one of "implementing" / "debugging", case-insensitively.
pub fn parse_state_response(text: &str) -> Option<DeveloperState> {
    let lower = text.to_lowercase();
    match (lower.contains("implementing"), lower.contains("debugging")) {
        (true, false) => Some(DeveloperState::Implementing),
        (false, true) => Some(DeveloperState::Debugging),
        _ => None,
    }
}
