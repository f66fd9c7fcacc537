//! Session logs and the measurements derived from them.
//!
//! A session log is JSON Lines: a header object followed by one event per
//! line, timestamps in integer milliseconds since session start.
//!
//! ```text
//! {"schema":"pacebound-log","version":1,"session_id":"s1","phase":"adaptive"}
//! {"ts_ms":0,"kind":"state_label","state":"implementing"}
//! {"ts_ms":412,"kind":"keystroke"}
//! {"ts_ms":1512,"kind":"suggestion_shown","suggestion_id":"s1-0","delay_applied_s":1.1}
//! {"ts_ms":1530,"kind":"suggestion_rejected","suggestion_id":"s1-0","decision_time_s":0.018}
//! ```
//!
//! Fields the reader does not know are kept and written back after the known
//! ones, so logs round-trip without loss.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::controller::{DeveloperState, MinuteFeedback, PerState};
use crate::evalstats::PhaseCounts;

pub const LOG_SCHEMA: &str = "pacebound-log";
pub const LOG_VERSION: u64 = 1;

/// Rejections decided faster than this are taken as unread.
pub const BLIND_THRESHOLD_S: f64 = 0.3;

/// Gaps between activity at least this long count as idle time and are not
/// treated as typing intervals.
pub const IDLE_GAP_S: f64 = 3.0;

pub const MINUTE_MS: u64 = 60_000;

#[derive(Debug, Error)]
pub enum LogError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("line {line}: timestamp {ts_ms} ms precedes previous event at {previous_ms} ms")]
    Ordering {
        line: usize,
        previous_ms: u64,
        ts_ms: u64,
    },
    #[error("line {line}: decision for suggestion {suggestion_id:?} that was never shown")]
    UnknownSuggestion { line: usize, suggestion_id: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TelemetryError {
    #[error("no typing intervals for state {0}")]
    EmptyState(DeveloperState),
    #[error("percentile must lie in (0, 1], got {0}")]
    BadPercentile(f64),
    #[error("suggestion {0:?} was accepted; only rejections can be classified")]
    NotRejected(String),
}

/// Which suggestion-triggering regime produced a log.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    NoDelay,
    Static,
    Adaptive,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::NoDelay => "no_delay",
            Phase::Static => "static",
            Phase::Adaptive => "adaptive",
        }
    }
}

/// Per-minute IDE activity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinuteSummary {
    pub minute_index: u64,
    pub typing_speed_cps: f64,
    pub keystroke_count: u64,
    pub edit_count: u64,
    pub navigation_count: u64,
    pub command_count: u64,
    pub idle_seconds: f64,
    /// Labelled state; defaults to implementing when posted unlabelled.
    #[serde(default)]
    pub state: DeveloperState,
}

impl MinuteSummary {
    pub fn empty(minute_index: u64, state: DeveloperState) -> Self {
        Self {
            minute_index,
            typing_speed_cps: 0.0,
            keystroke_count: 0,
            edit_count: 0,
            navigation_count: 0,
            command_count: 0,
            idle_seconds: 0.0,
            state,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EventPayload {
    Keystroke,
    SuggestionShown {
        suggestion_id: String,
        delay_applied_s: f64,
    },
    SuggestionAccepted {
        suggestion_id: String,
        decision_time_s: Option<f64>,
    },
    SuggestionRejected {
        suggestion_id: String,
        decision_time_s: Option<f64>,
    },
    StateLabel {
        state: DeveloperState,
    },
    MinuteSummary(MinuteSummary),
}

impl EventPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::Keystroke => "keystroke",
            EventPayload::SuggestionShown { .. } => "suggestion_shown",
            EventPayload::SuggestionAccepted { .. } => "suggestion_accepted",
            EventPayload::SuggestionRejected { .. } => "suggestion_rejected",
            EventPayload::StateLabel { .. } => "state_label",
            EventPayload::MinuteSummary(_) => "minute_summary",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub ts_ms: u64,
    pub payload: EventPayload,
    /// Fields not understood by this reader, in input order.
    pub extra: Map<String, Value>,
}

impl Event {
    pub fn new(ts_ms: u64, payload: EventPayload) -> Self {
        Self {
            ts_ms,
            payload,
            extra: Map::new(),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("ts_ms".into(), self.ts_ms.into());
        m.insert("kind".into(), self.payload.kind().into());
        match &self.payload {
            EventPayload::Keystroke => {}
            EventPayload::SuggestionShown {
                suggestion_id,
                delay_applied_s,
            } => {
                m.insert("suggestion_id".into(), suggestion_id.clone().into());
                m.insert("delay_applied_s".into(), number(*delay_applied_s));
            }
            EventPayload::SuggestionAccepted {
                suggestion_id,
                decision_time_s,
            }
            | EventPayload::SuggestionRejected {
                suggestion_id,
                decision_time_s,
            } => {
                m.insert("suggestion_id".into(), suggestion_id.clone().into());
                if let Some(t) = decision_time_s {
                    m.insert("decision_time_s".into(), number(*t));
                }
            }
            EventPayload::StateLabel { state } => {
                m.insert("state".into(), state.as_str().into());
            }
            EventPayload::MinuteSummary(s) => {
                m.insert("minute_index".into(), s.minute_index.into());
                m.insert("typing_speed_cps".into(), number(s.typing_speed_cps));
                m.insert("keystroke_count".into(), s.keystroke_count.into());
                m.insert("edit_count".into(), s.edit_count.into());
                m.insert("navigation_count".into(), s.navigation_count.into());
                m.insert("command_count".into(), s.command_count.into());
                m.insert("idle_seconds".into(), number(s.idle_seconds));
                m.insert("state".into(), s.state.as_str().into());
            }
        }
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    /// Parses one event object. Errors are plain messages; callers attach
    /// line numbers.
    pub fn from_value(value: Value) -> Result<Self, String> {
        let Value::Object(mut m) = value else {
            return Err("event must be a JSON object".into());
        };
        let ts_ms = take_u64(&mut m, "ts_ms")?;
        let kind = take_string(&mut m, "kind")?;
        let payload = match kind.as_str() {
            "keystroke" => EventPayload::Keystroke,
            "suggestion_shown" => EventPayload::SuggestionShown {
                suggestion_id: take_string(&mut m, "suggestion_id")?,
                delay_applied_s: take_f64(&mut m, "delay_applied_s")?,
            },
            "suggestion_accepted" => EventPayload::SuggestionAccepted {
                suggestion_id: take_string(&mut m, "suggestion_id")?,
                decision_time_s: take_opt_f64(&mut m, "decision_time_s")?,
            },
            "suggestion_rejected" => EventPayload::SuggestionRejected {
                suggestion_id: take_string(&mut m, "suggestion_id")?,
                decision_time_s: take_opt_f64(&mut m, "decision_time_s")?,
            },
            "state_label" => EventPayload::StateLabel {
                state: take_state(&mut m, "state")?,
            },
            "minute_summary" => EventPayload::MinuteSummary(MinuteSummary {
                minute_index: take_u64(&mut m, "minute_index")?,
                typing_speed_cps: take_f64(&mut m, "typing_speed_cps")?,
                keystroke_count: take_u64(&mut m, "keystroke_count")?,
                edit_count: take_u64(&mut m, "edit_count")?,
                navigation_count: take_u64(&mut m, "navigation_count")?,
                command_count: take_u64(&mut m, "command_count")?,
                idle_seconds: take_f64(&mut m, "idle_seconds")?,
                state: take_state(&mut m, "state")?,
            }),
            other => return Err(format!("unknown event kind {other:?}")),
        };
        if let EventPayload::MinuteSummary(s) = &payload {
            if s.typing_speed_cps < 0.0 {
                return Err("typing_speed_cps must be non-negative".into());
            }
            if !(0.0..=60.0).contains(&s.idle_seconds) {
                return Err("idle_seconds must lie in [0, 60]".into());
            }
        }
        Ok(Self {
            ts_ms,
            payload,
            extra: m,
        })
    }

    pub fn to_json_line(&self) -> String {
        self.to_value().to_string()
    }
}

fn number(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

fn take(m: &mut Map<String, Value>, key: &str) -> Result<Value, String> {
    m.remove(key)
        .ok_or_else(|| format!("missing field {key:?}"))
}

fn take_u64(m: &mut Map<String, Value>, key: &str) -> Result<u64, String> {
    take(m, key)?
        .as_u64()
        .ok_or_else(|| format!("field {key:?} must be a non-negative integer"))
}

fn take_f64(m: &mut Map<String, Value>, key: &str) -> Result<f64, String> {
    let v = take(m, key)?
        .as_f64()
        .ok_or_else(|| format!("field {key:?} must be a number"))?;
    if v < 0.0 {
        return Err(format!("field {key:?} must be non-negative"));
    }
    Ok(v)
}

fn take_opt_f64(m: &mut Map<String, Value>, key: &str) -> Result<Option<f64>, String> {
    if m.contains_key(key) {
        take_f64(m, key).map(Some)
    } else {
        Ok(None)
    }
}

fn take_string(m: &mut Map<String, Value>, key: &str) -> Result<String, String> {
    match take(m, key)? {
        Value::String(s) => Ok(s),
        _ => Err(format!("field {key:?} must be a string")),
    }
}

fn take_state(m: &mut Map<String, Value>, key: &str) -> Result<DeveloperState, String> {
    take_string(m, key)?.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogHeader {
    pub session_id: String,
    pub phase: Phase,
    pub extra: Map<String, Value>,
}

impl LogHeader {
    pub fn new(session_id: impl Into<String>, phase: Phase) -> Self {
        Self {
            session_id: session_id.into(),
            phase,
            extra: Map::new(),
        }
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("schema".into(), LOG_SCHEMA.into());
        m.insert("version".into(), LOG_VERSION.into());
        m.insert("session_id".into(), self.session_id.clone().into());
        m.insert("phase".into(), self.phase.as_str().into());
        for (k, v) in &self.extra {
            m.insert(k.clone(), v.clone());
        }
        Value::Object(m)
    }

    fn from_value(value: Value) -> Result<Self, String> {
        let Value::Object(mut m) = value else {
            return Err("header must be a JSON object".into());
        };
        let schema = take_string(&mut m, "schema")?;
        if schema != LOG_SCHEMA {
            return Err(format!("unsupported schema {schema:?}"));
        }
        let version = take_u64(&mut m, "version")?;
        if version != LOG_VERSION {
            return Err(format!("unsupported version {version}"));
        }
        let session_id = take_string(&mut m, "session_id")?;
        let phase = serde_json::from_value(take(&mut m, "phase")?)
            .map_err(|_| "phase must be one of no_delay, static, adaptive".to_string())?;
        Ok(Self {
            session_id,
            phase,
            extra: m,
        })
    }
}

/// A header plus time-ordered events.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub events: Vec<Event>,
}

/// Incremental validator for the ordering and reference invariants.
#[derive(Debug, Default, Clone)]
pub struct LogValidator {
    last_ts: Option<u64>,
    shown: HashSet<String>,
}

impl LogValidator {
    pub fn check(&mut self, event: &Event, line: usize) -> Result<(), LogError> {
        if let Some(prev) = self.last_ts {
            if event.ts_ms < prev {
                return Err(LogError::Ordering {
                    line,
                    previous_ms: prev,
                    ts_ms: event.ts_ms,
                });
            }
        }
        match &event.payload {
            EventPayload::SuggestionShown { suggestion_id, .. } => {
                self.shown.insert(suggestion_id.clone());
            }
            EventPayload::SuggestionAccepted { suggestion_id, .. }
            | EventPayload::SuggestionRejected { suggestion_id, .. }
                if !self.shown.contains(suggestion_id) =>
            {
                return Err(LogError::UnknownSuggestion {
                    line,
                    suggestion_id: suggestion_id.clone(),
                });
            }
            _ => {}
        }
        self.last_ts = Some(event.ts_ms);
        Ok(())
    }
}

impl SessionLog {
    pub fn new(header: LogHeader) -> Self {
        Self {
            header,
            events: Vec::new(),
        }
    }

    /// Checks ordering and suggestion references. Line numbers count the
    /// header as line 1.
    pub fn validate(&self) -> Result<(), LogError> {
        let mut v = LogValidator::default();
        for (i, e) in self.events.iter().enumerate() {
            v.check(e, i + 2)?;
        }
        Ok(())
    }

    pub fn parse<R: BufRead>(reader: R) -> Result<Self, LogError> {
        let mut header = None;
        let mut events = Vec::new();
        let mut validator = LogValidator::default();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(&line).map_err(|e| LogError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
            if header.is_none() {
                header =
                    Some(
                        LogHeader::from_value(value).map_err(|message| LogError::Schema {
                            line: line_no,
                            message,
                        })?,
                    );
                continue;
            }
            let event = Event::from_value(value).map_err(|message| LogError::Schema {
                line: line_no,
                message,
            })?;
            validator.check(&event, line_no)?;
            events.push(event);
        }
        let header = header.ok_or_else(|| LogError::Schema {
            line: 1,
            message: "missing header line".into(),
        })?;
        Ok(Self { header, events })
    }

    pub fn parse_str(text: &str) -> Result<Self, LogError> {
        Self::parse(text.as_bytes())
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header.to_value())?;
        for e in &self.events {
            writeln!(w, "{}", e.to_json_line())?;
        }
        w.flush()
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

pub fn read_log(path: impl AsRef<Path>) -> Result<SessionLog, LogError> {
    let file = File::open(path)?;
    SessionLog::parse(BufReader::new(file))
}

pub fn write_log(log: &SessionLog, path: impl AsRef<Path>) -> Result<(), LogError> {
    let file = File::create(path)?;
    log.write_to(BufWriter::new(file))?;
    Ok(())
}

fn minute_of(ts_ms: u64) -> usize {
    (ts_ms / MINUTE_MS) as usize
}

/// One summary per started minute.
///
/// Keystroke counts and typing speed come from keystroke events (speed is
/// keystrokes per 60 s). Edit, navigation and command counts and idle time come
/// from a recorded `minute_summary` event when the minute has one; otherwise
/// idle time is the total of keystroke gaps of at least [`IDLE_GAP_S`]
/// within the minute and the other counts are zero. The state is the last
/// state label at or before the end of the minute, falling back to a recorded
/// summary's state and then to implementing.
pub fn aggregate_minutes(log: &SessionLog) -> Vec<MinuteSummary> {
    let Some(last) = log.events.last() else {
        return Vec::new();
    };
    let n = minute_of(last.ts_ms) + 1;
    let mut keys: Vec<Vec<u64>> = vec![Vec::new(); n];
    let mut labels: Vec<Option<DeveloperState>> = vec![None; n];
    let mut recorded: Vec<Option<&MinuteSummary>> = vec![None; n];
    for e in &log.events {
        let m = minute_of(e.ts_ms);
        match &e.payload {
            EventPayload::Keystroke => keys[m].push(e.ts_ms),
            EventPayload::StateLabel { state } => labels[m] = Some(*state),
            EventPayload::MinuteSummary(s) => recorded[m] = Some(s),
            _ => {}
        }
    }

    let mut current: Option<DeveloperState> = None;
    let mut out = Vec::with_capacity(n);
    for m in 0..n {
        if labels[m].is_some() {
            current = labels[m];
        }
        let state = current.or(recorded[m].map(|s| s.state)).unwrap_or_default();
        let mut s = MinuteSummary::empty(m as u64, state);
        let k = &keys[m];
        if let Some(r) = recorded[m] {
            s.edit_count = r.edit_count;
            s.navigation_count = r.navigation_count;
            s.command_count = r.command_count;
            s.idle_seconds = r.idle_seconds;
            if k.is_empty() {
                s.keystroke_count = r.keystroke_count;
                s.typing_speed_cps = r.typing_speed_cps;
            }
        } else {
            s.idle_seconds = idle_seconds(k, m as u64);
        }
        if !k.is_empty() {
            s.keystroke_count = k.len() as u64;
            s.typing_speed_cps = k.len() as f64 / 60.0;
        }
        out.push(s);
    }
    out
}

fn idle_seconds(keys: &[u64], minute: u64) -> f64 {
    let start = minute * MINUTE_MS;
    let end = start + MINUTE_MS;
    let idle_ms = (IDLE_GAP_S * 1000.0) as u64;
    let mut points = Vec::with_capacity(keys.len() + 2);
    points.push(start);
    points.extend_from_slice(keys);
    points.push(end);
    let idle: u64 = points
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|&gap| gap >= idle_ms)
        .sum();
    (idle as f64 / 1000.0).clamp(0.0, 60.0)
}

/// Inverse average typing speed of each minute typed at 0 < speed ≤ 5 cps.
pub fn typing_intervals(summaries: &[MinuteSummary]) -> Vec<f64> {
    summaries
        .iter()
        .filter(|s| s.typing_speed_cps > 0.0 && s.typing_speed_cps <= 5.0)
        .map(|s| 1.0 / s.typing_speed_cps)
        .collect()
}

/// Gaps between consecutive keystrokes grouped by the state of the minute of
/// the later keystroke. Gaps of `idle_cutoff_s` or more are dropped as
/// non-typing pauses.
pub fn keystroke_intervals(log: &SessionLog, idle_cutoff_s: f64) -> PerState<Vec<f64>> {
    let states: Vec<DeveloperState> = aggregate_minutes(log).iter().map(|s| s.state).collect();
    let mut out: PerState<Vec<f64>> = PerState::default();
    let mut prev: Option<u64> = None;
    for e in &log.events {
        if !matches!(e.payload, EventPayload::Keystroke) {
            continue;
        }
        if let Some(p) = prev {
            let gap = (e.ts_ms - p) as f64 / 1000.0;
            if gap > 0.0 && gap < idle_cutoff_s {
                out.get_mut(states[minute_of(e.ts_ms)]).push(gap);
            }
        }
        prev = Some(e.ts_ms);
    }
    out
}

/// Minute summaries' typing intervals grouped by state.
pub fn typing_intervals_by_state(summaries: &[MinuteSummary]) -> PerState<Vec<f64>> {
    let mut out: PerState<Vec<f64>> = PerState::default();
    for s in summaries {
        out.get_mut(s.state)
            .extend(typing_intervals(std::slice::from_ref(s)));
    }
    out
}

/// Nearest-rank percentile: the `ceil(p·n)`-th smallest value.
pub fn percentile_nearest_rank(values: &[f64], percentile: f64) -> Option<f64> {
    if values.is_empty() || !(percentile > 0.0 && percentile <= 1.0) {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    // The epsilon keeps p·n that is an integer up to rounding (0.97·100) on that integer.
    let rank = ((percentile * n as f64 - 1e-9).ceil() as usize).clamp(1, n);
    Some(sorted[rank - 1])
}

/// Per-state base delays as the given percentile of the typing intervals.
pub fn derive_base_delays(
    intervals_by_state: &PerState<Vec<f64>>,
    percentile: f64,
) -> Result<PerState<f64>, TelemetryError> {
    if !(percentile > 0.0 && percentile <= 1.0) {
        return Err(TelemetryError::BadPercentile(percentile));
    }
    let pick = |state| {
        percentile_nearest_rank(intervals_by_state.get(state), percentile)
            .ok_or(TelemetryError::EmptyState(state))
    };
    Ok(PerState::new(
        pick(DeveloperState::Implementing)?,
        pick(DeveloperState::Debugging)?,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Accepted,
    Rejected,
}

/// A shown suggestion together with its decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuggestionRecord {
    pub suggestion_id: String,
    pub delay_applied_s: f64,
    pub outcome: Outcome,
    pub decision_time_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectionKind {
    Blind,
    Read,
}

/// Blind iff the rejection came strictly faster than `threshold_s`.
pub fn classify_rejection(
    record: &SuggestionRecord,
    threshold_s: f64,
) -> Result<RejectionKind, TelemetryError> {
    if record.outcome != Outcome::Rejected {
        return Err(TelemetryError::NotRejected(record.suggestion_id.clone()));
    }
    Ok(if record.decision_time_s < threshold_s {
        RejectionKind::Blind
    } else {
        RejectionKind::Read
    })
}

/// Decided suggestions in decision order. Decision time falls back to the
/// gap between the shown and decision events when not recorded.
pub fn suggestion_records(log: &SessionLog) -> Vec<SuggestionRecord> {
    let mut shown: HashMap<&str, (u64, f64)> = HashMap::new();
    let mut out = Vec::new();
    for e in &log.events {
        let (id, time, outcome) = match &e.payload {
            EventPayload::SuggestionShown {
                suggestion_id,
                delay_applied_s,
            } => {
                shown.insert(suggestion_id, (e.ts_ms, *delay_applied_s));
                continue;
            }
            EventPayload::SuggestionAccepted {
                suggestion_id,
                decision_time_s,
            } => (suggestion_id, decision_time_s, Outcome::Accepted),
            EventPayload::SuggestionRejected {
                suggestion_id,
                decision_time_s,
            } => (suggestion_id, decision_time_s, Outcome::Rejected),
            _ => continue,
        };
        let Some(&(shown_ts, delay)) = shown.get(id.as_str()) else {
            continue;
        };
        out.push(SuggestionRecord {
            suggestion_id: id.clone(),
            delay_applied_s: delay,
            outcome,
            decision_time_s: time.unwrap_or((e.ts_ms.saturating_sub(shown_ts)) as f64 / 1000.0),
        });
    }
    out
}

/// Phase counts of a log. Every shown suggestion counts toward the total;
/// shown suggestions without an acceptance count as rejections.
pub fn phase_counts(log: &SessionLog, threshold_s: f64) -> PhaseCounts {
    let n_total = log
        .events
        .iter()
        .filter(|e| matches!(e.payload, EventPayload::SuggestionShown { .. }))
        .count() as u64;
    let mut accepted = 0;
    let mut blind = 0;
    for r in suggestion_records(log) {
        match classify_rejection(&r, threshold_s) {
            Ok(RejectionKind::Blind) => blind += 1,
            Ok(RejectionKind::Read) => {}
            Err(_) => accepted += 1,
        }
    }
    PhaseCounts {
        n_total,
        k_accepted: accepted,
        n_blind: blind,
    }
}

/// Acceptance feedback for every minute of the log, attributed by the
/// minute of the decision event, with the minute's state.
pub fn minute_feedback(log: &SessionLog) -> Vec<MinuteFeedback> {
    let mut out: Vec<MinuteFeedback> = aggregate_minutes(log)
        .iter()
        .map(|s| MinuteFeedback::new(s.state, 0, 0))
        .collect();
    for e in &log.events {
        let m = minute_of(e.ts_ms);
        match e.payload {
            EventPayload::SuggestionAccepted { .. } => out[m].n_accepted += 1,
            EventPayload::SuggestionRejected { .. } => out[m].n_rejected += 1,
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> LogHeader {
        LogHeader::new("t", Phase::Adaptive)
    }

    fn key(ts: u64) -> Event {
        Event::new(ts, EventPayload::Keystroke)
    }

    fn shown(ts: u64, id: &str, d: f64) -> Event {
        Event::new(
            ts,
            EventPayload::SuggestionShown {
                suggestion_id: id.into(),
                delay_applied_s: d,
            },
        )
    }

    fn rejected(ts: u64, id: &str, t: Option<f64>) -> Event {
        Event::new(
            ts,
            EventPayload::SuggestionRejected {
                suggestion_id: id.into(),
                decision_time_s: t,
            },
        )
    }

    fn accepted(ts: u64, id: &str, t: Option<f64>) -> Event {
        Event::new(
            ts,
            EventPayload::SuggestionAccepted {
                suggestion_id: id.into(),
                decision_time_s: t,
            },
        )
    }

    fn label(ts: u64, state: DeveloperState) -> Event {
        Event::new(ts, EventPayload::StateLabel { state })
    }

    #[test]
    fn empty_log_has_no_minutes() {
        assert!(aggregate_minutes(&SessionLog::new(header())).is_empty());
    }

    #[test]
    fn uniform_typing_gives_two_cps() {
        let mut log = SessionLog::new(header());
        log.events = (0..120).map(|i| key(i * 500)).collect();
        let mins = aggregate_minutes(&log);
        assert_eq!(mins.len(), 1);
        assert_eq!(mins[0].typing_speed_cps, 2.0);
        assert_eq!(mins[0].keystroke_count, 120);
        assert_eq!(mins[0].idle_seconds, 0.0);
    }

    #[test]
    fn minutes_partition_keystrokes() {
        let mut log = SessionLog::new(header());
        let ts: Vec<u64> = vec![10, 20, 59_999, 60_000, 61_000, 150_000, 179_999];
        log.events = ts.iter().map(|&t| key(t)).collect();
        let mins = aggregate_minutes(&log);
        assert_eq!(mins.len(), 3);
        // Independent recount by scanning the raw timestamps.
        for (m, s) in mins.iter().enumerate() {
            let want = ts.iter().filter(|&&t| t / 60_000 == m as u64).count() as u64;
            assert_eq!(s.keystroke_count, want);
        }
        assert_eq!(mins.iter().map(|s| s.keystroke_count).sum::<u64>(), 7);
        // Minute 2: 30 s before the first keystroke, 29.999 s between the two.
        assert!((mins[2].idle_seconds - 59.999).abs() < 1e-9);
    }

    #[test]
    fn labels_carry_forward_and_recorded_summaries_fill_counts() {
        let mut log = SessionLog::new(header());
        let mut rec = MinuteSummary::empty(1, DeveloperState::Implementing);
        rec.navigation_count = 4;
        rec.idle_seconds = 12.5;
        log.events = vec![
            label(0, DeveloperState::Debugging),
            key(100),
            Event::new(61_000, EventPayload::MinuteSummary(rec)),
            key(62_000),
        ];
        let mins = aggregate_minutes(&log);
        assert_eq!(mins[1].state, DeveloperState::Debugging);
        assert_eq!(mins[1].navigation_count, 4);
        assert_eq!(mins[1].idle_seconds, 12.5);
        assert_eq!(mins[1].keystroke_count, 1);
    }

    #[test]
    fn typing_interval_filter() {
        let mk = |cps| {
            let mut s = MinuteSummary::empty(0, DeveloperState::Implementing);
            s.typing_speed_cps = cps;
            s
        };
        let got = typing_intervals(&[mk(2.0), mk(0.0), mk(6.0), mk(5.0)]);
        assert_eq!(got, vec![0.5, 0.2]);
    }

    #[test]
    fn nearest_rank_percentile() {
        let v: Vec<f64> = (1..=100).map(|i| i as f64 / 100.0).collect();
        // Oracle: sort, take index ceil(0.97*100) - 1 = 96.
        let mut sorted = v.clone();
        sorted.reverse();
        assert_eq!(percentile_nearest_rank(&sorted, 0.97), Some(0.97));
        assert_eq!(percentile_nearest_rank(&[0.5], 0.97), Some(0.5));
        assert_eq!(percentile_nearest_rank(&[], 0.97), None);
        assert_eq!(percentile_nearest_rank(&v, 1.0), Some(1.0));
        assert_eq!(percentile_nearest_rank(&v, 0.001), Some(0.01));
    }

    #[test]
    fn derive_base_delays_errors_name_state() {
        let input = PerState::new(vec![0.5], vec![]);
        assert_eq!(
            derive_base_delays(&input, 0.97),
            Err(TelemetryError::EmptyState(DeveloperState::Debugging))
        );
        assert_eq!(
            derive_base_delays(&PerState::new(vec![1.0], vec![1.0]), 0.0),
            Err(TelemetryError::BadPercentile(0.0))
        );
        let ok = derive_base_delays(&PerState::new(vec![0.5], vec![0.7, 0.9]), 0.97).unwrap();
        assert_eq!((ok.implementing, ok.debugging), (0.5, 0.9));
    }

    #[test]
    fn rejection_classification() {
        let rec = |outcome, t| SuggestionRecord {
            suggestion_id: "x".into(),
            delay_applied_s: 1.0,
            outcome,
            decision_time_s: t,
        };
        assert_eq!(
            classify_rejection(&rec(Outcome::Rejected, 0.1), BLIND_THRESHOLD_S),
            Ok(RejectionKind::Blind)
        );
        assert_eq!(
            classify_rejection(&rec(Outcome::Rejected, 0.3), BLIND_THRESHOLD_S),
            Ok(RejectionKind::Read)
        );
        assert_eq!(
            classify_rejection(&rec(Outcome::Rejected, 2.0), BLIND_THRESHOLD_S),
            Ok(RejectionKind::Read)
        );
        assert!(classify_rejection(&rec(Outcome::Accepted, 0.1), BLIND_THRESHOLD_S).is_err());
    }

    #[test]
    fn decision_time_falls_back_to_timestamps() {
        let mut log = SessionLog::new(header());
        log.events = vec![
            shown(1000, "a", 1.0),
            rejected(1150, "a", None),
            shown(2000, "b", 1.0),
            accepted(3000, "b", Some(0.9)),
            shown(4000, "c", 1.0),
        ];
        let recs = suggestion_records(&log);
        assert_eq!(recs.len(), 2);
        assert!((recs[0].decision_time_s - 0.15).abs() < 1e-12);
        assert_eq!(recs[1].decision_time_s, 0.9);
        let c = phase_counts(&log, BLIND_THRESHOLD_S);
        assert_eq!((c.n_total, c.k_accepted, c.n_blind), (3, 1, 1));
        assert_eq!(c.n_rejected(), 2);
    }

    #[test]
    fn minute_feedback_attributes_by_decision_minute() {
        let mut log = SessionLog::new(header());
        log.events = vec![
            label(0, DeveloperState::Implementing),
            shown(59_900, "a", 1.0),
            accepted(60_100, "a", Some(0.2)),
            label(60_000 + 200, DeveloperState::Debugging),
        ];
        let fb = minute_feedback(&log);
        assert_eq!(fb.len(), 2);
        assert_eq!(
            fb[0],
            MinuteFeedback::new(DeveloperState::Implementing, 0, 0)
        );
        assert_eq!(fb[1], MinuteFeedback::new(DeveloperState::Debugging, 1, 0));
    }

    #[test]
    fn round_trip_keeps_unknown_fields() {
        let text = concat!(
            r#"{"schema":"pacebound-log","version":1,"session_id":"s","phase":"static","editor":"vim"}"#,
            "\n",
            r#"{"ts_ms":5,"kind":"keystroke","key":"a"}"#,
            "\n",
            r#"{"ts_ms":9,"kind":"suggestion_shown","suggestion_id":"q","delay_applied_s":1.1,"model":{"name":"m"}}"#,
            "\n",
            r#"{"ts_ms":900,"kind":"suggestion_accepted","suggestion_id":"q"}"#,
            "\n",
        );
        let log = SessionLog::parse_str(text).unwrap();
        assert_eq!(log.header.extra["editor"], "vim");
        assert_eq!(log.events[0].extra["key"], "a");
        assert_eq!(log.to_jsonl(), text);
        assert_eq!(SessionLog::parse_str(&log.to_jsonl()).unwrap(), log);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.jsonl");
        let mut log = SessionLog::new(header());
        log.events = vec![
            label(0, DeveloperState::Debugging),
            key(3),
            shown(10, "a", 0.8),
        ];
        write_log(&log, &path).unwrap();
        assert_eq!(read_log(&path).unwrap(), log);
    }

    #[test]
    fn decreasing_timestamps_rejected() {
        let text = "{\"schema\":\"pacebound-log\",\"version\":1,\"session_id\":\"s\",\"phase\":\"static\"}\n\
                    {\"ts_ms\":50,\"kind\":\"keystroke\"}\n\
                    {\"ts_ms\":40,\"kind\":\"keystroke\"}\n";
        match SessionLog::parse_str(text) {
            Err(LogError::Ordering { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn truncated_line_names_line_number() {
        let text = "{\"schema\":\"pacebound-log\",\"version\":1,\"session_id\":\"s\",\"phase\":\"static\"}\n\
                    {\"ts_ms\":50,\"kind\":\"keystroke\"}\n\
                    {\"ts_ms\":60,\"kind\":\"keys";
        match SessionLog::parse_str(text) {
            Err(LogError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schema_violations() {
        let head = "{\"schema\":\"pacebound-log\",\"version\":1,\"session_id\":\"s\",\"phase\":\"static\"}\n";
        for bad in [
            "{\"ts_ms\":1,\"kind\":\"teleport\"}",
            "{\"ts_ms\":-1,\"kind\":\"keystroke\"}",
            "{\"ts_ms\":1.5,\"kind\":\"keystroke\"}",
            "{\"kind\":\"keystroke\"}",
            "{\"ts_ms\":1,\"kind\":\"state_label\",\"state\":\"testing\"}",
            "{\"ts_ms\":1,\"kind\":\"suggestion_shown\",\"suggestion_id\":\"a\"}",
        ] {
            match SessionLog::parse_str(&format!("{head}{bad}\n")) {
                Err(LogError::Schema { line, .. }) => assert_eq!(line, 2, "{bad}"),
                other => panic!("{bad}: {other:?}"),
            }
        }
        assert!(matches!(
            SessionLog::parse_str("{\"schema\":\"other\",\"version\":1}\n"),
            Err(LogError::Schema { line: 1, .. })
        ));
        assert!(matches!(
            SessionLog::parse_str(""),
            Err(LogError::Schema { .. })
        ));
    }

    #[test]
    fn decision_without_shown_rejected() {
        let head = "{\"schema\":\"pacebound-log\",\"version\":1,\"session_id\":\"s\",\"phase\":\"static\"}\n";
        let text = format!(
            "{head}{{\"ts_ms\":1,\"kind\":\"suggestion_rejected\",\"suggestion_id\":\"zz\"}}\n"
        );
        assert!(matches!(
            SessionLog::parse_str(&text),
            Err(LogError::UnknownSuggestion { line: 2, .. })
        ));
    }

    #[test]
    fn keystroke_intervals_skip_idle_gaps() {
        let mut log = SessionLog::new(header());
        log.events = vec![
            label(0, DeveloperState::Implementing),
            key(0),
            key(400),
            key(5_000),
            key(5_300),
            label(60_000, DeveloperState::Debugging),
            key(60_500),
            key(61_000),
        ];
        let got = keystroke_intervals(&log, IDLE_GAP_S);
        assert_eq!(got.implementing, vec![0.4, 0.3]);
        assert_eq!(got.debugging, vec![0.5]);
    }
}
