//! Discrete-event simulation of a developer session under a suggestion
//! timing policy.
//!
//! Time advances keystroke by keystroke in integer milliseconds. After each
//! keystroke a pause is sampled; a suggestion fires once the pause outlasts
//! the policy delay, and the developer either rejects it blind (typing
//! resumes before it could be read), reads and accepts it, or reads and
//! rejects it. The adaptive policy updates its controller at every minute
//! boundary from the decisions made during that minute.
//!
//! Runs are reproducible from `rng_seed`: pauses, responses and state
//! switches draw from separate ChaCha8 streams of the same seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::controller::{
    predicted_delay, ControllerError, ControllerParams, DelayController, DeveloperState,
    MinuteFeedback, PerState, StateBands,
};
use crate::evalstats::PhaseCounts;
use crate::telemetry::{
    Event, EventPayload, LogHeader, Phase, SessionLog, BLIND_THRESHOLD_S, MINUTE_MS,
};

/// Generator used for every random draw, recorded in log headers.
pub const RNG_ALGORITHM: &str = "chacha8";

/// 97th percentile of the standard normal distribution.
pub const Z_97: f64 = 1.880_793_608_151_251;

const PAUSE_STREAM: u64 = 1;
const RESPONSE_STREAM: u64 = 2;
const STATE_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid behavior model: {0}")]
    InvalidModel(String),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("acceptance grid value {0} outside [0, 1]")]
    GridOutOfRange(f64),
    #[error(transparent)]
    Controller(#[from] ControllerError),
}

/// `(mu, sigma)` of a log-normal whose 97th percentile is `target_p97_s`.
pub fn calibrate_pauses(target_p97_s: f64, sigma: f64) -> Result<(f64, f64), SimError> {
    if !(target_p97_s.is_finite() && target_p97_s > 0.0) {
        return Err(SimError::InvalidModel(format!(
            "calibration target must be positive, got {target_p97_s}"
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(SimError::InvalidModel(format!(
            "sigma must be non-negative, got {sigma}"
        )));
    }
    Ok((target_p97_s.ln() - Z_97 * sigma, sigma))
}

/// Pause after a keystroke. Most pauses are in-burst typing gaps drawn from
/// the calibrated log-normal; with probability `think_prob` the developer
/// instead stops to think for a log-normal pause around `think_median_s`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PauseModel {
    pub mu: f64,
    pub sigma: f64,
    pub think_prob: f64,
    pub think_median_s: f64,
    pub think_sigma: f64,
}

impl PauseModel {
    pub fn calibrated(target_p97_s: f64, sigma: f64) -> Result<Self, SimError> {
        let (mu, sigma) = calibrate_pauses(target_p97_s, sigma)?;
        Ok(Self {
            mu,
            sigma,
            think_prob: 0.0,
            think_median_s: 6.0,
            think_sigma: 0.3,
        })
    }

    pub fn with_thinking(mut self, prob: f64, median_s: f64, sigma: f64) -> Self {
        self.think_prob = prob;
        self.think_median_s = median_s;
        self.think_sigma = sigma;
        self
    }

    /// Analytic 97th percentile of the typing-gap component.
    pub fn typing_p97(&self) -> f64 {
        (self.mu + Z_97 * self.sigma).exp()
    }

    fn validate(&self, state: DeveloperState) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidModel(format!("{state} pauses: {what}")));
        if !self.mu.is_finite() {
            return bad("mu must be finite");
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return bad("sigma must be positive");
        }
        if !(0.0..=1.0).contains(&self.think_prob) {
            return bad("think_prob must lie in [0, 1]");
        }
        if !(self.think_median_s.is_finite() && self.think_median_s > 0.0) {
            return bad("think_median_s must be positive");
        }
        if !(self.think_sigma.is_finite() && self.think_sigma > 0.0) {
            return bad("think_sigma must be positive");
        }
        Ok(())
    }

    fn typing_dist(&self) -> LogNormal<f64> {
        LogNormal::new(self.mu, self.sigma).expect("validated log-normal parameters")
    }

    fn think_dist(&self) -> LogNormal<f64> {
        LogNormal::new(self.think_median_s.ln(), self.think_sigma)
            .expect("validated log-normal parameters")
    }

    /// Draws from the typing-gap component only.
    pub fn sample_typing<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.typing_dist().sample(rng)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.think_prob > 0.0 && rng.random::<f64>() < self.think_prob {
            self.think_dist().sample(rng)
        } else {
            self.typing_dist().sample(rng)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BehaviorModel {
    pub pauses: PerState<PauseModel>,
    /// How long a suggestion must stay visible before it can be read.
    pub read_latency_s: f64,
    /// Acceptance probability of a suggestion that was read.
    pub accept_prob: PerState<f64>,
    /// Mean time between developer state switches.
    pub state_dwell_s: f64,
    pub rng_seed: u64,
}

impl Default for BehaviorModel {
    /// Typing gaps calibrated to 97th percentiles of 1.068 s (implementing)
    /// and 1.293 s (debugging) with sigma 0.6.
    fn default() -> Self {
        let implementing = PauseModel::calibrated(1.068, 0.6)
            .expect("positive target")
            .with_thinking(0.06, 6.0, 0.3);
        let debugging = PauseModel::calibrated(1.293, 0.6)
            .expect("positive target")
            .with_thinking(0.10, 6.0, 0.3);
        Self {
            pauses: PerState::new(implementing, debugging),
            read_latency_s: 0.4,
            accept_prob: PerState::new(0.15, 0.10),
            state_dwell_s: 600.0,
            rng_seed: 42,
        }
    }
}

impl BehaviorModel {
    pub fn validate(&self) -> Result<(), SimError> {
        for state in DeveloperState::ALL {
            self.pauses.get(state).validate(state)?;
            let p = *self.accept_prob.get(state);
            if !(0.0..=1.0).contains(&p) {
                return Err(SimError::InvalidModel(format!(
                    "{state} accept_prob must lie in [0, 1], got {p}"
                )));
            }
        }
        if !(self.read_latency_s.is_finite() && self.read_latency_s > 0.0) {
            return Err(SimError::InvalidModel(
                "read_latency_s must be positive".into(),
            ));
        }
        if !(self.state_dwell_s.is_finite() && self.state_dwell_s > 0.0) {
            return Err(SimError::InvalidModel(
                "state_dwell_s must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// When suggestions are triggered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum PhasePolicy {
    /// A suggestion after every keystroke.
    NoDelay,
    /// A suggestion once a pause reaches a fixed delay.
    Static { delay_s: f64 },
    /// A suggestion once a pause reaches the controller's current delay.
    Adaptive {
        #[serde(default)]
        params: ControllerParams,
        #[serde(default)]
        bands: StateBands,
    },
}

impl PhasePolicy {
    pub fn adaptive() -> Self {
        PhasePolicy::Adaptive {
            params: ControllerParams::default(),
            bands: StateBands::default(),
        }
    }

    pub fn phase(&self) -> Phase {
        match self {
            PhasePolicy::NoDelay => Phase::NoDelay,
            PhasePolicy::Static { .. } => Phase::Static,
            PhasePolicy::Adaptive { .. } => Phase::Adaptive,
        }
    }

    fn validate(&self) -> Result<(), SimError> {
        match self {
            PhasePolicy::NoDelay => Ok(()),
            PhasePolicy::Static { delay_s } if delay_s.is_finite() && *delay_s >= 0.0 => Ok(()),
            PhasePolicy::Static { delay_s } => Err(SimError::InvalidConfig(format!(
                "static delay must be non-negative, got {delay_s}"
            ))),
            PhasePolicy::Adaptive { params, .. } => Ok(params.validate()?),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub duration_minutes: u32,
    #[serde(default)]
    pub behavior: BehaviorModel,
    pub policy: PhasePolicy,
}

impl SimConfig {
    pub fn new(
        duration_minutes: u32,
        behavior: BehaviorModel,
        policy: PhasePolicy,
    ) -> Result<Self, SimError> {
        let config = Self {
            duration_minutes,
            behavior,
            policy,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.duration_minutes < 1 {
            return Err(SimError::InvalidConfig(
                "duration_minutes must be at least 1".into(),
            ));
        }
        self.behavior.validate()?;
        self.policy.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub log: SessionLog,
    /// Delay in force during each simulated minute (0 for the no-delay policy).
    pub delay_trace: Vec<f64>,
    pub counts: PhaseCounts,
}

impl SimResult {
    pub fn mean_delay(&self) -> f64 {
        if self.delay_trace.is_empty() {
            return 0.0;
        }
        self.delay_trace.iter().sum::<f64>() / self.delay_trace.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseOutcome {
    Accepted,
    Rejected,
    BlindRejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeveloperResponse {
    pub outcome: ResponseOutcome,
    pub decision_time_s: f64,
}

/// How the developer reacts to a suggestion that leaves `pause_remaining_s`
/// of the current pause.
///
/// Too little time left to read it: blind rejection within 0.3 s. Otherwise
/// the suggestion is read (decision after at least 0.3 s and the read
/// latency) and accepted with the state's `accept_prob`.
pub fn developer_response<R: Rng + ?Sized>(
    model: &BehaviorModel,
    pause_remaining_s: f64,
    state: DeveloperState,
    rng: &mut R,
) -> DeveloperResponse {
    let remaining_ms = secs_to_ms(pause_remaining_s.max(0.0));
    let (outcome, ms) = respond_ms(model, remaining_ms, state, rng);
    DeveloperResponse {
        outcome,
        decision_time_s: ms as f64 / 1000.0,
    }
}

fn respond_ms<R: Rng + ?Sized>(
    model: &BehaviorModel,
    remaining_ms: u64,
    state: DeveloperState,
    rng: &mut R,
) -> (ResponseOutcome, u64) {
    let blind_ms = secs_to_ms(BLIND_THRESHOLD_S);
    let read_ms = secs_to_ms(model.read_latency_s);
    if remaining_ms < read_ms {
        let upper = blind_ms.min(remaining_ms);
        let t = if upper == 0 {
            0
        } else {
            rng.random_range(0..upper)
        };
        return (ResponseOutcome::BlindRejected, t);
    }
    let lo = blind_ms.max(read_ms);
    let hi = lo.max(remaining_ms);
    let t = rng.random_range(lo..=hi);
    if rng.random::<f64>() < *model.accept_prob.get(state) {
        (ResponseOutcome::Accepted, t)
    } else {
        (ResponseOutcome::Rejected, t)
    }
}

fn secs_to_ms(s: f64) -> u64 {
    (s * 1000.0).round() as u64
}

/// Evaluates the predicted delay over `a_grid` for both states.
pub fn sweep_delay_curve(
    bands: &StateBands,
    params: &ControllerParams,
    a_grid: &[f64],
) -> Result<PerState<Vec<(f64, f64)>>, SimError> {
    if let Some(&bad) = a_grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(SimError::GridOutOfRange(bad));
    }
    params.validate()?;
    let curve = |state| {
        let band = bands.for_state(state);
        a_grid
            .iter()
            .map(|&a| (a, predicted_delay(&band, a, params)))
            .collect()
    };
    Ok(PerState::new(
        curve(DeveloperState::Implementing),
        curve(DeveloperState::Debugging),
    ))
}

/// `n` typing gaps from the calibrated component for `state`.
pub fn sample_typing_intervals(model: &BehaviorModel, state: DeveloperState, n: usize) -> Vec<f64> {
    let mut rng = stream(model.rng_seed, PAUSE_STREAM);
    let pauses = model.pauses.get(state);
    (0..n).map(|_| pauses.sample_typing(&mut rng)).collect()
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

struct Session<'a> {
    config: &'a SimConfig,
    end_ms: u64,
    events: Vec<Event>,
    minute: u64,
    state: DeveloperState,
    dwell_left: u64,
    controller: Option<DelayController>,
    decisions: Vec<(u32, u32)>,
    trace: Vec<f64>,
    state_rng: ChaCha8Rng,
}

impl Session<'_> {
    fn delay(&self) -> f64 {
        match (&self.config.policy, &self.controller) {
            (_, Some(c)) => c.current_delay(),
            (PhasePolicy::Static { delay_s }, None) => *delay_s,
            _ => 0.0,
        }
    }

    fn dwell_minutes(&mut self) -> u64 {
        let exp = Exp::new(1.0 / self.config.behavior.state_dwell_s).expect("positive rate");
        let minutes = (exp.sample(&mut self.state_rng) / 60.0).round() as u64;
        minutes.max(1)
    }

    fn emit(&mut self, ts_ms: u64, payload: EventPayload) {
        self.events.push(Event::new(ts_ms, payload));
    }

    /// Processes every minute boundary up to `ts_ms` that falls inside the session.
    fn advance_to(&mut self, ts_ms: u64) {
        let last_minute = u64::from(self.config.duration_minutes) - 1;
        while ts_ms / MINUTE_MS > self.minute && self.minute < last_minute {
            let (acc, rej) = self
                .decisions
                .get(self.minute as usize)
                .copied()
                .unwrap_or((0, 0));
            if let Some(c) = self.controller.as_mut() {
                c.update(&MinuteFeedback::new(self.state, acc, rej));
            }
            self.minute += 1;
            self.dwell_left -= 1;
            if self.dwell_left == 0 {
                self.state = match self.state {
                    DeveloperState::Implementing => DeveloperState::Debugging,
                    DeveloperState::Debugging => DeveloperState::Implementing,
                };
                self.dwell_left = self.dwell_minutes();
            }
            let delay = self.delay();
            self.trace.push(delay);
            let state = self.state;
            self.emit(self.minute * MINUTE_MS, EventPayload::StateLabel { state });
        }
    }

    fn record_decision(&mut self, ts_ms: u64, accepted: bool) {
        let m = (ts_ms / MINUTE_MS) as usize;
        if self.decisions.len() <= m {
            self.decisions.resize(m + 1, (0, 0));
        }
        if accepted {
            self.decisions[m].0 += 1;
        } else {
            self.decisions[m].1 += 1;
        }
    }
}

/// Runs one session. Identical configs produce identical results.
pub fn simulate_session(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let behavior = &config.behavior;
    let seed = behavior.rng_seed;
    let phase = config.policy.phase();
    let session_id = format!("sim-{seed}-{}", phase.as_str());

    let mut header = LogHeader::new(session_id.clone(), phase);
    header.extra.insert("rng".into(), RNG_ALGORITHM.into());
    header.extra.insert("seed".into(), seed.into());
    header
        .extra
        .insert("duration_minutes".into(), config.duration_minutes.into());
    match &config.policy {
        PhasePolicy::Static { delay_s } => {
            header.extra.insert("static_delay_s".into(), json!(delay_s));
        }
        PhasePolicy::Adaptive { params, bands } => {
            header.extra.insert(
                "controller".into(),
                json!({ "params": params, "bands": bands }),
            );
        }
        PhasePolicy::NoDelay => {}
    }

    let initial_state = DeveloperState::Implementing;
    let controller = match &config.policy {
        PhasePolicy::Adaptive { params, bands } => {
            Some(DelayController::new(initial_state, *params, *bands)?)
        }
        _ => None,
    };

    let mut sim = Session {
        config,
        end_ms: u64::from(config.duration_minutes) * MINUTE_MS,
        events: Vec::new(),
        minute: 0,
        state: initial_state,
        dwell_left: 0,
        controller,
        decisions: Vec::new(),
        trace: Vec::with_capacity(config.duration_minutes as usize),
        state_rng: stream(seed, STATE_STREAM),
    };
    sim.dwell_left = sim.dwell_minutes();
    let first_delay = sim.delay();
    sim.trace.push(first_delay);
    sim.emit(
        0,
        EventPayload::StateLabel {
            state: initial_state,
        },
    );

    let mut pause_rng = stream(seed, PAUSE_STREAM);
    let mut response_rng = stream(seed, RESPONSE_STREAM);
    let mut counts = PhaseCounts {
        n_total: 0,
        k_accepted: 0,
        n_blind: 0,
    };
    let fire_always = matches!(config.policy, PhasePolicy::NoDelay);

    let mut t = 0u64;
    while t < sim.end_ms {
        sim.advance_to(t);
        sim.emit(t, EventPayload::Keystroke);
        let state = sim.state;
        let delay_s = sim.delay();
        let delay_ms = secs_to_ms(delay_s);
        let pause_ms = secs_to_ms(behavior.pauses.get(state).sample(&mut pause_rng)).max(1);
        let mut next = t + pause_ms;

        let shown_ts = t + delay_ms;
        if (fire_always || pause_ms > delay_ms) && shown_ts < sim.end_ms {
            sim.advance_to(shown_ts);
            let suggestion_id = format!("{session_id}-{}", counts.n_total);
            sim.emit(
                shown_ts,
                EventPayload::SuggestionShown {
                    suggestion_id: suggestion_id.clone(),
                    delay_applied_s: delay_s,
                },
            );
            counts.n_total += 1;

            let (outcome, decision_ms) =
                respond_ms(behavior, pause_ms - delay_ms, state, &mut response_rng);
            let decision_ts = shown_ts + decision_ms;
            sim.advance_to(decision_ts);
            let decision_time_s = Some(decision_ms as f64 / 1000.0);
            let payload = match outcome {
                ResponseOutcome::Accepted => {
                    counts.k_accepted += 1;
                    EventPayload::SuggestionAccepted {
                        suggestion_id,
                        decision_time_s,
                    }
                }
                ResponseOutcome::Rejected | ResponseOutcome::BlindRejected => {
                    if outcome == ResponseOutcome::BlindRejected {
                        counts.n_blind += 1;
                    }
                    EventPayload::SuggestionRejected {
                        suggestion_id,
                        decision_time_s,
                    }
                }
            };
            sim.emit(decision_ts, payload);
            sim.record_decision(decision_ts, outcome == ResponseOutcome::Accepted);
            next = next.max(decision_ts);
        }
        t = next;
    }
    // Sessions with trailing silence still report every minute.
    sim.advance_to(sim.end_ms - 1);

    let mut log = SessionLog::new(header);
    log.events = sim.events;
    Ok(SimResult {
        log,
        delay_trace: sim.trace,
        counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::telemetry::phase_counts;

    #[test]
    fn calibration_hits_target_percentile() {
        for target in [1.068, 1.293] {
            let (mu, sigma) = calibrate_pauses(target, 0.6).unwrap();
            assert!(((mu + Z_97 * sigma).exp() - target).abs() < 1e-9);
        }
        let (mu, _) = calibrate_pauses(1.068, 0.0).unwrap();
        assert_eq!(mu, 1.068f64.ln());
        assert!(calibrate_pauses(0.0, 0.6).is_err());
        assert!(calibrate_pauses(-1.0, 0.6).is_err());
    }

    #[test]
    fn z97_matches_normal_quantile() {
        // Inverse check through the CDF.
        let p = crate::evalstats::normal_cdf(Z_97);
        assert!((p - 0.97).abs() < 1e-7);
        assert!((Z_97 - 1.8808).abs() < 1e-4);
    }

    #[test]
    fn responses() {
        let mut rng = stream(1, 9);
        let model = BehaviorModel::default();
        for _ in 0..200 {
            let r = developer_response(&model, 0.1, DeveloperState::Implementing, &mut rng);
            assert_eq!(r.outcome, ResponseOutcome::BlindRejected);
            assert!(r.decision_time_s < 0.3);
        }
        let always = BehaviorModel {
            accept_prob: PerState::new(1.0, 1.0),
            ..BehaviorModel::default()
        };
        let r = developer_response(&always, 5.0, DeveloperState::Debugging, &mut rng);
        assert_eq!(r.outcome, ResponseOutcome::Accepted);
        let never = BehaviorModel {
            accept_prob: PerState::new(0.0, 0.0),
            ..BehaviorModel::default()
        };
        for _ in 0..200 {
            let r = developer_response(&never, 5.0, DeveloperState::Implementing, &mut rng);
            assert_eq!(r.outcome, ResponseOutcome::Rejected);
            assert!(r.decision_time_s >= 0.3 && r.decision_time_s <= 5.0);
        }
    }

    #[test]
    fn zero_minutes_rejected() {
        let err = SimConfig::new(0, BehaviorModel::default(), PhasePolicy::NoDelay);
        assert!(matches!(err, Err(SimError::InvalidConfig(_))));
        assert!(SimConfig::new(
            1,
            BehaviorModel::default(),
            PhasePolicy::Static { delay_s: -1.0 }
        )
        .is_err());
    }

    #[test]
    fn model_validation() {
        let m = BehaviorModel {
            read_latency_s: 0.0,
            ..BehaviorModel::default()
        };
        assert!(m.validate().is_err());
        let mut m = BehaviorModel::default();
        m.accept_prob.debugging = 1.5;
        assert!(m.validate().is_err());
        let mut m = BehaviorModel::default();
        m.pauses.implementing.sigma = 0.0;
        assert!(m.validate().is_err());
    }

    #[test]
    fn runs_are_deterministic() {
        let cfg = SimConfig::new(20, BehaviorModel::default(), PhasePolicy::adaptive()).unwrap();
        let a = simulate_session(&cfg).unwrap();
        let b = simulate_session(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.log.to_jsonl(), b.log.to_jsonl());
        let mut other = cfg.clone();
        other.behavior.rng_seed = 7;
        assert_ne!(simulate_session(&other).unwrap().log, a.log);
    }

    #[test]
    fn counts_match_log_and_log_is_valid() {
        for policy in [
            PhasePolicy::NoDelay,
            PhasePolicy::Static { delay_s: 1.1 },
            PhasePolicy::adaptive(),
        ] {
            let cfg = SimConfig::new(30, BehaviorModel::default(), policy).unwrap();
            let r = simulate_session(&cfg).unwrap();
            r.log.validate().unwrap();
            assert_eq!(r.counts, phase_counts(&r.log, BLIND_THRESHOLD_S));
            assert_eq!(r.delay_trace.len(), 30);
            assert!(r.counts.n_total > 0);
        }
    }

    #[test]
    fn adaptive_trace_is_bounded_and_smooth() {
        let cfg = SimConfig::new(120, BehaviorModel::default(), PhasePolicy::adaptive()).unwrap();
        let r = simulate_session(&cfg).unwrap();
        for w in r.delay_trace.windows(2) {
            assert!((w[1] - w[0]).abs() <= 0.10 + 1e-12);
        }
        assert!(r.delay_trace.iter().all(|d| (0.80..=1.60).contains(d)));
    }

    #[test]
    fn no_delay_blinds_more_than_static_with_short_pauses() {
        let cfg = |policy| SimConfig::new(60, BehaviorModel::default(), policy).unwrap();
        let nd = simulate_session(&cfg(PhasePolicy::NoDelay)).unwrap().counts;
        let st = simulate_session(&cfg(PhasePolicy::Static { delay_s: 1.1 }))
            .unwrap()
            .counts;
        let ratio = |c: PhaseCounts| c.n_blind as f64 / c.n_total as f64;
        assert!(ratio(nd) > ratio(st));
    }

    #[test]
    fn sweep_endpoints() {
        let s = sweep_delay_curve(
            &StateBands::default(),
            &ControllerParams::default(),
            &[0.0, 0.15, 1.0],
        )
        .unwrap();
        assert!((s.implementing[0].1 - 1.40).abs() < 1e-9);
        assert!((s.implementing[2].1 - 0.80).abs() < 1e-9);
        assert!((s.implementing[1].1 - 1.1669).abs() < 1e-3);
        assert!((s.debugging[0].1 - 1.60).abs() < 1e-9);
        assert!((s.debugging[2].1 - 1.00).abs() < 1e-9);
        assert_eq!(
            sweep_delay_curve(&StateBands::default(), &ControllerParams::default(), &[1.2]),
            Err(SimError::GridOutOfRange(1.2))
        );
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg = SimConfig::new(5, BehaviorModel::default(), PhasePolicy::adaptive()).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: SimConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let minimal: SimConfig = serde_json::from_str(
            r#"{"duration_minutes":3,"policy":{"policy":"static","delay_s":0.9}}"#,
        )
        .unwrap();
        assert_eq!(minimal.policy, PhasePolicy::Static { delay_s: 0.9 });
    }
}
