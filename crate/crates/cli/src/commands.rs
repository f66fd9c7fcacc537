use std::fs;
use std::path::Path;

use anyhow::Context;
use pacebound_client::api::{CreateSessionRequest, MinuteRequest};
use pacebound_client::PaceboundClient;
use pacebound_core::evalstats::{
    blind_ratio_tests, blind_ratios, calls_per_accept, two_proportion_z, wald_estimate,
    PhaseCounts, TestResult, Z_95,
};
use pacebound_core::replay::{header_controller, replay_log};
use pacebound_core::report::deployment_report;
use pacebound_core::simulator::{simulate_session, sweep_delay_curve, PhasePolicy, SimConfig};
use pacebound_core::telemetry::{
    aggregate_minutes, derive_base_delays, keystroke_intervals, phase_counts, read_log,
    typing_intervals_by_state,
};
use pacebound_core::{
    ControllerParams, DelayController, DeveloperState, EventPayload, MinuteFeedback, PerState,
    SessionLog, StateBands,
};
use pacebound_server::ServerConfig;

use crate::args::*;
use crate::render::{columns, Report, Val};
use crate::Failure;

type Result<T> = std::result::Result<T, Failure>;

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

/// Writes `text` to `out` or stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(Failure::Runtime),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load(path: &Path) -> Result<SessionLog> {
    read_log(path)
        .with_context(|| format!("cannot read session log {}", path.display()))
        .map_err(Failure::Runtime)
}

pub fn step(cli: &Cli, args: &StepArgs) -> Result<()> {
    let params = args.controller.apply(ControllerParams::default());
    let delay = match &args.server {
        None => {
            let mut c = DelayController::with_delay(args.old, params, StateBands::default())
                .map_err(usage)?;
            c.update(&MinuteFeedback::new(args.state, args.acc, args.rej))
        }
        Some(url) => {
            let client =
                PaceboundClient::new(url.as_str()).map_err(|e| Failure::Runtime(e.into()))?;
            let run = || -> anyhow::Result<f64> {
                let id = client.create_session(&CreateSessionRequest {
                    state: Some(args.state),
                    initial_delay_s: Some(args.old),
                    params: Some(params),
                })?;
                let d = client
                    .post_minute(
                        &id,
                        &MinuteRequest::labelled(args.state, args.acc, args.rej),
                    )?
                    .delay_s;
                client.delete_session(&id)?;
                Ok(d)
            };
            run()
                .with_context(|| format!("service at {url}"))
                .map_err(Failure::Runtime)?
        }
    };
    let text = match cli.format {
        Format::Text => format!("delay_s={delay:.4}\n"),
        Format::Tsv => format!("delay_s\n{delay}\n"),
    };
    emit(cli.out.as_deref(), &text)
}

fn sim_config(cli: &Cli, args: &SimulateArgs) -> Result<SimConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))
                .map_err(Failure::Runtime)?;
            serde_json::from_str::<SimConfig>(&text)
                .map_err(|e| usage(format!("invalid config {}: {e}", path.display())))?
        }
        None => SimConfig {
            duration_minutes: 60,
            behavior: Default::default(),
            policy: PhasePolicy::adaptive(),
        },
    };
    if let Some(m) = args.minutes {
        config.duration_minutes = m;
    }
    if let Some(seed) = cli.seed {
        config.behavior.rng_seed = seed;
    }
    if let Some(kind) = args.policy {
        config.policy = match kind {
            PolicyKind::Nodelay => PhasePolicy::NoDelay,
            PolicyKind::Static => PhasePolicy::Static {
                delay_s: args.static_delay,
            },
            PolicyKind::Adaptive => PhasePolicy::adaptive(),
        };
    }
    if let PhasePolicy::Adaptive { params, .. } = &mut config.policy {
        *params = args.controller.apply(*params);
    } else if args.controller.is_set() {
        return Err(usage("controller flags only apply to the adaptive policy"));
    }
    config.validate().map_err(usage)?;
    Ok(config)
}

pub fn simulate(cli: &Cli, args: &SimulateArgs) -> Result<()> {
    let config = sim_config(cli, args)?;
    let result = simulate_session(&config).map_err(usage)?;
    if let Some(path) = &cli.out {
        pacebound_core::telemetry::write_log(&result.log, path)
            .with_context(|| format!("cannot write session log {}", path.display()))
            .map_err(Failure::Runtime)?;
    }
    let c = result.counts;
    let mut report = Report::default();
    let rows = report.section("simulation");
    rows.push((
        "session_id".into(),
        Val::Str(result.log.header.session_id.clone()),
    ));
    rows.push((
        "policy".into(),
        Val::Str(config.policy.phase().as_str().into()),
    ));
    rows.push(("seed".into(), Val::Int(config.behavior.rng_seed)));
    rows.push(("minutes".into(), Val::Int(config.duration_minutes.into())));
    rows.push(("events".into(), Val::Int(result.log.events.len() as u64)));
    rows.push(("mean_delay_s".into(), Val::Num(result.mean_delay(), 4)));
    counts_rows(rows, &c);
    print!("{}", report.render(cli.format));
    Ok(())
}

fn counts_rows(rows: &mut Vec<(String, Val)>, c: &PhaseCounts) {
    rows.push(("suggestions".into(), Val::Int(c.n_total)));
    rows.push(("accepted".into(), Val::Int(c.k_accepted)));
    rows.push(("rejected".into(), Val::Int(c.n_rejected())));
    rows.push(("blind_rejected".into(), Val::Int(c.n_blind)));
    match wald_estimate(c.n_total, c.k_accepted, Z_95) {
        Ok(r) => {
            rows.push(("acceptance_rate".into(), Val::Num(r.rate, 4)));
            rows.push(("acceptance_se".into(), Val::Num(r.se, 4)));
            rows.push(("acceptance_ci_low".into(), Val::Num(r.ci_low, 4)));
            rows.push(("acceptance_ci_high".into(), Val::Num(r.ci_high, 4)));
        }
        Err(_) => {
            for k in [
                "acceptance_rate",
                "acceptance_se",
                "acceptance_ci_low",
                "acceptance_ci_high",
            ] {
                rows.push((k.into(), Val::Missing));
            }
        }
    }
    match blind_ratios(c) {
        Ok(b) => {
            rows.push(("blind_per_reject".into(), Val::Num(b.per_reject, 4)));
            rows.push(("blind_per_suggest".into(), Val::Num(b.per_suggest, 4)));
        }
        Err(_) => {
            rows.push(("blind_per_reject".into(), Val::Missing));
            rows.push(("blind_per_suggest".into(), Val::Missing));
        }
    }
    rows.push((
        "calls_per_accept".into(),
        calls_per_accept(c).map_or(Val::Missing, |x| Val::Num(x, 2)),
    ));
}

pub fn replay(cli: &Cli, args: &ReplayArgs) -> Result<()> {
    let log = load(&args.log)?;
    let (params, bands) = match header_controller(&log) {
        Some(recorded) => recorded,
        None => {
            eprintln!("note: log header records no controller settings; using defaults");
            (ControllerParams::default(), StateBands::default())
        }
    };
    let params = args.controller.apply(params);
    let report = replay_log(&log, params, bands).map_err(usage)?;

    let mut out = Report::default();
    let rows = out.section("replay");
    rows.push(("session_id".into(), Val::Str(log.header.session_id.clone())));
    rows.push(("minutes".into(), Val::Int(report.trace.len() as u64)));
    rows.push(("compared".into(), Val::Int(report.compared as u64)));
    rows.push((
        "max_abs_divergence".into(),
        Val::Num(report.max_abs_divergence, 6),
    ));
    rows.push((
        "first_divergent_minute".into(),
        report
            .first_divergent_minute
            .map_or(Val::Str("none".into()), |m| Val::Int(m as u64)),
    ));
    let trace: Vec<Vec<f64>> = report
        .trace
        .iter()
        .enumerate()
        .map(|(m, d)| vec![m as f64, *d])
        .collect();
    let mut text = out.render(cli.format);
    text.push('\n');
    text.push_str(&columns(
        cli.format,
        &["minute", "delay_s"],
        &trace,
        &[0, 4],
    ));
    emit(cli.out.as_deref(), &text)
}

pub fn sweep(cli: &Cli, args: &SweepArgs) -> Result<()> {
    let params = args.controller.apply(ControllerParams::default());
    let n = args.points as usize;
    let grid: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let curves = sweep_delay_curve(&StateBands::default(), &params, &grid).map_err(usage)?;
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .enumerate()
        .map(|(i, a)| vec![*a, curves.implementing[i].1, curves.debugging[i].1])
        .collect();
    emit(
        cli.out.as_deref(),
        &columns(
            cli.format,
            &["acceptance", "implementing_s", "debugging_s"],
            &rows,
            &[2, 4, 4],
        ),
    )
}

pub fn eval(cli: &Cli, args: &EvalArgs) -> Result<()> {
    if !(args.blind_threshold.is_finite() && args.blind_threshold > 0.0) {
        return Err(usage("--blind-threshold must be positive"));
    }
    let mut report = Report::default();
    let mut all = Vec::new();
    for path in &args.logs {
        let log = load(path)?;
        let counts = phase_counts(&log, args.blind_threshold);
        let rows = report.section(path.display().to_string());
        rows.push(("session_id".into(), Val::Str(log.header.session_id.clone())));
        rows.push(("phase".into(), Val::Str(log.header.phase.as_str().into())));
        counts_rows(rows, &counts);
        all.push((path.display().to_string(), counts));
    }
    for pair in all.windows(2) {
        let ((a_name, a), (b_name, b)) = (&pair[0], &pair[1]);
        let rows = report.section(format!("{a_name} -> {b_name}"));
        test_rows(
            rows,
            "acceptance",
            two_proportion_z(a.n_total, a.k_accepted, b.n_total, b.k_accepted),
        );
        test_rows(rows, "blind_per_reject", blind_ratio_tests(a, b));
    }
    emit(cli.out.as_deref(), &report.render(cli.format))
}

fn test_rows(
    rows: &mut Vec<(String, Val)>,
    name: &str,
    result: std::result::Result<TestResult, pacebound_core::StatsError>,
) {
    match result {
        Ok(t) => {
            rows.push((
                format!("{name}_z"),
                t.z.map_or(Val::Missing, |z| Val::Num(z, 2)),
            ));
            rows.push((format!("{name}_p"), Val::Num(t.p_value, 4)));
        }
        Err(_) => {
            rows.push((format!("{name}_z"), Val::Missing));
            rows.push((format!("{name}_p"), Val::Missing));
        }
    }
}

pub fn derive_base(cli: &Cli, args: &DeriveBaseArgs) -> Result<()> {
    if !(args.percentile > 0.0 && args.percentile <= 1.0) {
        return Err(usage("--percentile must lie in (0, 1]"));
    }
    let logs = args
        .logs
        .iter()
        .map(|p| load(p))
        .collect::<Result<Vec<_>>>()?;
    let source = match args.source {
        IntervalSource::Auto => {
            let has_summaries = logs.iter().any(|l| {
                l.events
                    .iter()
                    .any(|e| matches!(e.payload, EventPayload::MinuteSummary(_)))
            });
            if has_summaries {
                IntervalSource::Minutes
            } else {
                IntervalSource::Keystrokes
            }
        }
        s => s,
    };
    let mut intervals: PerState<Vec<f64>> = PerState::default();
    for log in &logs {
        let found = match source {
            IntervalSource::Keystrokes => keystroke_intervals(log, args.idle_cutoff),
            _ => typing_intervals_by_state(&aggregate_minutes(log)),
        };
        for state in DeveloperState::ALL {
            intervals.get_mut(state).extend_from_slice(found.get(state));
        }
    }
    let base = derive_base_delays(&intervals, args.percentile)
        .map_err(|e| Failure::Runtime(anyhow::anyhow!("{e}")))?;
    let source_name = match source {
        IntervalSource::Keystrokes => "keystrokes",
        _ => "minutes",
    };
    let mut report = Report::default();
    let rows = report.section("base_delay");
    rows.push(("source".into(), Val::Str(source_name.into())));
    rows.push(("percentile".into(), Val::Num(args.percentile, 2)));
    for state in DeveloperState::ALL {
        rows.push((
            format!("{state}_intervals"),
            Val::Int(intervals.get(state).len() as u64),
        ));
        rows.push((format!("{state}_s"), Val::Num(*base.get(state), 4)));
    }
    emit(cli.out.as_deref(), &report.render(cli.format))
}

pub fn reproduce_tables(cli: &Cli) -> Result<()> {
    let r = deployment_report();
    let text = match cli.format {
        Format::Text => r.to_text(),
        Format::Tsv => r.to_tsv(),
    };
    emit(cli.out.as_deref(), &text)
}

pub fn serve(args: &ServeArgs) -> Result<()> {
    let mut config = ServerConfig::from_env();
    if let Some(dir) = &args.log_dir {
        config.log_dir = Some(dir.clone());
    }
    let rt = tokio::runtime::Runtime::new()
        .context("cannot start async runtime")
        .map_err(Failure::Runtime)?;
    rt.block_on(pacebound_server::serve(args.bind, config))
        .map_err(|e| Failure::Runtime(e.into()))?;
    Ok(())
}
