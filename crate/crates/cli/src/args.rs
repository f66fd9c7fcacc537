use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pacebound_core::{ControllerParams, DeveloperState};

#[derive(Debug, Parser)]
#[command(
    name = "pacebound",
    version,
    about = "Adaptive suggestion timing: controller, simulation and analysis"
)]
pub struct Cli {
    /// RNG seed for commands that sample.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the command's output to this file instead of stdout
    /// (for `simulate`, the session log).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Tsv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Apply one minute of feedback to a delay.
    Step(StepArgs),
    /// Simulate a developer session under a suggestion policy.
    Simulate(SimulateArgs),
    /// Recompute the delay trace of a recorded session.
    Replay(ReplayArgs),
    /// Predicted delay as a function of the acceptance rate.
    Sweep(SweepArgs),
    /// Acceptance and blind-rejection statistics of session logs.
    Eval(EvalArgs),
    /// Per-state base delays from observed typing intervals.
    DeriveBase(DeriveBaseArgs),
    /// Statistics of the reference three-phase deployment.
    ReproduceTables,
    /// Run the HTTP service.
    Serve(ServeArgs),
}

fn parse_state(s: &str) -> Result<DeveloperState, String> {
    s.parse().map_err(|e| format!("{e}"))
}

#[derive(Debug, Clone, Args)]
pub struct ControllerArgs {
    /// Logistic steepness.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Acceptance rate mapped to the middle of the logistic.
    #[arg(long)]
    pub a0: Option<f64>,
    /// Largest delay change per update, in seconds.
    #[arg(long)]
    pub cap: Option<f64>,
    /// Hold the delay on minutes without decisions.
    #[arg(long)]
    pub no_idle_drift: bool,
}

impl ControllerArgs {
    pub fn apply(&self, mut p: ControllerParams) -> ControllerParams {
        if let Some(g) = self.gamma {
            p.gamma = g;
        }
        if let Some(a) = self.a0 {
            p.a0 = a;
        }
        if let Some(c) = self.cap {
            p.smoothing_cap = c;
        }
        if self.no_idle_drift {
            p.idle_drift = false;
        }
        p
    }

    pub fn is_set(&self) -> bool {
        self.gamma.is_some() || self.a0.is_some() || self.cap.is_some() || self.no_idle_drift
    }
}

#[derive(Debug, Args)]
pub struct StepArgs {
    #[arg(long, value_parser = parse_state)]
    pub state: DeveloperState,
    /// Suggestions accepted during the minute.
    #[arg(long, default_value_t = 0)]
    pub acc: u32,
    /// Suggestions rejected during the minute.
    #[arg(long, default_value_t = 0)]
    pub rej: u32,
    /// Delay in force before the update, in seconds.
    #[arg(long)]
    pub old: f64,
    #[command(flatten)]
    pub controller: ControllerArgs,
    /// Ask a running service instead of computing locally.
    #[arg(long, value_name = "URL")]
    pub server: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyKind {
    Nodelay,
    Static,
    Adaptive,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyKind>,
    /// Session length.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    pub minutes: Option<u32>,
    /// Delay of the static policy, in seconds.
    #[arg(long, default_value_t = 1.1)]
    pub static_delay: f64,
    #[command(flatten)]
    pub controller: ControllerArgs,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    pub log: PathBuf,
    /// Controller settings; default to those recorded in the log header.
    #[command(flatten)]
    pub controller: ControllerArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Number of evenly spaced acceptance rates in [0, 1].
    #[arg(long, default_value_t = 11, value_parser = clap::value_parser!(u32).range(2..))]
    pub points: u32,
    #[command(flatten)]
    pub controller: ControllerArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Session logs, one per phase, in phase order.
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    /// Rejections faster than this many seconds count as blind.
    #[arg(long, default_value_t = 0.3)]
    pub blind_threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IntervalSource {
    /// Minute speeds when the logs carry minute summaries, keystroke gaps otherwise.
    Auto,
    /// Inverse typing speed of each minute (0 < speed <= 5 keys/s).
    Minutes,
    /// Gaps between consecutive keystrokes shorter than the idle cutoff.
    Keystrokes,
}

#[derive(Debug, Args)]
pub struct DeriveBaseArgs {
    #[arg(required = true)]
    pub logs: Vec<PathBuf>,
    #[arg(long, default_value_t = 0.97)]
    pub percentile: f64,
    #[arg(long, value_enum, default_value_t = IntervalSource::Auto)]
    pub source: IntervalSource,
    /// Keystroke gaps at least this long (seconds) are pauses, not typing.
    #[arg(long, default_value_t = 3.0)]
    pub idle_cutoff: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    /// Directory for per-session event logs (overrides PACEBOUND_LOG_DIR).
    #[arg(long)]
    pub log_dir: Option<PathBuf>,
}
