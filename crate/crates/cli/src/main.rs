mod args;
mod commands;
mod render;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit 2 for bad input, 1 for everything else.
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Step(a) => commands::step(&cli, a),
        Command::Simulate(a) => commands::simulate(&cli, a),
        Command::Replay(a) => commands::replay(&cli, a),
        Command::Sweep(a) => commands::sweep(&cli, a),
        Command::Eval(a) => commands::eval(&cli, a),
        Command::DeriveBase(a) => commands::derive_base(&cli, a),
        Command::ReproduceTables => commands::reproduce_tables(&cli),
        Command::Serve(a) => commands::serve(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
