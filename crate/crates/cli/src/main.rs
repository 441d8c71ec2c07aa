mod args;
mod commands;
mod config;
mod steps;

use std::process::ExitCode;

use clap::Parser;
use thiserror::Error;

use args::{Cli, Command};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, missing inputs or invalid specs; exit code 2.
    #[error("usage error: {0}")]
    Usage(String),
    /// The command ran but failed; exit code 1.
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

fn run() -> Result<(), CliError> {
    let argv = config::merge(std::env::args_os().collect())?;
    let cli = Cli::try_parse_from(argv).unwrap_or_else(|e| e.exit());
    match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Fit(a) => commands::fit(a),
        Command::Forecast(a) => commands::forecast(a),
        Command::Compare(a) => commands::compare(a),
        Command::Serve(a) => commands::serve_cmd(a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
