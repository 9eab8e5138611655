//! `epictrl` command-line front end.
//!
//! Exit codes: 0 success, 1 failure (I/O, failed validation), 2 usage,
//! 3 infeasible program, 4 resource cap.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod model;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Infeasible(String),
    Cap(String),
    Io(String),
    Failed(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Cap(_) => 4,
            CliError::Io(_) | CliError::Failed(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Infeasible(m) | CliError::Cap(m) | CliError::Io(m) | CliError::Failed(m) => m,
        }
    }
}

impl From<epictrl::Error> for CliError {
    fn from(e: epictrl::Error) -> Self {
        use epictrl::Error as E;
        let msg = e.to_string();
        match e {
            E::SizeCap(_) => CliError::Cap(msg),
            E::Infeasible { .. } => CliError::Infeasible(msg),
            E::Io(_) => CliError::Io(msg),
            E::InvalidGraph(_)
            | E::NotConnected
            | E::InvalidModel(_)
            | E::InvalidParameter(_)
            | E::DimensionMismatch { .. }
            | E::NotMetzler { .. }
            | E::EmptyMatrix
            | E::StationaryNotUnique { .. }
            | E::Json(_) => CliError::Usage(msg),
            E::NoSignChange { .. } | E::NotConverged(_) => CliError::Failed(msg),
        }
    }
}

fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var("EPICTRL_THREADS") {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("EPICTRL_THREADS must be a nonnegative integer, got '{v}'"))),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = Cli::parse();
    let result = threads_from_env().and_then(|t| {
        epictrl::exec::configure_threads(t);
        commands::run(cli, &argv[1..])
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
