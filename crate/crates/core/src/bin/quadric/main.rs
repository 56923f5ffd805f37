//! `quadric`: generate, fit, verify and classify quadrics of revolution.
//!
//! Exit codes: 0 success, 2 input error, 3 degenerate geometry, 4 verification
//! failure. Errors are written to stderr as `{"code": .., "message": ..}`.

mod args;
mod commands;
mod io;

use std::fmt::Display;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;

use args::Cli;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;
pub const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug, Serialize)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn io(e: impl Display) -> Self {
        Self::input(e.to_string())
    }
}

impl From<quadric_core::Error> for CliError {
    fn from(e: quadric_core::Error) -> Self {
        use quadric_core::Error::*;
        let code = match e {
            InsufficientSamples { .. } | DegenerateGeometry(_) => EXIT_DEGENERATE,
            _ => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn report(error: &CliError) -> ExitCode {
    let line = serde_json::to_string(error).unwrap_or_else(|_| format!("{{\"code\":{}}}", error.code));
    eprintln!("{line}");
    ExitCode::from(error.code)
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("QUADRIC_NUM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::input(format!("QUADRIC_NUM_THREADS must be a positive integer, got '{raw}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(CliError::io)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            return report(&CliError::input(message.trim_end()));
        }
    };
    if let Err(e) = configure_threads() {
        return report(&e);
    }
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => report(&e),
    }
}
