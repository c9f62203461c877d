//! Command-line front end: instance files, solver commands and condition
//! reports. Exit codes: 0 on success, 1 on input errors, 2 when the solver
//! reports a violated promise or fails numerically.

pub mod commands;
pub mod format;

use std::ffi::OsString;

use clap::Parser;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Solver(#[from] gpcond::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Solver(e) => match e {
                gpcond::Error::Input(_) | gpcond::Error::DimensionMismatch { .. } | gpcond::Error::SizeGuard(_) => 1,
                _ => 2,
            },
        }
    }
}

/// Parses `args`, runs the command and prints its JSON result or an error
/// message. Returns the process exit code.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match commands::Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::run(&cli) {
        Ok(value) => {
            println!("{}", serde_json::to_string_pretty(&value).expect("JSON output"));
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
