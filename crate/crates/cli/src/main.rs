mod args;
mod commands;
mod config;

use std::fmt;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit status plus message.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: message.into() }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self { code: EXIT_NUMERICAL, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<isingprobe::Error> for CliError {
    fn from(e: isingprobe::Error) -> Self {
        use isingprobe::Error::*;
        match e {
            InvalidConfig(_) | DimensionExceeded { .. } => Self::config(e.to_string()),
            _ => Self::numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::config(format!("output: {e}"))
    }
}

fn run() -> Result<(), CliError> {
    let argv = config::expand(std::env::args_os().collect())?;
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return Err(CliError::config(String::new()));
        }
        Err(e) => {
            let _ = e.print();
            return Ok(());
        }
    };
    match cli.command {
        Command::Echo(a) => commands::surface("echo", &a, false),
        Command::Qfi(a) => commands::surface("qfi", &a, true),
        Command::Peaks(a) => commands::peaks(&a),
        Command::Scaling(a) => commands::scaling(&a),
        Command::Symmetry(a) => commands::symmetry(&a),
        Command::OracleCheck(a) => commands::oracle_check(&a),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            if !e.message.is_empty() {
                eprintln!("error: {e}");
            }
            ExitCode::from(e.code)
        }
    }
}
