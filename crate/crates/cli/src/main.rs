mod args;
mod benchmark;
mod config;
mod diag;
mod enhance;
mod gen;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or config values (exit 1).
    Usage(String),
    /// Failure inside the pipeline (exit 2 or 3 by kind).
    Core(mcem_core::Error),
    /// Report or output writing failed (exit 2).
    Io(std::io::Error),
    /// Another error annotated with the file it concerns.
    Context(String, Box<CliError>),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) | CliError::Io(_) => 2,
            CliError::Context(_, inner) => inner.exit_code(),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Context(what, inner) => write!(f, "{what}: {inner}"),
        }
    }
}

pub fn context<T, E: Into<CliError>>(r: Result<T, E>, what: impl FnOnce() -> String) -> Result<T, CliError> {
    r.map_err(|e| CliError::Context(what(), Box::new(e.into())))
}

impl From<mcem_core::Error> for CliError {
    fn from(e: mcem_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Enhance(a) => enhance::run(&a),
        Command::Benchmark(a) => benchmark::run(&a),
        Command::SamplerDiag(a) => diag::run(&a),
        Command::GenDecoder(a) => gen::run(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mcem: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
