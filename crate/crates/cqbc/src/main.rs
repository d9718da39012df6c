use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use cqbc::{execute, CliError, Command, Settings};

/// Counterfactual quantum bit commitment simulator.
///
/// Exit codes: 0 success, 2 usage, 3 infeasible, 4 I/O.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Detector statistics per slot, analytic against sampled
    Table1(#[command(flatten)] Settings),
    /// Honest commit and open, with a slot transcript
    Commit(#[command(flatten)] Settings),
    /// Run one cheating strategy and compare with its prediction
    Attack(#[command(flatten)] Settings),
    /// Smallest (m, n) meeting binding and concealing targets
    Params(#[command(flatten)] Settings),
}

fn write_to(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, bytes).map_err(|e| CliError::io(p, e)),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (command, settings) = match cli.command {
        Sub::Table1(s) => (Command::Table1, s),
        Sub::Commit(s) => (Command::Commit, s),
        Sub::Attack(s) => (Command::Attack, s),
        Sub::Params(s) => (Command::Params, s),
    };
    let settings = settings.resolve()?;
    let rendered = execute(command, &settings)?;
    for w in &rendered.warnings {
        eprintln!("warning: {w}");
    }
    write_to(settings.out.as_deref(), &rendered.primary)?;
    if let (Some(path), Some(csv)) = (settings.transcript.as_deref(), &rendered.transcript) {
        write_to(Some(path), csv)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
