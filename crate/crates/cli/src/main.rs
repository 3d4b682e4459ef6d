mod args;
mod commands;
mod config;
mod error;
mod verify;

use args::{Cli, Command};
use clap::Parser;
use config::Config;
use error::{CliError, CliResult};
use std::process::ExitCode;

/// Environment variable capping the number of worker threads.
const THREADS_VAR: &str = "SERRIN_VORTEX_THREADS";

fn init_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_VAR} must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Validation(format!("cannot set thread count: {e}")))
}

fn run(cli: &Cli) -> CliResult<()> {
    init_threads()?;
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match &cli.command {
        Command::Analytic(a) => commands::analytic(a, &cfg),
        Command::SolveInviscid(a) => commands::solve_inviscid(a, &cfg),
        Command::SolveViscous(a) => commands::solve_viscous(a, &cfg),
        Command::Sweep(a) => commands::sweep(a, &cfg),
        Command::LayerScaling(a) => commands::layer_scaling(a, &cfg),
        Command::Fields(a) => commands::fields(a, &cfg),
        Command::Verify(a) => verify::verify(a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors, matching the validation code.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
