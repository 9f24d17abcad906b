//! The `varmix` command-line tool.

mod args;
mod commands;
mod error;
mod io;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::CliError;

fn run(cli: &Cli) -> error::Result<bool> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Fit(a) => commands::run_fit(a),
        Command::Path(a) => commands::run_path(a),
        Command::Simulate(a) => commands::run_simulate(a),
        Command::Bench(a) => commands::run_bench(a),
        Command::Experiment(a) => commands::run_experiment(a),
        Command::PosteriorMean(a) => commands::run_posterior_mean(a),
        Command::IdentityCheck(a) => commands::run_identity_check(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors from clap exit with status 2.
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
