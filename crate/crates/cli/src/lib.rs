//! Experiment runner for `optmatch-core`: subcommands, config files, CSV
//! and JSON outputs, and trial-level parallelism.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;

use std::ffi::OsString;

use clap::Parser;

use crate::args::Cli;
use crate::config::{PartialConfig, SEED_ENV};
pub use crate::config::ExperimentConfig;
pub use crate::error::{CliError, Result};

/// Parses flags and resolves them against `--config` and `OPTMATCH_SEED`.
pub fn configure<I, T>(argv: I) -> std::result::Result<(ExperimentConfig, Option<usize>), clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv)?;
    let result = resolve(cli);
    result.map_err(|e| clap::Error::raw(clap::error::ErrorKind::ValueValidation, format!("{e}\n")))
}

fn resolve(cli: Cli) -> Result<(ExperimentConfig, Option<usize>)> {
    let flags = PartialConfig::from_command(cli.command);
    let merged = match &cli.config {
        Some(path) => {
            let file = PartialConfig::from_file(path)?;
            if file.subcommand.is_some() && file.subcommand != flags.subcommand {
                return Err(CliError::config("the config file is for another subcommand"));
            }
            flags.or(file)
        }
        None => flags,
    };
    let env = std::env::var(SEED_ENV).ok();
    Ok((merged.resolve(env.as_deref())?, cli.workers))
}

/// Runs one invocation and returns its exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (cfg, workers) = match configure(argv) {
        Ok(v) => v,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = parallel::with_pool(workers, || commands::execute(&cfg)).and_then(|r| r);
    match outcome {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("optmatch: {e}");
            e.exit_code()
        }
    }
}
