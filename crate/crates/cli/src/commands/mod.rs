//! One module per subcommand. Each exposes a pure `compute` returning its
//! rows and an `execute` that writes them.

pub mod lemma;
pub mod lower;
pub mod matching;
pub mod sample;
pub mod scaling;
pub mod upper;

use std::io::Write;
use std::path::Path;

use crate::config::{ExperimentConfig, Subcommand};
use crate::error::{CliError, Result};
use crate::io::open_output;

pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    match cfg.subcommand {
        Subcommand::Sample => sample::execute(cfg),
        Subcommand::Match => matching::execute(cfg),
        Subcommand::UpperBound => upper::execute(cfg),
        Subcommand::LowerBound => lower::execute(cfg),
        Subcommand::Scaling => scaling::execute(cfg),
        Subcommand::LemmaCheck => lemma::execute(cfg),
    }
}

/// Writes `body` to the configured output.
pub(crate) fn emit(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut w = open_output(path)?;
    let fail = |e| CliError::io(path.unwrap_or(Path::new("<stdout>")), e);
    body(&mut *w).map_err(fail)?;
    w.flush().map_err(fail)
}
