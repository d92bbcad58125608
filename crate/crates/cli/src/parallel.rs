//! Trial-level parallelism. Results are gathered in trial order, so every
//! statistic is the same for any number of workers.

use optmatch_core::stats::{trial_seed, TrialEnsemble};
use optmatch_core::Error;
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Runs `f` inside a pool of `workers` threads (machine parallelism when
/// `None`).
pub fn with_pool<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> Result<R> {
    if workers == Some(0) {
        return Err(CliError::config("--workers must be positive"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

/// `f(index, trial_seed(master, index))` for every trial, in trial order.
/// The first failing trial, by index, is reported.
pub fn map_trials<T, F>(master: u64, trials: usize, f: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T, Error> + Sync,
{
    map_trial_range(master, 0..trials as u64, f)
}

/// `map_trials` restricted to the trial indices in `range`.
pub fn map_trial_range<T, F>(master: u64, range: std::ops::Range<u64>, f: F) -> Result<Vec<T>, Error>
where
    T: Send,
    F: Fn(u64, u64) -> Result<T, Error> + Sync,
{
    let out: Vec<Result<T, Error>> = range
        .into_par_iter()
        .map(|index| {
            let seed = trial_seed(master, index);
            f(index, seed).map_err(|e| Error::Trial {
                index,
                seed,
                message: e.to_string(),
            })
        })
        .collect();
    out.into_iter().collect()
}

/// Parallel counterpart of `optmatch_core::stats::run_ensemble`.
pub fn ensemble<F>(master: u64, trials: usize, f: F) -> Result<TrialEnsemble, Error>
where
    F: Fn(u64, u64) -> Result<f64, Error> + Sync,
{
    if trials < 2 {
        return Err(Error::Domain("an ensemble needs at least two trials".into()));
    }
    Ok(TrialEnsemble::from_values(master, map_trials(master, trials, f)?))
}
