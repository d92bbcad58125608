use optmatch_core::binomial::{
    binomial_fourth_central_moment, concentration_check, count_in_box, moment_bounds, BoxCount,
    ConcentrationReport,
};
use optmatch_core::dyadic::axis_depth;
use optmatch_core::geometry::{derive_seed, sample_uniform, DyadicBox};
use optmatch_core::stats::Moments;
use serde::Serialize;

use super::emit;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io::Summary;
use crate::parallel::map_trials;

/// Tolerance, in standard errors, of the moment comparisons.
pub const MOMENT_TOLERANCE: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaEntry {
    pub n: usize,
    pub theta: f64,
    pub trials: usize,
    pub mean: f64,
    pub expected_mean: f64,
    pub mean_stderr: f64,
    pub mean_ok: bool,
    pub variance: f64,
    pub expected_variance: f64,
    /// Standard error of the sample variance under the binomial law.
    pub variance_stderr: f64,
    pub variance_ok: bool,
    pub fourth_moment: f64,
    pub fourth_moment_bound: f64,
    pub fourth_moment_ok: bool,
    pub rho_l2: f64,
    pub rho_l4: f64,
    pub inverse_count: f64,
    pub fluctuation_bound: f64,
    pub inverse_bound: f64,
    pub rho_l2_ok: bool,
    pub rho_l4_ok: bool,
    pub inverse_ok: bool,
    pub passed: bool,
}

/// The lower-corner dyadic box of volume fraction `theta = 2^-j`.
pub fn corner_box(theta: f64, dim: usize) -> Result<DyadicBox> {
    let j = -theta.log2();
    if !(theta > 0.0 && theta <= 1.0) || j.fract() != 0.0 || j > 60.0 * dim as f64 {
        return Err(CliError::config(format!("theta = {theta} is not a power of 1/2")));
    }
    let k = j as usize;
    let depth = (0..dim).map(|i| axis_depth(k, i, dim)).collect();
    Ok(DyadicBox::new(depth, vec![0; dim])?)
}

/// Box counts of `trials` clouds.
pub fn counts(n: usize, theta: f64, cfg: &ExperimentConfig, trials: usize) -> Result<Vec<BoxCount>> {
    let q = corner_box(theta, cfg.dim)?;
    let master = derive_seed(cfg.seed, n as u64 ^ theta.to_bits());
    Ok(map_trials(master, trials, |_, seed| {
        count_in_box(&sample_uniform(n, cfg.side, cfg.dim, seed)?, &q)
    })?)
}

pub fn entry(samples: &[BoxCount], constant: f64) -> Result<LemmaEntry> {
    let c: ConcentrationReport = concentration_check(samples, constant)?;
    let (n, theta) = (c.n_total, c.theta);
    let (mean, var, fourth_bound) = moment_bounds(n, theta)?;
    let m: Moments = samples.iter().map(|s| s.n_q as f64).collect();
    let t = samples.len() as f64;
    let mu4 = binomial_fourth_central_moment(n, theta);
    let variance_stderr = ((mu4 - var * var * (t - 3.0) / (t - 1.0)) / t).max(0.0).sqrt();
    let mean_stderr = (var / t).sqrt();
    let mean_ok = (m.mean() - mean).abs() <= MOMENT_TOLERANCE * mean_stderr;
    let variance_ok = (m.variance() - var).abs() <= MOMENT_TOLERANCE * variance_stderr;
    let fourth_moment_ok = mu4 <= fourth_bound * (1.0 + 1e-9);
    Ok(LemmaEntry {
        n,
        theta,
        trials: samples.len(),
        mean: m.mean(),
        expected_mean: mean,
        mean_stderr,
        mean_ok,
        variance: m.variance(),
        expected_variance: var,
        variance_stderr,
        variance_ok,
        fourth_moment: mu4,
        fourth_moment_bound: fourth_bound,
        fourth_moment_ok,
        rho_l2: c.rho_l2,
        rho_l4: c.rho_l4,
        inverse_count: c.inverse_count,
        fluctuation_bound: c.fluctuation_bound,
        inverse_bound: c.inverse_bound,
        rho_l2_ok: c.rho_l2_ok,
        rho_l4_ok: c.rho_l4_ok,
        inverse_ok: c.inverse_ok,
        passed: c.passed() && mean_ok && variance_ok && fourth_moment_ok,
    })
}

pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<LemmaEntry>> {
    let thetas = cfg.theta.clone().unwrap_or_else(|| vec![0.125, 0.5]);
    let constant = cfg.constant.unwrap_or(optmatch_core::binomial::DEFAULT_CONCENTRATION_CONSTANT);
    let mut out = Vec::new();
    for (&n, &trials) in cfg.n.iter().zip(&cfg.trials) {
        if trials < 2 {
            return Err(CliError::config("lemma-check needs at least two trials"));
        }
        for &theta in &thetas {
            out.push(entry(&counts(n, theta, cfg, trials)?, constant)?);
        }
    }
    Ok(out)
}

pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let entries = compute(cfg)?;
    let results = entries
        .iter()
        .map(|e| serde_json::to_value(e).expect("entries serialize"))
        .collect();
    let summary = Summary::new(cfg, results, serde_json::Value::Null);
    let text = serde_json::to_string_pretty(&summary).expect("summaries serialize");
    emit(cfg.output.as_deref(), |w| writeln!(w, "{text}"))?;
    if cfg.summary.is_some() {
        summary.write_to(cfg.summary.as_deref())?;
    }
    Ok(())
}
