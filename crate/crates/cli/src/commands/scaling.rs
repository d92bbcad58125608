use optmatch_core::geometry::{derive_seed, sample_pair, MicroScale};
use optmatch_core::stats::{fit_scaling, ScalingFit, ScalingModel, TrialEnsemble};
use serde_json::json;

use super::emit;
use super::matching::solve;
use crate::args::Method;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::{float, write_table, Summary};
use crate::parallel::ensemble;

pub const COLUMNS: [&str; 6] = ["N", "d", "trials", "mean", "stderr", "fitted_constant"];

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    pub ensemble: TrialEnsemble,
    /// `mean / (r^2 g(N))`.
    pub constant: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    /// Present with three or more distinct N.
    pub fit: Option<ScalingFit>,
}

/// Master seed of the ensemble at size `n`.
pub fn ensemble_seed(master: u64, n: usize) -> u64 {
    derive_seed(master, n as u64)
}

pub fn compute(cfg: &ExperimentConfig) -> Result<ScalingResult> {
    let model = ScalingModel::for_dim(cfg.dim);
    let mut points = Vec::with_capacity(cfg.n.len());
    for (&n, &trials) in cfg.n.iter().zip(&cfg.trials) {
        let e = ensemble(ensemble_seed(cfg.seed, n), trials, |_, seed| {
            let (x, y) = sample_pair(n, cfg.side, cfg.dim, seed)?;
            solve(&x, &y, Method::Solver)
        })?;
        let r = MicroScale::of(n, cfg.side, cfg.dim)?.value();
        points.push(ScalingPoint {
            n,
            constant: e.mean() / (r * r * model.g(n)),
            ensemble: e,
        });
    }
    let mut distinct: Vec<usize> = cfg.n.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let fit = if distinct.len() >= 3 {
        let pairs: Vec<(usize, f64)> = points.iter().map(|p| (p.n, p.ensemble.mean())).collect();
        Some(fit_scaling(&pairs, cfg.dim, cfg.side)?)
    } else {
        None
    };
    Ok(ScalingResult { points, fit })
}

pub fn fit_json(fit: &ScalingFit) -> serde_json::Value {
    json!({
        "model": fit.model.name(),
        "constant": fit.constant,
        "per_point": fit.per_point,
        "residuals": fit.residuals,
        "ratio": fit.ratio,
        "mean_constant": fit.mean_constant,
        "slope_vs_ln_n": fit.slope_vs_ln_n,
    })
}

pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let result = compute(cfg)?;
    let table: Vec<Vec<String>> = result
        .points
        .iter()
        .map(|p| {
            vec![
                p.n.to_string(),
                cfg.dim.to_string(),
                p.ensemble.trials().to_string(),
                float(p.ensemble.mean()),
                float(p.ensemble.stderr()),
                float(p.constant),
            ]
        })
        .collect();
    emit(cfg.output.as_deref(), |w| write_table(w, &COLUMNS, &table))?;
    let fit = result.fit.as_ref().map_or(serde_json::Value::Null, fit_json);
    if let Some(f) = &result.fit {
        eprintln!(
            "fit {}: c = {:.4e}, max/min c = {:.3}, slope of c vs ln N = {:.3e}",
            f.model.name(),
            f.constant,
            f.ratio,
            f.slope_vs_ln_n
        );
    }
    if cfg.summary.is_some() {
        let results = result
            .points
            .iter()
            .map(|p| {
                json!({
                    "n": p.n,
                    "trials": p.ensemble.trials(),
                    "seed": p.ensemble.master_seed,
                    "mean": p.ensemble.mean(),
                    "stderr": p.ensemble.stderr(),
                    "fitted_constant": p.constant,
                })
            })
            .collect();
        Summary::new(cfg, results, fit).write_to(cfg.summary.as_deref())?;
    }
    Ok(())
}
