use optmatch_core::dyadic::{build_tree, couple_two_clouds, HierarchicalMap};
use optmatch_core::geometry::{derive_seed, sample_pair};
use optmatch_core::stats::Moments;
use serde_json::json;

use super::emit;
use super::matching::solve;
use crate::args::Method;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::{float, write_table, Summary};
use crate::parallel::map_trials;

pub const COLUMNS: [&str; 6] = ["seed", "k_star", "map_cost", "stderr", "coupling_cost", "optimal_cost"];

#[derive(Debug, Clone, PartialEq)]
pub struct UpperRow {
    pub seed: u64,
    pub k_star: usize,
    pub map_cost: f64,
    pub stderr: f64,
    pub coupling_cost: f64,
    pub optimal_cost: f64,
}

/// One row per trial. With zero probes the map cost is exact.
pub fn compute(cfg: &ExperimentConfig) -> Result<Vec<UpperRow>> {
    let (n, probes) = (cfg.single_n(), cfg.probes.unwrap_or(0));
    Ok(map_trials(cfg.seed, cfg.single_trials(), |_, seed| {
        let (x, y) = sample_pair(n, cfg.side, cfg.dim, seed)?;
        let tx = HierarchicalMap::new(build_tree(&x)?);
        let ty = HierarchicalMap::new(build_tree(&y)?);
        let (map_cost, stderr) = if probes == 0 {
            (tx.cost(), 0.0)
        } else {
            tx.map_cost(probes, derive_seed(seed, 2))?
        };
        let coupling_cost = couple_two_clouds(&tx, &ty)?.cost;
        let optimal_cost = solve(&x, &y, Method::Solver)?;
        Ok(UpperRow {
            seed,
            k_star: tx.tree().k_star(),
            map_cost,
            stderr,
            coupling_cost,
            optimal_cost,
        })
    })?)
}

pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let rows = compute(cfg)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                r.k_star.to_string(),
                float(r.map_cost),
                float(r.stderr),
                float(r.coupling_cost),
                float(r.optimal_cost),
            ]
        })
        .collect();
    emit(cfg.output.as_deref(), |w| write_table(w, &COLUMNS, &table))?;
    if cfg.summary.is_some() {
        let stat = |f: fn(&UpperRow) -> f64| {
            let m: Moments = rows.iter().map(f).collect();
            json!({"mean": m.mean(), "stderr": m.stderr()})
        };
        let results = vec![json!({
            "n": cfg.single_n(),
            "trials": rows.len(),
            "map_cost": stat(|r| r.map_cost),
            "coupling_cost": stat(|r| r.coupling_cost),
            "optimal_cost": stat(|r| r.optimal_cost),
            "sandwich_violations": rows.iter().filter(|r| r.optimal_cost > r.coupling_cost).count(),
        })];
        Summary::new(cfg, results, serde_json::Value::Null).write_to(cfg.summary.as_deref())?;
    }
    Ok(())
}
