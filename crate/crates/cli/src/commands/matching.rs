use std::time::Instant;

use optmatch_core::assignment::{cost_matrix, match_bruteforce, match_lp, match_solver};
use optmatch_core::geometry::{sample_pair, PointCloud};
use serde::Serialize;

use super::emit;
use crate::args::Method;
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io::read_cloud_file;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchResult {
    pub cost: f64,
    pub method: &'static str,
    pub seconds: f64,
}

pub fn clouds(cfg: &ExperimentConfig) -> Result<(PointCloud, PointCloud)> {
    match (&cfg.x_file, &cfg.y_file) {
        (Some(xf), Some(yf)) => {
            let x = read_cloud_file(xf, cfg.side)?;
            let y = read_cloud_file(yf, cfg.side)?;
            if x.len() != y.len() || x.dim() != y.dim() {
                return Err(CliError::config("the two clouds have different shapes"));
            }
            Ok((x, y))
        }
        (None, None) => Ok(sample_pair(cfg.single_n(), cfg.side, cfg.dim, cfg.seed)?),
        _ => Err(CliError::config("--x-file and --y-file go together")),
    }
}

pub fn solve(x: &PointCloud, y: &PointCloud, method: Method) -> optmatch_core::Result<f64> {
    let c = cost_matrix(x, y)?;
    let plan = match method {
        Method::Brute => match_bruteforce(&c)?,
        Method::Solver => match_solver(&c)?,
        Method::Lp => match_lp(&c)?,
    };
    Ok(plan.cost)
}

pub fn compute(cfg: &ExperimentConfig) -> Result<MatchResult> {
    let method = cfg.method.unwrap_or(Method::Solver);
    let (x, y) = clouds(cfg)?;
    let start = Instant::now();
    let cost = solve(&x, &y, method)?;
    Ok(MatchResult {
        cost,
        method: method.name(),
        seconds: start.elapsed().as_secs_f64(),
    })
}

pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let r = compute(cfg)?;
    let text = serde_json::to_string(&r).expect("match results serialize");
    emit(cfg.output.as_deref(), |w| writeln!(w, "{text}"))
}
