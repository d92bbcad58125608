use optmatch_core::geometry::{sample_pair, PointCloud};

use super::emit;
use crate::args::CloudChoice;
use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::io::write_cloud;

/// The requested cloud of the pair `match` would sample with this config.
pub fn compute(cfg: &ExperimentConfig) -> Result<PointCloud> {
    let (x, y) = sample_pair(cfg.single_n(), cfg.side, cfg.dim, cfg.seed)?;
    Ok(match cfg.cloud {
        Some(CloudChoice::Y) => y,
        _ => x,
    })
}

pub fn execute(cfg: &ExperimentConfig) -> Result<()> {
    let cloud = compute(cfg)?;
    emit(cfg.output.as_deref(), |w| write_cloud(w, &cloud))
}
