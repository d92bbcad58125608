//! Resolution of flags, config files and defaults into one
//! `ExperimentConfig`, which is embedded verbatim in every summary.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::args::{CloudChoice, Command, Method, Output, Seeding, Shape};
use crate::error::{CliError, Result};

pub const SEED_ENV: &str = "OPTMATCH_SEED";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subcommand {
    Sample,
    Match,
    UpperBound,
    LowerBound,
    Scaling,
    LemmaCheck,
}

/// A fully resolved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub n: Vec<usize>,
    pub dim: usize,
    pub side: f64,
    /// One entry per element of `n`.
    pub trials: Vec<usize>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cloud: Option<CloudChoice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<PathBuf>,
}

/// The same fields, all optional; flags and config files both produce one.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub subcommand: Option<Subcommand>,
    pub n: Option<Vec<usize>>,
    pub dim: Option<usize>,
    pub side: Option<f64>,
    pub trials: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub probes: Option<usize>,
    pub method: Option<Method>,
    pub cloud: Option<CloudChoice>,
    pub x_file: Option<PathBuf>,
    pub y_file: Option<PathBuf>,
    pub theta: Option<Vec<f64>>,
    pub constant: Option<f64>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($f:ident),*) => {
        PartialConfig { $($f: $a.$f.or($b.$f)),* }
    };
}

impl PartialConfig {
    /// Fields of `self` win over those of `other`.
    pub fn or(self, other: PartialConfig) -> PartialConfig {
        prefer!(self, other; subcommand, n, dim, side, trials, seed, probes, method,
            cloud, x_file, y_file, theta, constant, output, summary)
    }

    pub fn from_command(cmd: Command) -> PartialConfig {
        let base = |sub, shape: Shape, seeding: Seeding, output: Output| PartialConfig {
            subcommand: Some(sub),
            n: shape.n,
            dim: shape.dim,
            side: shape.side,
            trials: seeding.trials,
            seed: seeding.seed,
            output: output.output,
            summary: output.summary,
            ..PartialConfig::default()
        };
        match cmd {
            Command::Sample { shape, seeding, cloud, output } => PartialConfig {
                cloud,
                ..base(Subcommand::Sample, shape, seeding, output)
            },
            Command::Match { shape, seeding, method, x_file, y_file, output } => PartialConfig {
                method,
                x_file,
                y_file,
                ..base(Subcommand::Match, shape, seeding, output)
            },
            Command::UpperBound { shape, seeding, probes, output } => PartialConfig {
                probes,
                ..base(Subcommand::UpperBound, shape, seeding, output)
            },
            Command::LowerBound { shape, seeding, probes, output } => PartialConfig {
                probes,
                ..base(Subcommand::LowerBound, shape, seeding, output)
            },
            Command::Scaling { shape, seeding, output } => base(Subcommand::Scaling, shape, seeding, output),
            Command::LemmaCheck { shape, seeding, theta, constant, output } => PartialConfig {
                theta,
                constant,
                ..base(Subcommand::LemmaCheck, shape, seeding, output)
            },
        }
    }

    /// Reads a bare config or the `config` field of a summary.
    pub fn from_json(text: &str) -> Result<PartialConfig> {
        let bad = |e: serde_json::Error| CliError::config(format!("config: {e}"));
        let mut value: serde_json::Value = serde_json::from_str(text).map_err(bad)?;
        if let Some(inner) = value.get_mut("config") {
            value = inner.take();
        }
        serde_json::from_value(value).map_err(bad)
    }

    pub fn from_file(path: &Path) -> Result<PartialConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Fills defaults; `env_seed` is the value of `OPTMATCH_SEED`, if set.
    pub fn resolve(self, env_seed: Option<&str>) -> Result<ExperimentConfig> {
        let sub = self.subcommand.ok_or_else(|| CliError::config("no subcommand"))?;
        let env_seed = env_seed
            .map(|s| s.trim().parse::<u64>())
            .transpose()
            .map_err(|_| CliError::config(format!("{SEED_ENV} must be an unsigned integer")))?;
        let n = self.n.unwrap_or_else(|| match sub {
            Subcommand::Scaling => vec![64, 256, 1024],
            Subcommand::LemmaCheck => vec![1000, 10_000],
            _ => vec![64],
        });
        if n.is_empty() {
            return Err(CliError::config("--n needs at least one value"));
        }
        let single = matches!(
            sub,
            Subcommand::Sample | Subcommand::Match | Subcommand::UpperBound | Subcommand::LowerBound
        );
        if single && n.len() != 1 {
            return Err(CliError::config("this subcommand takes a single --n"));
        }
        let default_trials = match sub {
            Subcommand::Sample | Subcommand::Match => 1,
            Subcommand::UpperBound | Subcommand::LowerBound => 10,
            Subcommand::Scaling => 100,
            Subcommand::LemmaCheck => 1000,
        };
        let mut trials = self.trials.unwrap_or_else(|| vec![default_trials]);
        if trials.len() == 1 {
            trials = vec![trials[0]; n.len()];
        }
        if trials.len() != n.len() {
            return Err(CliError::config("--trials needs one value or one per N"));
        }
        let dim = self.dim.unwrap_or(2);
        let side = self.side.unwrap_or(1.0);
        if dim == 0 {
            return Err(CliError::config("--dim must be positive"));
        }
        if !(side.is_finite() && side > 0.0) {
            return Err(CliError::config("--side must be positive and finite"));
        }
        if let Some(p) = self.probes {
            let min = optmatch_core::dyadic::MIN_PROBES;
            let exact_ok = sub == Subcommand::UpperBound && p == 0;
            if p < min && !exact_ok {
                return Err(CliError::config(format!("--probes must be at least {min}")));
            }
        }
        let has = |s: &[Subcommand]| s.contains(&sub);
        let cfg = ExperimentConfig {
            subcommand: sub,
            n,
            dim,
            side,
            trials,
            seed: self.seed.or(env_seed).unwrap_or(0),
            probes: has(&[Subcommand::UpperBound, Subcommand::LowerBound])
                .then(|| self.probes.unwrap_or(100_000)),
            method: has(&[Subcommand::Match]).then(|| self.method.unwrap_or(Method::Solver)),
            cloud: has(&[Subcommand::Sample]).then(|| self.cloud.unwrap_or(CloudChoice::X)),
            x_file: self.x_file.filter(|_| sub == Subcommand::Match),
            y_file: self.y_file.filter(|_| sub == Subcommand::Match),
            theta: has(&[Subcommand::LemmaCheck])
                .then(|| self.theta.unwrap_or_else(|| vec![0.125, 0.5])),
            constant: has(&[Subcommand::LemmaCheck]).then(|| {
                self.constant
                    .unwrap_or(optmatch_core::binomial::DEFAULT_CONCENTRATION_CONSTANT)
            }),
            output: self.output,
            summary: self.summary,
        };
        Ok(cfg)
    }
}

impl ExperimentConfig {
    pub fn single_n(&self) -> usize {
        self.n[0]
    }

    pub fn single_trials(&self) -> usize {
        self.trials[0]
    }
}
