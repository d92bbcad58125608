//! Command-line grammar.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "optmatch", version, about = "Optimal matching of uniform random point clouds")]
pub struct Cli {
    /// Worker threads for trial-level parallelism [default: all cores].
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// JSON config file, bare or as the `config` field of a run summary.
    /// Flags given on the command line take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample one cloud of a matching trial.
    ///
    /// CSV columns: x1,...,xd, one point per row.
    Sample {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seeding: Seeding,
        /// Which cloud of the trial's pair to write.
        #[arg(long, value_enum)]
        cloud: Option<CloudChoice>,
        #[command(flatten)]
        output: Output,
    },
    /// Exact matching cost of one pair of clouds.
    ///
    /// Prints JSON {cost, method, seconds}.
    Match {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seeding: Seeding,
        #[arg(long, value_enum)]
        method: Option<Method>,
        /// Read X from this CSV instead of sampling.
        #[arg(long, requires = "y_file")]
        x_file: Option<PathBuf>,
        /// Read Y from this CSV instead of sampling.
        #[arg(long, requires = "x_file")]
        y_file: Option<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Dyadic transport upper bound against the exact cost.
    ///
    /// CSV columns: seed,k_star,map_cost,stderr,coupling_cost,optimal_cost.
    /// map_cost is a Monte Carlo estimate with standard error stderr, or
    /// the exact cost with stderr 0 when --probes is 0.
    UpperBound {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seeding: Seeding,
        /// Monte Carlo probes for the map cost; 0 integrates exactly.
        #[arg(long)]
        probes: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Dual potential lower bound against the exact cost.
    ///
    /// CSV columns: seed,gain,sup_grad_sq,certified_lower_bound,optimal_cost.
    LowerBound {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seeding: Seeding,
        /// Monte Carlo probes for the spatial-mean cross-check.
        #[arg(long)]
        probes: Option<usize>,
        #[command(flatten)]
        output: Output,
    },
    /// Expected matching cost over a range of N with a scaling fit.
    ///
    /// CSV columns: N,d,trials,mean,stderr,fitted_constant, where
    /// fitted_constant is mean / (r^2 g(N)) with g(N) = N, ln N or 1 for
    /// d = 1, 2 or more.
    Scaling {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seeding: Seeding,
        #[command(flatten)]
        output: Output,
    },
    /// Box-count moments and concentration bounds.
    ///
    /// Writes a JSON report with one entry per (N, theta).
    LemmaCheck {
        #[command(flatten)]
        shape: Shape,
        #[command(flatten)]
        seeding: Seeding,
        /// Box volume fractions, each a power of 1/2.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        /// Constant C of the concentration bounds.
        #[arg(long)]
        constant: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
pub struct Shape {
    /// Number of points, or a comma-separated list.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Dimension d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Side L of the box [0, L]^d.
    #[arg(long)]
    pub side: Option<f64>,
}

#[derive(Debug, Args)]
pub struct Seeding {
    /// Master seed [env: OPTMATCH_SEED, default 0].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Trials, one value or one per N.
    #[arg(long, value_delimiter = ',')]
    pub trials: Option<Vec<usize>>,
}

#[derive(Debug, Args)]
pub struct Output {
    /// Main output file [default: stdout].
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON summary file.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Brute,
    Solver,
    Lp,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Brute => "brute",
            Method::Solver => "solver",
            Method::Lp => "lp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudChoice {
    X,
    Y,
}
