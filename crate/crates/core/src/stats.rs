//! Streaming moments, seeded trial ensembles and scaling-law fits.

use alloc::format;
use alloc::string::ToString;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::derive_seed;

/// Count, mean and centered second moment, updated one value at a time.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    /// Combines two accumulators as if all values had been pushed into one.
    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero below two values.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance())
    }

    /// `s / sqrt(T)`.
    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std_dev() / libm::sqrt(self.count as f64)
        }
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::new();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Per-trial observations of one experiment, kept in trial order.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialEnsemble {
    pub master_seed: u64,
    pub values: Vec<f64>,
    pub moments: Moments,
}

impl TrialEnsemble {
    /// Folds values in trial order, so the result does not depend on how
    /// the trials were scheduled.
    pub fn from_values(master_seed: u64, values: Vec<f64>) -> Self {
        let moments = values.iter().copied().collect();
        TrialEnsemble {
            master_seed,
            values,
            moments,
        }
    }

    pub fn trials(&self) -> usize {
        self.values.len()
    }

    pub fn mean(&self) -> f64 {
        self.moments.mean()
    }

    pub fn stderr(&self) -> f64 {
        self.moments.stderr()
    }
}

/// Seed of trial `index` of an ensemble.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    derive_seed(master_seed, index)
}

/// Runs `trials` trials sequentially; trial `t` receives its index and
/// `trial_seed(master_seed, t)`.
pub fn run_ensemble<E, F>(master_seed: u64, trials: usize, mut observable: F) -> Result<TrialEnsemble>
where
    E: ToString,
    F: FnMut(u64, u64) -> core::result::Result<f64, E>,
{
    if trials < 2 {
        return Err(Error::domain("an ensemble needs at least two trials"));
    }
    let mut values = Vec::with_capacity(trials);
    for index in 0..trials as u64 {
        let seed = trial_seed(master_seed, index);
        let v = observable(index, seed).map_err(|e| Error::Trial {
            index,
            seed,
            message: e.to_string(),
        })?;
        values.push(v);
    }
    Ok(TrialEnsemble::from_values(master_seed, values))
}

/// Asymptotic shape `g(N)` of the expected cost in units of `r^2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingModel {
    /// `g(N) = N`, dimension one.
    LinearInN,
    /// `g(N) = ln N`, dimension two.
    LinearInLnN,
    /// `g(N) = 1`, dimension three and above.
    Constant,
}

impl ScalingModel {
    pub fn for_dim(dim: usize) -> Self {
        match dim {
            1 => ScalingModel::LinearInN,
            2 => ScalingModel::LinearInLnN,
            _ => ScalingModel::Constant,
        }
    }

    pub fn g(self, n: usize) -> f64 {
        match self {
            ScalingModel::LinearInN => n as f64,
            ScalingModel::LinearInLnN => libm::log(n as f64),
            ScalingModel::Constant => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScalingModel::LinearInN => "linear-in-N",
            ScalingModel::LinearInLnN => "linear-in-lnN",
            ScalingModel::Constant => "constant",
        }
    }
}

/// Fit of `E[cost] = c r^2 g(N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFit {
    pub model: ScalingModel,
    /// Least-squares `c` over all points.
    pub constant: f64,
    /// `mean_i / (r_i^2 g(N_i))` for every input point.
    pub per_point: Vec<f64>,
    pub residuals: Vec<f64>,
    /// `max c_i / min c_i`.
    pub ratio: f64,
    /// Mean of the per-point constants.
    pub mean_constant: f64,
    /// Slope of the per-point constants against `ln N`.
    pub slope_vs_ln_n: f64,
}

/// Fits the dimension's asymptotic shape to `(N, mean cost)` points in the
/// box `[0, side]^dim`.
pub fn fit_scaling(points: &[(usize, f64)], dim: usize, side: f64) -> Result<ScalingFit> {
    if dim == 0 || !(side > 0.0) {
        return Err(Error::domain("dimension and side must be positive"));
    }
    let mut distinct: Vec<usize> = points.iter().map(|p| p.0).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(Error::domain("a scaling fit needs at least three distinct N"));
    }
    if let Some(p) = points.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::domain(format!("nonpositive mean cost {} at N = {}", p.1, p.0)));
    }
    let model = ScalingModel::for_dim(dim);
    if model == ScalingModel::LinearInLnN && distinct[0] < 2 {
        return Err(Error::domain("ln N vanishes at N = 1"));
    }
    let scale: Vec<f64> = points
        .iter()
        .map(|&(n, _)| {
            let r = side * libm::pow(n as f64, -1.0 / dim as f64);
            r * r * model.g(n)
        })
        .collect();
    let per_point: Vec<f64> = points.iter().zip(&scale).map(|(p, s)| p.1 / s).collect();
    let sxy: f64 = points.iter().zip(&scale).map(|(p, s)| p.1 * s).sum();
    let sxx: f64 = scale.iter().map(|s| s * s).sum();
    let constant = sxy / sxx;
    let residuals = points
        .iter()
        .zip(&scale)
        .map(|(p, s)| p.1 - constant * s)
        .collect();
    let max = per_point.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = per_point.iter().copied().fold(f64::INFINITY, f64::min);
    let ln_n: Vec<f64> = points.iter().map(|p| libm::log(p.0 as f64)).collect();
    let (slope, _) = linear_regression(&ln_n, &per_point)?;
    Ok(ScalingFit {
        model,
        constant,
        mean_constant: per_point.iter().sum::<f64>() / per_point.len() as f64,
        per_point,
        residuals,
        ratio: max / min,
        slope_vs_ln_n: slope,
    })
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_regression(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::domain("regression needs two or more paired values"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("regression abscissae are all equal"));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}
