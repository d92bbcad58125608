//! The hierarchical dual potential `Phi_k = phi_1 + ... + phi_k` and the
//! lower-bound certificate it yields.
//!
//! On a level-`(k - 1)` box `Q` split along coordinate `c`,
//!
//! ```text
//! phi_k(x) = L_k^2 phi_rho((x_c - lo_c) / L_k) prod_{i != c} zeta((x_i - lo_i) / side_i)
//! ```
//!
//! with `rho = 2 N_{Q_-} / N_Q`, `phi_rho(u) = (rho - 1)(zeta(u) - zeta(u - 1))`
//! and `side_i` the side of `Q` along `x_i`. Every `phi_k` vanishes near the
//! faces of its box, so `Phi_k` is smooth, and it has zero Lebesgue mean.

use alloc::vec;
use alloc::vec::Vec;

use crate::dyadic::{split_axis, DyadicTree};
use crate::error::{Error, Result};
use crate::geometry::{rng_from_seed, PointCloud};
use crate::stats::Moments;
use rand::Rng;

/// Grid points per `L_{k_*}` used to estimate `sup |grad Phi|`.
pub const GRID_REFINEMENT: usize = 8;

/// Safety factor applied to the grid maximum of `|grad Phi|`.
pub const SUP_INFLATION: f64 = 1.05;

/// `zeta(x) = 140 x^3 (1 - x)^3` on `(0, 1)`, zero elsewhere, with its first
/// two derivatives.
pub fn zeta(x: f64) -> (f64, f64, f64) {
    if x <= 0.0 || x >= 1.0 {
        return (0.0, 0.0, 0.0);
    }
    let p = x * (1.0 - x);
    (140.0 * p * p * p, 420.0 * p * p * (1.0 - 2.0 * x), 840.0 * p * (1.0 - 5.0 * p))
}

/// `int_0^x zeta`, which is `0` left of the support and `1` right of it.
pub fn zeta_antiderivative(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let x4 = x * x * x * x;
        x4 * (35.0 + x * (-84.0 + x * (70.0 - 20.0 * x)))
    }
}

/// `phi_rho(x) = (rho - 1)(zeta(x) - zeta(x - 1))`.
pub fn phi_block(rho_minus: f64, x: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&rho_minus) {
        return Err(Error::domain("rho_- must lie in [0, 2]"));
    }
    Ok(phi_parts(rho_minus, x).0)
}

/// `phi_rho` and its derivative.
#[inline]
fn phi_parts(rho: f64, x: f64) -> (f64, f64) {
    let (a, da, _) = zeta(x);
    let (b, db, _) = zeta(x - 1.0);
    ((rho - 1.0) * (a - b), (rho - 1.0) * (da - db))
}

/// `int_a^b phi_rho`.
fn phi_integral(rho: f64, a: f64, b: f64) -> f64 {
    let z = zeta_antiderivative;
    (rho - 1.0) * ((z(b) - z(a)) - (z(b - 1.0) - z(a - 1.0)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualPotential {
    tree: DyadicTree,
    level: usize,
}

impl DualPotential {
    /// `Phi_level` of the tree's cloud; `level <= k_*`.
    pub fn new(tree: DyadicTree, level: usize) -> Result<Self> {
        if level > tree.k_star() {
            return Err(Error::domain("potential level exceeds the stopping level"));
        }
        Ok(DualPotential { tree, level })
    }

    /// `Phi_{k_*}`.
    pub fn full(tree: DyadicTree) -> Self {
        let level = tree.k_star();
        DualPotential { tree, level }
    }

    pub fn tree(&self) -> &DyadicTree {
        &self.tree
    }

    pub fn level(&self) -> usize {
        self.level
    }

    /// Amplitude `rho_- - 1` of the block on box `i` of level `k - 1`.
    pub fn amplitude(&self, k: usize, i: usize) -> f64 {
        self.tree.rho_minus(k, i).map_or(0.0, |rho| rho - 1.0)
    }

    /// `Phi(x)` and `grad Phi(x)`.
    pub fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.tree.dim()];
        let value = self.accumulate(x, 1, self.level, &mut grad);
        (value, grad)
    }

    /// `phi_k(x)` and `grad phi_k(x)` for a single level.
    pub fn eval_level(&self, x: &[f64], k: usize) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.tree.dim()];
        let value = self.accumulate(x, k, k, &mut grad);
        (value, grad)
    }

    fn accumulate(&self, x: &[f64], from: usize, to: usize, grad: &mut [f64]) -> f64 {
        let t = &self.tree;
        let d = t.dim();
        let k_star = t.k_star();
        let leaf = t.leaf_index(x);
        let mut lo = vec![0.0; d];
        let mut sides = vec![t.side(); d];
        let mut u = vec![0.0; d];
        let mut z = vec![(0.0, 0.0, 0.0); d];
        let mut value = 0.0;
        for k in 1..=to {
            let c = split_axis(k, d);
            let parent = leaf >> (k_star + 1 - k);
            let lk = 0.5 * sides[c];
            if k >= from {
                if let Some(rho) = t.rho_minus(k, parent) {
                    for i in 0..d {
                        u[i] = (x[i] - lo[i]) / if i == c { lk } else { sides[i] };
                        z[i] = zeta(u[i]);
                    }
                    let (f, df) = phi_parts(rho, u[c]);
                    let others = |skip: usize| -> f64 {
                        (0..d).filter(|&j| j != c && j != skip).map(|j| z[j].0).product()
                    };
                    let tensor = others(c);
                    value += lk * lk * f * tensor;
                    grad[c] += lk * df * tensor;
                    for i in (0..d).filter(|&i| i != c) {
                        grad[i] += lk * lk / sides[i] * f * z[i].1 * others(i);
                    }
                }
            }
            if (leaf >> (k_star - k)) & 1 == 1 {
                lo[c] += lk;
            }
            sides[c] = lk;
        }
        value
    }

    /// `int phi_k drho_m`, exactly. Zero for `m < k - 1`, where every box of
    /// level `m` is a union of level-`(k - 1)` boxes.
    pub fn block_integral(&self, k: usize, m: usize) -> f64 {
        let t = &self.tree;
        if k == 0 || k > self.level || m + 1 < k || m > t.k_star() {
            return 0.0;
        }
        let d = t.dim();
        let c = split_axis(k, d);
        let n = t.len() as f64;
        let lk = t.l_k(k);
        let mut total = 0.0;
        for q in 0..1usize << m {
            let count = t.count(m, q);
            let parent = q >> (m + 1 - k);
            let Some(rho) = t.rho_minus(k, parent) else {
                continue;
            };
            if count == 0 {
                continue;
            }
            let (blo, bs) = t.box_bounds(k - 1, parent);
            let (qlo, qs) = t.box_bounds(m, q);
            let mut integral = lk * lk;
            for i in 0..d {
                let scale = if i == c { lk } else { bs[i] };
                let a = (qlo[i] - blo[i]) / scale;
                let b = (qlo[i] + qs[i] - blo[i]) / scale;
                integral *= scale
                    * if i == c {
                        phi_integral(rho, a, b)
                    } else {
                        zeta_antiderivative(b) - zeta_antiderivative(a)
                    };
            }
            let volume: f64 = qs.iter().product();
            total += count as f64 / (n * volume) * integral;
        }
        total
    }

    /// `int Phi drho_m`; `m = 0` is the Lebesgue mean, which vanishes.
    pub fn integral_against(&self, m: usize) -> f64 {
        (1..=self.level).map(|k| self.block_integral(k, m)).sum()
    }

    /// Closed form `int phi_k drho_k = sum_Q (N_Q / N) L_k^2 (rho_- - 1)^2`
    /// over the level-`(k - 1)` boxes.
    pub fn level_gain(&self, k: usize) -> f64 {
        let t = &self.tree;
        let n = t.len() as f64;
        let lk = t.l_k(k);
        (0..1usize << (k - 1))
            .map(|i| {
                let a = self.amplitude(k, i);
                t.count(k - 1, i) as f64 / n * lk * lk * a * a
            })
            .sum()
    }

    /// `level_gain(k)` for `k = 1 ..= level`.
    pub fn level_gains(&self) -> Vec<f64> {
        (1..=self.level).map(|k| self.level_gain(k)).collect()
    }

    /// `(1/N) sum_n Phi(p_n)` over a cloud.
    pub fn empirical_mean(&self, cloud: &PointCloud) -> f64 {
        let total: f64 = cloud.points().map(|p| self.eval(p).0).sum();
        total / cloud.len() as f64
    }

    /// Spacing and per-axis size of the probe grid for `sup |grad Phi|`.
    pub fn grid(&self) -> (f64, usize) {
        let t = &self.tree;
        let h = t.l_k(t.k_star()) / GRID_REFINEMENT as f64;
        (h, libm::round(t.side() / h) as usize + 1)
    }

    /// `|grad Phi|^2` at every grid point, row-major with the last
    /// coordinate fastest.
    pub fn grad_sq_on_grid(&self) -> Vec<f64> {
        let d = self.tree.dim();
        let (h, m) = self.grid();
        let side = self.tree.side();
        let total = m.pow(d as u32);
        let mut out = Vec::with_capacity(total);
        let mut x = vec![0.0; d];
        for g in 0..total {
            let mut rest = g;
            for i in (0..d).rev() {
                x[i] = ((rest % m) as f64 * h).min(side);
                rest /= m;
            }
            let (_, grad) = self.eval(&x);
            out.push(grad.iter().map(|v| v * v).sum());
        }
        out
    }

    /// Grid estimate of `sup |grad Phi|`, inflated by `SUP_INFLATION`.
    pub fn sup_grad(&self) -> f64 {
        let max = self.grad_sq_on_grid().into_iter().fold(0.0, f64::max);
        SUP_INFLATION * libm::sqrt(max)
    }
}

/// Output of `lower_bound_functional`.
#[derive(Debug, Clone, PartialEq)]
pub struct GainReport {
    /// `(1/N) sum_n Phi(X_n)`.
    pub empirical_mean: f64,
    /// `(1/L^d) int Phi dx`, exactly.
    pub spatial_mean: f64,
    /// Monte Carlo estimate of the spatial mean, as a cross-check.
    pub spatial_mean_estimate: f64,
    pub spatial_mean_stderr: f64,
    /// `empirical_mean - spatial_mean`.
    pub gain: f64,
    /// Inflated grid estimate of `sup |grad Phi|^2`.
    pub sup_grad_sq: f64,
}

/// The gain of a potential built from `cloud_x` on `cloud_x` itself.
pub fn lower_bound_functional(
    cloud_x: &PointCloud,
    p: &DualPotential,
    probes: usize,
    seed: u64,
) -> Result<GainReport> {
    if p.tree().cloud() != cloud_x {
        return Err(Error::domain("the potential must be built from this cloud"));
    }
    if probes < 1000 {
        return Err(Error::domain("at least 1000 probes are required"));
    }
    let d = cloud_x.dim();
    let side = cloud_x.side();
    let mut rng = rng_from_seed(seed);
    let mut x = vec![0.0; d];
    let mut m = Moments::new();
    for _ in 0..probes {
        for v in x.iter_mut() {
            *v = side * rng.random::<f64>();
        }
        m.push(p.eval(&x).0);
    }
    let empirical_mean = p.empirical_mean(cloud_x);
    let spatial_mean = p.integral_against(0);
    let sup = p.sup_grad();
    Ok(GainReport {
        empirical_mean,
        spatial_mean,
        spatial_mean_estimate: m.mean(),
        spatial_mean_stderr: m.stderr(),
        gain: empirical_mean - spatial_mean,
        sup_grad_sq: sup * sup,
    })
}

/// Output of `dual_lower_bound`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualBound {
    /// `(1/N) sum Phi(X_n) - (1/N) sum Phi(Y_m)`.
    pub gap: f64,
    pub sup_grad: f64,
    /// `[gap / sup |grad Phi|]_+^2`, a lower bound on the quadratic
    /// matching cost.
    pub bound: f64,
}

/// Certified lower bound on the matching cost of `(cloud_x, cloud_y)` from
/// a potential built on `cloud_x`.
pub fn dual_lower_bound(
    cloud_x: &PointCloud,
    cloud_y: &PointCloud,
    p: &DualPotential,
) -> Result<DualBound> {
    if p.tree().cloud() != cloud_x {
        return Err(Error::domain("the potential must be built from cloud_x"));
    }
    if cloud_x.len() != cloud_y.len()
        || cloud_x.dim() != cloud_y.dim()
        || cloud_x.side() != cloud_y.side()
    {
        return Err(Error::domain("clouds have different shapes"));
    }
    let gap = p.empirical_mean(cloud_x) - p.empirical_mean(cloud_y);
    let sup_grad = p.sup_grad();
    let bound = if sup_grad > 0.0 && gap > 0.0 {
        let q = gap / sup_grad;
        q * q
    } else {
        0.0
    };
    Ok(DualBound {
        gap,
        sup_grad,
        bound,
    })
}
