//! Level-by-level decomposition of the cost of `S_k = T_k o ... o T_1`.
//!
//! Writing `E_k = int |S_k - id|^2 drho_0`, the increment `E_k - E_{k-1}`
//! splits into the diagonal term `int |T_k - id|^2 drho_{k-1}` and twice
//! the cross term `int (S_{k-1} - id) . (T_k - id) o S_{k-1} drho_0`. All
//! three are computed exactly per instance from the preimage boxes.

use alloc::vec;
use alloc::vec::Vec;

use super::map::{preimage_boxes, HierarchicalMap};
use crate::error::{Error, Result};
use crate::stats::Moments;

/// Exact per-level costs of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelProfile {
    pub k_star: usize,
    /// `L_k`, `k = 0 ..= k_*`.
    pub side: Vec<f64>,
    /// `E_k`, `k = 0 ..= k_*`.
    pub cost: Vec<f64>,
    /// `int |T_k - id|^2 drho_{k-1}`; entry `0` is zero.
    pub diagonal: Vec<f64>,
    /// `E_k - E_{k-1} - diagonal_k`; entry `0` is zero.
    pub cross: Vec<f64>,
    /// Cost of the full map including the last mile.
    pub total: f64,
}

pub fn level_profile(map: &HierarchicalMap) -> LevelProfile {
    let t = map.tree();
    let d = t.dim();
    let n = t.len() as f64;
    let volume = libm::pow(t.side(), d as f64);
    let k_star = t.k_star();
    let mut cost = vec![0.0; k_star + 1];
    preimage_boxes(t, k_star, |k, plo, phi| {
        let mut e = 0.0;
        for i in 0..1usize << k {
            let (lo, hi) = (&plo[i * d..(i + 1) * d], &phi[i * d..(i + 1) * d]);
            let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
            if vol == 0.0 {
                continue;
            }
            let (qlo, qs) = t.box_bounds(k, i);
            // S_k maps [lo, hi] affinely onto Q; per coordinate the
            // displacement is affine with end values qlo - lo and qhi - hi
            e += vol
                * (0..d)
                    .map(|j| {
                        let a = qlo[j] - lo[j];
                        let b = qlo[j] + qs[j] - hi[j];
                        (a * a + a * b + b * b) / 3.0
                    })
                    .sum::<f64>();
        }
        cost[k] = e / volume;
    });
    let mut diagonal = vec![0.0; k_star + 1];
    let mut cross = vec![0.0; k_star + 1];
    for k in 1..=k_star {
        let lk = t.l_k(k);
        let mut s = 0.0;
        for i in 0..1usize << (k - 1) {
            if let Some(rho) = t.rho_minus(k, i) {
                // (L_k^2 / 2) int_0^2 (T_rho - id)^2 = L_k^2 (rho - 1)^2 / 3
                s += t.count(k - 1, i) as f64 / n * lk * lk * (rho - 1.0) * (rho - 1.0) / 3.0;
            }
        }
        diagonal[k] = s;
        cross[k] = cost[k] - cost[k - 1] - s;
    }
    LevelProfile {
        k_star,
        side: (0..=k_star).map(|k| t.l_k(k)).collect(),
        cost,
        diagonal,
        cross,
        total: map.cost(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub k: usize,
    pub l_k: f64,
    pub mean_cost: f64,
    pub stderr_cost: f64,
    /// `E[E_k - E_{k-1}]`.
    pub mean_increment: f64,
    pub stderr_increment: f64,
    pub mean_diagonal: f64,
    pub mean_cross: f64,
    pub stderr_cross: f64,
    /// `C` needed at this level alone.
    pub required_c: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditTable {
    pub rows: Vec<AuditRow>,
    /// Smallest `C` with `E_k <= C (L_k/r)^{2-d} r^2 + (1 + C (r/L_k)^d) E_{k-1}`
    /// at every level, in expectation.
    pub smallest_c: f64,
    pub mean_total: f64,
    pub stderr_total: f64,
}

/// Averages instance profiles and checks the one-step recursion.
pub fn recursion_audit(profiles: &[LevelProfile], r: f64, dim: usize) -> Result<AuditTable> {
    if profiles.len() < 2 {
        return Err(Error::domain("the audit needs at least two instances"));
    }
    let k_star = profiles[0].k_star;
    if profiles.iter().any(|p| p.k_star != k_star) {
        return Err(Error::domain("instances have different stopping levels"));
    }
    let moments = |f: &dyn Fn(&LevelProfile) -> f64| -> Moments { profiles.iter().map(f).collect() };
    let mut rows = Vec::with_capacity(k_star + 1);
    let mut smallest_c = 0.0f64;
    for k in 0..=k_star {
        let e = moments(&|p| p.cost[k]);
        let inc = moments(&|p| if k == 0 { 0.0 } else { p.cost[k] - p.cost[k - 1] });
        let diag = moments(&|p| p.diagonal[k]);
        let cross = moments(&|p| p.cross[k]);
        let l_k = profiles[0].side[k];
        let required_c = if k == 0 {
            0.0
        } else {
            let previous = rows.last().map_or(0.0, |row: &AuditRow| row.mean_cost);
            let fresh = libm::pow(l_k / r, 2.0 - dim as f64) * r * r;
            let carried = libm::pow(r / l_k, dim as f64) * previous;
            (inc.mean() / (fresh + carried)).max(0.0)
        };
        smallest_c = smallest_c.max(required_c);
        rows.push(AuditRow {
            k,
            l_k,
            mean_cost: e.mean(),
            stderr_cost: e.stderr(),
            mean_increment: inc.mean(),
            stderr_increment: inc.stderr(),
            mean_diagonal: diag.mean(),
            mean_cross: cross.mean(),
            stderr_cross: cross.stderr(),
            required_c,
        });
    }
    let total = moments(&|p| p.total);
    Ok(AuditTable {
        rows,
        smallest_c,
        mean_total: total.mean(),
        stderr_total: total.stderr(),
    })
}
