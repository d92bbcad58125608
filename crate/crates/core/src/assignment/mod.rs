//! Exact matching cost `(1/N) min_sigma sum_n |Y_sigma(n) - X_n|^2`.
//!
//! Three independent routes are provided: exhaustive enumeration for tiny
//! instances, a shortest-augmenting-path assignment solver, and the
//! transportation LP over doubly stochastic matrices. Every cost carries the
//! `1/N` normalization.

mod birkhoff;
mod brute;
mod lapjv;
mod simplex;

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

pub use birkhoff::round_to_permutation;
pub use brute::{match_bruteforce, BRUTE_FORCE_LIMIT};
pub use lapjv::match_solver;
pub use simplex::{match_lp, LP_LIMIT};

/// Dense `N x N` matrix of squared distances; entry `(n, m)` is `|Y_m - X_n|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl CostMatrix {
    /// Wraps a row-major `n x n` matrix of nonnegative entries.
    pub fn from_entries(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("cost matrix must be at least 1 x 1"));
        }
        if entries.len() != n * n {
            return Err(Error::domain("cost matrix entry count is not n^2"));
        }
        if entries.iter().any(|c| *c < 0.0) {
            return Err(Error::domain("cost entries must be nonnegative"));
        }
        Ok(CostMatrix { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.entries.iter().all(|c| c.is_finite()) {
            Ok(())
        } else {
            Err(Error::domain("cost matrix has non-finite entries"))
        }
    }

    /// `(1/N) sum_n c(n, sigma(n))`.
    pub fn permutation_cost(&self, perm: &[usize]) -> f64 {
        let total: f64 = perm.iter().enumerate().map(|(n, &m)| self.get(n, m)).sum();
        total / self.n as f64
    }

    /// `(1/N) sum_{n,m} c(n, m) pi(n, m)`.
    pub fn coupling_cost(&self, coupling: &Coupling) -> f64 {
        let total: f64 = coupling
            .entries()
            .iter()
            .map(|&(n, m, w)| self.get(n, m) * w)
            .sum();
        total / self.n as f64
    }
}

/// Squared-distance cost matrix between two clouds of equal size and shape.
pub fn cost_matrix(x: &PointCloud, y: &PointCloud) -> Result<CostMatrix> {
    if x.len() != y.len() {
        return Err(Error::domain(alloc::format!(
            "clouds have different sizes ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    if x.dim() != y.dim() || x.side() != y.side() {
        return Err(Error::domain("clouds live in different boxes"));
    }
    let n = x.len();
    let mut entries = Vec::with_capacity(n * n);
    for p in x.points() {
        for q in y.points() {
            entries.push(squared_distance(p, q));
        }
    }
    CostMatrix::from_entries(n, entries)
}

#[inline]
pub fn squared_distance(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// A sparse nonnegative `N x N` matrix, stored as `(row, col, weight)` with
/// zero weights dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Coupling {
    pub fn new(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Result<Self> {
        if entries.iter().any(|&(r, c, w)| r >= n || c >= n || !(w >= 0.0)) {
            return Err(Error::domain("coupling entry out of range or negative"));
        }
        entries.retain(|e| e.2 > 0.0);
        entries.sort_by_key(|e| (e.0, e.1));
        Ok(Coupling { n, entries })
    }

    pub fn from_dense(n: usize, dense: &[f64]) -> Result<Self> {
        if dense.len() != n * n {
            return Err(Error::domain("dense coupling has the wrong size"));
        }
        let entries = dense
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(k, &w)| (k / n, k % n, w))
            .collect();
        Coupling::new(n, entries)
    }

    pub fn from_permutation(perm: &[usize]) -> Self {
        Coupling {
            n: perm.len(),
            entries: perm.iter().enumerate().map(|(r, &c)| (r, c, 1.0)).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.n * self.n];
        for &(r, c, w) in &self.entries {
            dense[r * self.n + c] += w;
        }
        dense
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for &(r, _, w) in &self.entries {
            s[r] += w;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n];
        for &(_, c, w) in &self.entries {
            s[c] += w;
        }
        s
    }

    /// Membership in the Birkhoff polytope up to `tol` on every margin.
    pub fn is_bistochastic(&self, tol: f64) -> bool {
        self.row_sums()
            .iter()
            .chain(self.col_sums().iter())
            .all(|s| (s - 1.0).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanKind {
    /// `perm[n] = m` matches `X_n` with `Y_m`.
    Permutation(Vec<usize>),
    Coupling(Coupling),
}

/// A matching or coupling together with its normalized quadratic cost.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportPlan {
    pub kind: PlanKind,
    pub cost: f64,
}

impl TransportPlan {
    pub fn from_permutation(perm: Vec<usize>, c: &CostMatrix) -> Result<Self> {
        if perm.len() != c.n() || !is_permutation(&perm) {
            return Err(Error::domain("not a bijection of the right size"));
        }
        let cost = c.permutation_cost(&perm);
        Ok(TransportPlan {
            kind: PlanKind::Permutation(perm),
            cost,
        })
    }

    pub fn from_coupling(coupling: Coupling, c: &CostMatrix) -> Result<Self> {
        if coupling.n() != c.n() {
            return Err(Error::domain("coupling and cost matrix sizes differ"));
        }
        let cost = c.coupling_cost(&coupling);
        Ok(TransportPlan {
            kind: PlanKind::Coupling(coupling),
            cost,
        })
    }

    pub fn permutation(&self) -> Option<&[usize]> {
        match &self.kind {
            PlanKind::Permutation(p) => Some(p),
            PlanKind::Coupling(_) => None,
        }
    }

    pub fn coupling(&self) -> Option<&Coupling> {
        match &self.kind {
            PlanKind::Coupling(c) => Some(c),
            PlanKind::Permutation(_) => None,
        }
    }

    /// The plan as a coupling; permutations become permutation matrices.
    pub fn as_coupling(&self) -> Coupling {
        match &self.kind {
            PlanKind::Coupling(c) => c.clone(),
            PlanKind::Permutation(p) => Coupling::from_permutation(p),
        }
    }

    /// Objective recomputed from the plan itself.
    pub fn recompute_cost(&self, c: &CostMatrix) -> f64 {
        match &self.kind {
            PlanKind::Permutation(p) => c.permutation_cost(p),
            PlanKind::Coupling(k) => c.coupling_cost(k),
        }
    }
}

pub fn is_permutation(perm: &[usize]) -> bool {
    let mut seen = vec![false; perm.len()];
    perm.iter().all(|&m| m < perm.len() && !core::mem::replace(&mut seen[m], true))
}
