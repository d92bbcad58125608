//! Transportation simplex over the Birkhoff polytope (unit supplies and
//! demands). The basis is a spanning tree of the complete bipartite graph on
//! rows and columns; Bland's rule on both the entering and the leaving cell
//! prevents cycling on this highly degenerate problem.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{CostMatrix, Coupling, TransportPlan};
use crate::error::{Error, Result};

/// Largest `N` accepted by the dense LP.
pub const LP_LIMIT: usize = 64;

const MAX_PIVOTS: usize = 2_000_000;

/// Optimal coupling `pi` in the Birkhoff polytope minimizing
/// `(1/N) sum c(n, m) pi(n, m)`.
pub fn match_lp(c: &CostMatrix) -> Result<TransportPlan> {
    let n = c.n();
    if n > LP_LIMIT {
        return Err(Error::TooLarge { n, limit: LP_LIMIT });
    }
    c.check_finite()?;
    let flow = Tableau::new(c).solve()?;
    let entries = flow
        .iter()
        .enumerate()
        .filter(|(_, f)| **f > 0.0)
        .map(|(k, &f)| (k / n, k % n, f))
        .collect();
    TransportPlan::from_coupling(Coupling::new(n, entries)?, c)
}

struct Tableau<'a> {
    c: &'a CostMatrix,
    n: usize,
    /// flow on every cell, row-major
    flow: Vec<f64>,
    basic: Vec<bool>,
}

impl<'a> Tableau<'a> {
    /// North-west corner start: the staircase `(i, i)`, `(i, i + 1)`.
    fn new(c: &'a CostMatrix) -> Self {
        let n = c.n();
        let mut flow = vec![0.0; n * n];
        let mut basic = vec![false; n * n];
        for i in 0..n {
            flow[i * n + i] = 1.0;
            basic[i * n + i] = true;
            if i + 1 < n {
                basic[i * n + i + 1] = true;
            }
        }
        Tableau { c, n, flow, basic }
    }

    fn solve(mut self) -> Result<Vec<f64>> {
        let n = self.n;
        let scale = self.c.entries().iter().fold(0.0f64, |a, &b| a.max(b));
        let tol = 1e-12 * (1.0 + scale);
        for _ in 0..MAX_PIVOTS {
            let adj = self.adjacency();
            let (u, v) = self.potentials(&adj);
            let entering = (0..n * n).find(|&k| {
                !self.basic[k] && self.c.entries()[k] - u[k / n] - v[k % n] < -tol
            });
            let Some(entering) = entering else {
                return Ok(self.flow);
            };
            self.pivot(entering, &adj);
        }
        Err(Error::NonConvergence {
            iterations: MAX_PIVOTS,
        })
    }

    /// Tree adjacency; node `i < n` is row `i`, node `n + j` is column `j`.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let n = self.n;
        let mut adj = vec![Vec::new(); 2 * n];
        for k in (0..n * n).filter(|&k| self.basic[k]) {
            let (i, j) = (k / n, k % n);
            adj[i].push(n + j);
            adj[n + j].push(i);
        }
        adj
    }

    /// Dual variables with `u_0 = 0` and `u_i + v_j = c_ij` on the tree.
    fn potentials(&self, adj: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut pot = vec![f64::NAN; 2 * n];
        pot[0] = 0.0;
        let mut queue = VecDeque::from([0usize]);
        while let Some(a) = queue.pop_front() {
            for &b in &adj[a] {
                if pot[b].is_nan() {
                    let cell = if a < n { self.c.get(a, b - n) } else { self.c.get(b, a - n) };
                    pot[b] = cell - pot[a];
                    queue.push_back(b);
                }
            }
        }
        debug_assert!(pot.iter().all(|p| !p.is_nan()), "basis is not spanning");
        let v = pot.split_off(n);
        (pot, v)
    }

    fn pivot(&mut self, entering: usize, adj: &[Vec<usize>]) {
        let n = self.n;
        let (row, col) = (entering / n, entering % n);
        // tree path from column node back to the row node
        let mut parent = vec![usize::MAX; 2 * n];
        parent[n + col] = n + col;
        let mut queue = VecDeque::from([n + col]);
        while let Some(a) = queue.pop_front() {
            if a == row {
                break;
            }
            for &b in &adj[a] {
                if parent[b] == usize::MAX {
                    parent[b] = a;
                    queue.push_back(b);
                }
            }
        }
        let mut path = vec![row];
        let mut node = row;
        while node != n + col {
            node = parent[node];
            path.push(node);
        }
        // path runs row -> ... -> column; walking it backwards from the
        // column, cells alternate -, +, -, ...
        let cell = |a: usize, b: usize| {
            if a < n {
                a * n + (b - n)
            } else {
                b * n + (a - n)
            }
        };
        let mut plus = vec![entering];
        let mut minus = Vec::new();
        for (step, w) in path.windows(2).rev().enumerate() {
            let k = cell(w[0], w[1]);
            if step % 2 == 0 {
                minus.push(k);
            } else {
                plus.push(k);
            }
        }
        let theta = minus.iter().map(|&k| self.flow[k]).fold(f64::INFINITY, f64::min);
        let leaving = minus
            .iter()
            .copied()
            .filter(|&k| self.flow[k] == theta)
            .min()
            .expect("cycle has a decreasing cell");
        for &k in &plus {
            self.flow[k] += theta;
        }
        for &k in &minus {
            self.flow[k] -= theta;
        }
        self.basic[entering] = true;
        self.basic[leaving] = false;
    }
}
