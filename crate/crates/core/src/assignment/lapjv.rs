//! Dense Jonker-Volgenant solver: column reduction with reduction transfer,
//! then Dijkstra-type shortest augmenting paths for the rows still free.
//!
//! Augmenting row reduction is left out. On squared-distance costs of
//! random clouds its near-ties make it cycle up to its `n^2` iteration cap,
//! which at `n = 4096` costs ten times the whole augmentation phase.

use alloc::vec;
use alloc::vec::Vec;

use super::{CostMatrix, TransportPlan};
use crate::error::Result;

const NONE: usize = usize::MAX;

/// Exactly optimal assignment (not a heuristic).
pub fn match_solver(c: &CostMatrix) -> Result<TransportPlan> {
    c.check_finite()?;
    let perm = solve(c.n(), c.entries());
    TransportPlan::from_permutation(perm, c)
}

/// Row-to-column assignment minimizing the total of a dense row-major
/// `n x n` cost matrix.
pub(crate) fn solve(n: usize, cost: &[f64]) -> Vec<usize> {
    debug_assert_eq!(cost.len(), n * n);
    if n == 1 {
        return vec![0];
    }
    let mut lap = Lap {
        n,
        cost,
        x: vec![NONE; n],
        y: vec![NONE; n],
        v: vec![f64::INFINITY; n],
    };
    let free = lap.column_reduction();
    if !free.is_empty() {
        lap.augment(&free);
    }
    lap.x
}

struct Lap<'a> {
    n: usize,
    cost: &'a [f64],
    /// row -> column
    x: Vec<usize>,
    /// column -> row
    y: Vec<usize>,
    /// column potentials
    v: Vec<f64>,
}

impl Lap<'_> {
    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.cost[i * self.n..(i + 1) * self.n]
    }

    /// Column reduction and reduction transfer; returns the free rows.
    fn column_reduction(&mut self) -> Vec<usize> {
        let n = self.n;
        for i in 0..n {
            let row = &self.cost[i * n..(i + 1) * n];
            for (j, &c) in row.iter().enumerate() {
                if c < self.v[j] {
                    self.v[j] = c;
                    self.y[j] = i;
                }
            }
        }
        let mut unique = vec![true; n];
        for j in (0..n).rev() {
            let i = self.y[j];
            if self.x[i] == NONE {
                self.x[i] = j;
            } else {
                unique[i] = false;
                self.y[j] = NONE;
            }
        }
        let mut free = Vec::new();
        for i in 0..n {
            if self.x[i] == NONE {
                free.push(i);
            } else if unique[i] {
                let j = self.x[i];
                let row = self.row(i);
                let min = (0..n)
                    .filter(|&j2| j2 != j)
                    .map(|j2| row[j2] - self.v[j2])
                    .fold(f64::INFINITY, f64::min);
                self.v[j] -= min;
            }
        }
        free
    }

    fn augment(&mut self, free: &[usize]) {
        let n = self.n;
        let mut pred = vec![0usize; n];
        let mut cols = vec![0usize; n];
        let mut dist = vec![0.0f64; n];
        for &start in free {
            let mut j = self.shortest_path(start, &mut pred, &mut cols, &mut dist);
            loop {
                let i = pred[j];
                self.y[j] = i;
                j = core::mem::replace(&mut self.x[i], j);
                if i == start {
                    break;
                }
            }
        }
    }

    /// Dijkstra over columns from free row `start`; updates the potentials of
    /// the settled columns and returns the free column reached.
    fn shortest_path(
        &mut self,
        start: usize,
        pred: &mut [usize],
        cols: &mut [usize],
        dist: &mut [f64],
    ) -> usize {
        let n = self.n;
        let row = self.row(start);
        for j in 0..n {
            cols[j] = j;
            pred[j] = start;
            dist[j] = row[j] - self.v[j];
        }
        let (mut lo, mut hi) = (0usize, 0usize);
        let mut n_ready = 0;
        let mut final_j = NONE;
        while final_j == NONE {
            if lo == hi {
                n_ready = lo;
                hi = find_minimal(n, lo, dist, cols);
                for &j in &cols[lo..hi] {
                    if self.y[j] == NONE {
                        final_j = j;
                    }
                }
            }
            if final_j == NONE {
                final_j = self.scan(&mut lo, &mut hi, dist, cols, pred);
            }
        }
        let mind = dist[cols[lo]];
        for &j in &cols[..n_ready] {
            self.v[j] += dist[j] - mind;
        }
        final_j
    }

    fn scan(
        &self,
        plo: &mut usize,
        phi: &mut usize,
        dist: &mut [f64],
        cols: &mut [usize],
        pred: &mut [usize],
    ) -> usize {
        let n = self.n;
        let (mut lo, mut hi) = (*plo, *phi);
        while lo != hi {
            let j = cols[lo];
            lo += 1;
            let i = self.y[j];
            let row = self.row(i);
            let mind = dist[j];
            let h = row[j] - self.v[j] - mind;
            for k in hi..n {
                let j = cols[k];
                let reduced = row[j] - self.v[j] - h;
                if reduced < dist[j] {
                    dist[j] = reduced;
                    pred[j] = i;
                    if reduced == mind {
                        if self.y[j] == NONE {
                            return j;
                        }
                        cols[k] = cols[hi];
                        cols[hi] = j;
                        hi += 1;
                    }
                }
            }
        }
        *plo = lo;
        *phi = hi;
        NONE
    }
}

/// Moves the columns of minimal distance among `cols[lo..]` to the front of
/// that range and returns the end of the block.
fn find_minimal(n: usize, lo: usize, dist: &[f64], cols: &mut [usize]) -> usize {
    let mut hi = lo + 1;
    let mut mind = dist[cols[lo]];
    for k in lo + 1..n {
        let j = cols[k];
        if dist[j] <= mind {
            if dist[j] < mind {
                hi = lo;
                mind = dist[j];
            }
            cols[k] = cols[hi];
            cols[hi] = j;
            hi += 1;
        }
    }
    hi
}
