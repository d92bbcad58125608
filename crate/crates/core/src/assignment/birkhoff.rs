//! Rounding a doubly stochastic coupling to a permutation by repeatedly
//! cancelling cycles of fractional entries.
//!
//! A fractional entry forces another fractional entry in its column, which
//! forces another in that row, and so on until the walk closes an even
//! cycle. Shifting mass `+eps` on alternate cycle cells and `-eps` on the
//! others keeps every margin fixed, and the objective changes linearly in
//! `eps`. Moving in the non-increasing direction until a cell hits zero
//! removes at least one fractional entry per step.

use alloc::vec;
use alloc::vec::Vec;

use super::{CostMatrix, PlanKind, TransportPlan};
use crate::error::{Error, Result};

const SNAP: f64 = 1e-12;

/// A permutation plan whose cost does not exceed the coupling's.
pub fn round_to_permutation(plan: &TransportPlan, c: &CostMatrix) -> Result<TransportPlan> {
    let coupling = match &plan.kind {
        PlanKind::Permutation(_) => return Ok(plan.clone()),
        PlanKind::Coupling(k) => k,
    };
    let n = c.n();
    if coupling.n() != n {
        return Err(Error::domain("coupling and cost matrix sizes differ"));
    }
    if !coupling.is_bistochastic(1e-9) {
        return Err(Error::domain("input is not doubly stochastic"));
    }
    let mut w = coupling.to_dense();
    loop {
        for e in w.iter_mut() {
            if *e < SNAP {
                *e = 0.0;
            } else if *e > 1.0 - SNAP {
                *e = 1.0;
            }
        }
        let Some(start) = w.iter().position(|&e| e > 0.0 && e < 1.0) else {
            break;
        };
        let cycle = fractional_cycle(&w, n, start / n);
        let (plus, minus): (Vec<usize>, Vec<usize>) = {
            let mut p = Vec::new();
            let mut m = Vec::new();
            for (k, &cell) in cycle.iter().enumerate() {
                if k % 2 == 0 {
                    p.push(cell);
                } else {
                    m.push(cell);
                }
            }
            (p, m)
        };
        let slope: f64 = plus.iter().map(|&k| c.entries()[k]).sum::<f64>()
            - minus.iter().map(|&k| c.entries()[k]).sum::<f64>();
        let (up, down) = if slope <= 0.0 { (&plus, &minus) } else { (&minus, &plus) };
        let eps = down.iter().map(|&k| w[k]).fold(f64::INFINITY, f64::min);
        for &k in up {
            w[k] += eps;
        }
        for &k in down {
            w[k] -= eps;
        }
    }
    let mut perm = vec![usize::MAX; n];
    for (k, &e) in w.iter().enumerate() {
        if e == 1.0 {
            assert!(perm[k / n] == usize::MAX, "row carries two unit entries");
            perm[k / n] = k % n;
        }
    }
    TransportPlan::from_permutation(perm, c)
}

/// Cells of an even cycle through fractional entries, in walk order,
/// starting from a row containing one.
fn fractional_cycle(w: &[f64], n: usize, start_row: usize) -> Vec<usize> {
    let fractional = |k: usize| w[k] > 0.0 && w[k] < 1.0;
    // nodes: rows 0..n, columns n..2n
    let mut first_visit = vec![usize::MAX; 2 * n];
    let mut nodes = vec![start_row];
    let mut cells: Vec<usize> = Vec::new();
    first_visit[start_row] = 0;
    loop {
        let here = *nodes.last().unwrap();
        let came_by = cells.last().copied();
        let next_cell = if here < n {
            (0..n)
                .map(|j| here * n + j)
                .find(|&k| fractional(k) && Some(k) != came_by)
        } else {
            (0..n)
                .map(|i| i * n + (here - n))
                .find(|&k| fractional(k) && Some(k) != came_by)
        };
        let k = next_cell.expect("fractional entry without a partner on its line");
        let next = if here < n { n + k % n } else { k / n };
        cells.push(k);
        if first_visit[next] != usize::MAX {
            return cells.split_off(first_visit[next]);
        }
        first_visit[next] = nodes.len();
        nodes.push(next);
    }
}
