use alloc::vec;
use alloc::vec::Vec;

use super::{CostMatrix, TransportPlan};
use crate::error::{Error, Result};

/// Largest `N` accepted by exhaustive enumeration.
pub const BRUTE_FORCE_LIMIT: usize = 10;

/// Exact optimum by enumerating all `N!` bijections.
pub fn match_bruteforce(c: &CostMatrix) -> Result<TransportPlan> {
    let n = c.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let mut search = Search {
        c,
        used: vec![false; n],
        current: Vec::with_capacity(n),
        best: Vec::new(),
        best_sum: f64::INFINITY,
    };
    search.descend(0.0);
    TransportPlan::from_permutation(search.best, c)
}

struct Search<'a> {
    c: &'a CostMatrix,
    used: Vec<bool>,
    current: Vec<usize>,
    best: Vec<usize>,
    best_sum: f64,
}

impl Search<'_> {
    fn descend(&mut self, partial: f64) {
        let row = self.current.len();
        if row == self.c.n() {
            if partial < self.best_sum {
                self.best_sum = partial;
                self.best.clone_from(&self.current);
            }
            return;
        }
        for col in 0..self.c.n() {
            if self.used[col] {
                continue;
            }
            self.used[col] = true;
            self.current.push(col);
            self.descend(partial + self.c.get(row, col));
            self.current.pop();
            self.used[col] = false;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::cost_matrix;
    use crate::geometry::{sample_uniform, PointCloud};

    #[test]
    fn identical_clouds_give_identity() {
        let x = sample_uniform(6, 1.0, 2, 3).unwrap();
        let plan = match_bruteforce(&cost_matrix(&x, &x).unwrap()).unwrap();
        assert_eq!(plan.cost, 0.0);
        assert_eq!(plan.permutation().unwrap(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn single_point() {
        let x = PointCloud::from_points(2, 1.0, &[[0.1, 0.2]]).unwrap();
        let y = PointCloud::from_points(2, 1.0, &[[0.4, 0.6]]).unwrap();
        let plan = match_bruteforce(&cost_matrix(&x, &y).unwrap()).unwrap();
        assert!((plan.cost - 0.25).abs() < 1e-15);
    }

    #[test]
    fn refuses_large_instances() {
        let x = sample_uniform(11, 1.0, 1, 3).unwrap();
        let err = match_bruteforce(&cost_matrix(&x, &x).unwrap()).unwrap_err();
        assert_eq!(err, Error::TooLarge { n: 11, limit: 10 });
        assert!(alloc::format!("{err}").contains("10"));
    }
}
