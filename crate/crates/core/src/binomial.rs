//! Counting statistics of points in sub-boxes: the binomial moments and the
//! concentration bounds for the relative fluctuation `rho = N_Q / (N theta)`.

use crate::error::{Error, Result};
use crate::geometry::{DyadicBox, PointCloud};

/// Number of points `n_q` of an `n_total`-point cloud lying in a box of
/// volume fraction `theta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxCount {
    pub n_q: usize,
    pub n_total: usize,
    pub theta: f64,
}

impl BoxCount {
    pub fn new(n_q: usize, n_total: usize, theta: f64) -> Result<Self> {
        if n_q > n_total {
            return Err(Error::domain("box count exceeds the total count"));
        }
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::domain("volume fraction must lie in [0, 1]"));
        }
        Ok(BoxCount {
            n_q,
            n_total,
            theta,
        })
    }

    /// `N theta`.
    pub fn expected(&self) -> f64 {
        self.n_total as f64 * self.theta
    }

    /// `rho = N_Q / (N theta)`.
    pub fn rho(&self) -> f64 {
        self.n_q as f64 / self.expected()
    }
}

/// Counts the points of `cloud` inside `q` (half-open, closed on the outer
/// boundary, so counts over a dyadic partition sum to `N`).
pub fn count_in_box(cloud: &PointCloud, q: &DyadicBox) -> Result<BoxCount> {
    if q.dim() != cloud.dim() {
        return Err(Error::domain("box and cloud dimensions differ"));
    }
    let n_q = cloud.points().filter(|p| q.contains(p, cloud.side())).count();
    BoxCount::new(n_q, cloud.len(), q.volume_fraction())
}

/// Mean, variance and fourth-central-moment bound of `Binomial(N, theta)`:
/// `(N theta, N theta (1 - theta), 3 (N theta (1 - theta))^2 + N theta (1 - theta))`.
pub fn moment_bounds(n_total: usize, theta: f64) -> Result<(f64, f64, f64)> {
    if n_total == 0 {
        return Err(Error::domain("moment bounds need N >= 1"));
    }
    if !(0.0..=1.0).contains(&theta) {
        return Err(Error::domain("volume fraction must lie in [0, 1]"));
    }
    let n = n_total as f64;
    let var = n * theta * (1.0 - theta);
    Ok((n * theta, var, 3.0 * var * var + var))
}

/// Exact fourth central moment of `Binomial(N, theta)`:
/// `N q (1 + 3 (N - 2) q)` with `q = theta (1 - theta)`.
pub fn binomial_fourth_central_moment(n_total: usize, theta: f64) -> f64 {
    let n = n_total as f64;
    let q = theta * (1.0 - theta);
    n * q * (1.0 + 3.0 * (n - 2.0) * q)
}

/// Empirical concentration statistics of a set of box counts sharing
/// `(N, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub n_total: usize,
    pub theta: f64,
    pub samples: usize,
    /// `(E|rho - 1|^2)^{1/2}`.
    pub rho_l2: f64,
    /// `(E|rho - 1|^4)^{1/4}`.
    pub rho_l4: f64,
    /// `(E[(I(N_Q != 0) / N_Q)^2])^{1/2}`.
    pub inverse_count: f64,
    /// `C / sqrt(N theta)`.
    pub fluctuation_bound: f64,
    /// `C / (N theta)`.
    pub inverse_bound: f64,
    pub constant: f64,
    pub rho_l2_ok: bool,
    pub rho_l4_ok: bool,
    pub inverse_ok: bool,
}

impl ConcentrationReport {
    pub fn passed(&self) -> bool {
        self.rho_l2_ok && self.rho_l4_ok && self.inverse_ok
    }
}

pub const DEFAULT_CONCENTRATION_CONSTANT: f64 = 10.0;

pub fn concentration_check(samples: &[BoxCount], constant: f64) -> Result<ConcentrationReport> {
    let first = samples
        .first()
        .ok_or_else(|| Error::domain("concentration check needs at least one sample"))?;
    let (n_total, theta) = (first.n_total, first.theta);
    if samples
        .iter()
        .any(|s| s.n_total != n_total || s.theta != theta)
    {
        return Err(Error::domain("samples must share N and theta"));
    }
    let mean_count = first.expected();
    if mean_count < 1.0 {
        return Err(Error::domain("concentration bounds require N theta >= 1"));
    }

    let (mut m2, mut m4, mut inv2) = (0.0, 0.0, 0.0);
    for s in samples {
        let dev = s.rho() - 1.0;
        let dev2 = dev * dev;
        m2 += dev2;
        m4 += dev2 * dev2;
        if s.n_q > 0 {
            let inv = 1.0 / s.n_q as f64;
            inv2 += inv * inv;
        }
    }
    let t = samples.len() as f64;
    let rho_l2 = libm::sqrt(m2 / t);
    let rho_l4 = libm::sqrt(libm::sqrt(m4 / t));
    let inverse_count = libm::sqrt(inv2 / t);
    let fluctuation_bound = constant / libm::sqrt(mean_count);
    let inverse_bound = constant / mean_count;
    Ok(ConcentrationReport {
        n_total,
        theta,
        samples: samples.len(),
        rho_l2,
        rho_l4,
        inverse_count,
        fluctuation_bound,
        inverse_bound,
        constant,
        rho_l2_ok: rho_l2 <= fluctuation_bound,
        rho_l4_ok: rho_l4 <= fluctuation_bound,
        inverse_ok: inverse_count <= inverse_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::sample_uniform;
    use alloc::vec;
    use alloc::vec::Vec;

    #[test]
    fn moment_bound_values() {
        let (m, v, k) = moment_bounds(100, 0.25).unwrap();
        assert_eq!((m, v, k), (25.0, 18.75, 1073.4375));
        assert_eq!(moment_bounds(37, 0.0).unwrap(), (0.0, 0.0, 0.0));
        assert_eq!(moment_bounds(37, 1.0).unwrap(), (37.0, 0.0, 0.0));
        assert!(moment_bounds(0, 0.5).is_err());
        assert!(moment_bounds(3, 1.5).is_err());
    }

    #[test]
    fn fourth_moment_matches_pmf_summation() {
        // direct sum over the binomial pmf
        for &(n, theta) in &[(1usize, 0.3f64), (5, 0.5), (12, 0.125), (30, 0.7)] {
            let mean = n as f64 * theta;
            let mut pmf = libm::pow(1.0 - theta, n as f64);
            let mut m4 = 0.0;
            for k in 0..=n {
                if k > 0 {
                    pmf *= (n - k + 1) as f64 / k as f64 * theta / (1.0 - theta);
                }
                m4 += pmf * libm::pow(k as f64 - mean, 4.0);
            }
            let closed = binomial_fourth_central_moment(n, theta);
            assert!((m4 - closed).abs() <= 1e-10 * closed.max(1.0), "{n} {theta}");
        }
    }

    #[test]
    fn counts_inside_and_partition() {
        let c = PointCloud::from_points(2, 1.0, &[[0.1, 0.1], [0.2, 0.3], [0.4, 0.2]]).unwrap();
        let q = DyadicBox::new(vec![1, 1], vec![0, 0]).unwrap();
        assert_eq!(count_in_box(&c, &q).unwrap().n_q, 3);

        let cloud = sample_uniform(500, 1.0, 3, 4).unwrap();
        let mut boxes = vec![DyadicBox::root(3)];
        for level in 0..7 {
            boxes = boxes
                .iter()
                .flat_map(|b| {
                    let (lo, hi) = b.split(level % 3);
                    [lo, hi]
                })
                .collect();
            let total: usize = boxes
                .iter()
                .map(|b| count_in_box(&cloud, b).unwrap().n_q)
                .sum();
            assert_eq!(total, 500);
        }
    }

    #[test]
    fn boundary_points_counted_once() {
        let c = PointCloud::from_points(1, 1.0, &[[0.0], [0.5], [1.0]]).unwrap();
        let (lo, hi) = DyadicBox::root(1).split(0);
        assert_eq!(count_in_box(&c, &lo).unwrap().n_q, 1);
        assert_eq!(count_in_box(&c, &hi).unwrap().n_q, 2);
    }

    #[test]
    fn concentration_of_exact_counts_is_zero() {
        let s: Vec<BoxCount> = (0..10).map(|_| BoxCount::new(25, 100, 0.25).unwrap()).collect();
        let r = concentration_check(&s, DEFAULT_CONCENTRATION_CONSTANT).unwrap();
        assert_eq!(r.rho_l2, 0.0);
        assert_eq!(r.rho_l4, 0.0);
        assert!(r.passed());
    }

    #[test]
    fn concentration_rejects_sparse_boxes() {
        let s = [BoxCount::new(0, 10, 0.05).unwrap()];
        assert!(concentration_check(&s, 10.0).is_err());
        let mixed = [
            BoxCount::new(3, 10, 0.5).unwrap(),
            BoxCount::new(3, 11, 0.5).unwrap(),
        ];
        assert!(concentration_check(&mixed, 10.0).is_err());
        assert!(BoxCount::new(4, 3, 0.5).is_err());
    }
}
