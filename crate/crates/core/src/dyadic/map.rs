//! The composed map `T = T_* o T_{k_*} o ... o T_1` and the coupling of two
//! clouds through their maps.
//!
//! Each `S_k = T_k o ... o T_1` is affine and diagonal on the preimage of
//! every level-`k` box, and that preimage is itself a box: the preimage of
//! box `Q` is cut along the split coordinate at the fraction
//! `N_{Q_-} / N_Q`. The cells `T^{-1}(X_n)` are therefore boxes, which makes
//! the map cost and the coupling computable exactly.

use alloc::vec;
use alloc::vec::Vec;

use super::{apply_block, split_axis, DyadicTree};
use crate::assignment::{squared_distance, Coupling, PlanKind, TransportPlan};
use crate::error::{Error, Result};
use crate::geometry::rng_from_seed;
use crate::stats::Moments;
use rand::Rng;

/// Smallest probe count accepted by the Monte Carlo estimators.
pub const MIN_PROBES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchicalMap {
    tree: DyadicTree,
    /// `T^{-1}(X_n)` as `[cell_lo, cell_hi]`, row-major by point.
    cell_lo: Vec<f64>,
    cell_hi: Vec<f64>,
}

impl HierarchicalMap {
    pub fn new(tree: DyadicTree) -> Self {
        let d = tree.dim();
        let n = tree.len();
        let k_star = tree.k_star();
        let (plo, phi) = preimage_boxes(&tree, k_star, |_, _, _| {});
        let mut cell_lo = vec![0.0; n * d];
        let mut cell_hi = vec![0.0; n * d];
        for leaf in 0..1usize << k_star {
            let members = tree.leaf_points(leaf);
            let lo = &plo[leaf * d..(leaf + 1) * d];
            let hi = &phi[leaf * d..(leaf + 1) * d];
            let m = members.len();
            for (j, &p) in members.iter().enumerate() {
                let cl = &mut cell_lo[p * d..(p + 1) * d];
                cl.copy_from_slice(lo);
                let ch = &mut cell_hi[p * d..(p + 1) * d];
                ch.copy_from_slice(hi);
                let w = hi[0] - lo[0];
                cl[0] = lo[0] + w * j as f64 / m as f64;
                ch[0] = if j + 1 == m { hi[0] } else { lo[0] + w * (j + 1) as f64 / m as f64 };
            }
        }
        HierarchicalMap {
            tree,
            cell_lo,
            cell_hi,
        }
    }

    pub fn tree(&self) -> &DyadicTree {
        &self.tree
    }

    /// Corners of the cell `T^{-1}(X_n)`.
    pub fn cell(&self, n: usize) -> (&[f64], &[f64]) {
        let d = self.tree.dim();
        (&self.cell_lo[n * d..(n + 1) * d], &self.cell_hi[n * d..(n + 1) * d])
    }

    pub fn cell_volume(&self, n: usize) -> f64 {
        let (lo, hi) = self.cell(n);
        lo.iter().zip(hi).map(|(a, b)| b - a).product()
    }

    /// `L^d prod_k (N_{Q_k} / N_{Q_{k-1}}) / N_{Q_*}` along the path of
    /// point `n`; equals `L^d / N`.
    pub fn preimage_volume_product(&self, n: usize) -> f64 {
        let t = &self.tree;
        let leaf = t.leaf_of(n);
        let k_star = t.k_star();
        let mut v = libm::pow(t.side(), t.dim() as f64);
        for k in 1..=k_star {
            let child = leaf >> (k_star - k);
            v *= t.count(k, child) as f64 / t.count(k - 1, child >> 1) as f64;
        }
        v / t.count(k_star, leaf) as f64
    }

    /// Index `n` with `T(x) = X_n`, found by descending the tree and applying
    /// each level's block map; `None` where `T_*` is the identity on an
    /// empty stopping box.
    pub fn evaluate(&self, x: &[f64]) -> Result<Option<usize>> {
        self.check_point(x)?;
        Ok(self.descend(x).0)
    }

    /// `T(x)`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_point(x)?;
        let (hit, _) = self.descend(x);
        Ok(match hit {
            Some(n) => self.tree.cloud().point(n).to_vec(),
            None => x.to_vec(),
        })
    }

    /// `S_{k_*}(x)` and the point `T_*` sends it to.
    fn descend(&self, x: &[f64]) -> (Option<usize>, Vec<f64>) {
        let t = &self.tree;
        let d = t.dim();
        let mut cur = x.to_vec();
        let mut lo = vec![0.0; d];
        let mut idx = 0usize;
        for k in 1..=t.k_star() {
            let c = split_axis(k, d);
            let lk = t.l_k(k);
            let parent = t.count(k - 1, idx);
            let lower_count = t.count(k, 2 * idx);
            let rho = if parent > 0 {
                2.0 * lower_count as f64 / parent as f64
            } else {
                1.0
            };
            let u = ((cur[c] - lo[c]) / lk).clamp(0.0, 2.0);
            let lower = u < rho || (u == rho && lower_count > 0);
            let image = lo[c] + lk * apply_block(rho, u);
            if lower {
                idx *= 2;
                cur[c] = image.clamp(lo[c], lo[c] + lk);
            } else {
                idx = 2 * idx + 1;
                lo[c] += lk;
                cur[c] = image.clamp(lo[c], lo[c] + lk);
            }
        }
        let members = t.leaf_points(idx);
        if members.is_empty() {
            return (None, cur);
        }
        let (_, sides) = t.box_bounds(t.k_star(), idx);
        let m = members.len();
        let slab = libm::floor((cur[0] - lo[0]) / sides[0] * m as f64);
        let j = if slab <= 0.0 { 0 } else { (slab as usize).min(m - 1) };
        (Some(members[j]), cur)
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        let side = self.tree.side();
        if x.len() != self.tree.dim() || x.iter().any(|v| !(0.0..=side).contains(v)) {
            return Err(Error::domain("probe point outside [0, L]^d"));
        }
        Ok(())
    }

    /// `(1/L^d) int |T(x) - x|^2 dx`, integrated exactly over the cells.
    pub fn cost(&self) -> f64 {
        let t = &self.tree;
        let total: f64 = (0..t.len())
            .map(|n| {
                let (lo, hi) = self.cell(n);
                let target = t.cloud().point(n);
                let vol: f64 = lo.iter().zip(hi).map(|(a, b)| b - a).product();
                vol * box_moment(lo, hi, target)
            })
            .sum();
        total / libm::pow(t.side(), t.dim() as f64)
    }

    /// Monte Carlo estimate of `cost()` from uniform probes, with its
    /// standard error.
    pub fn map_cost(&self, probes: usize, seed: u64) -> Result<(f64, f64)> {
        if probes < MIN_PROBES {
            return Err(Error::domain("at least 1000 probes are required"));
        }
        let t = &self.tree;
        let mut rng = rng_from_seed(seed);
        let mut x = vec![0.0; t.dim()];
        let mut m = Moments::new();
        for _ in 0..probes {
            for v in x.iter_mut() {
                *v = t.side() * rng.random::<f64>();
            }
            let cost = match self.descend(&x).0 {
                Some(n) => squared_distance(&x, t.cloud().point(n)),
                None => 0.0,
            };
            m.push(cost);
        }
        Ok((m.mean(), m.stderr()))
    }

    /// Largest `|T(x) - x|` over the cells of each stopping box relative to
    /// the diameter of that box; at most one.
    pub fn last_mile_ratio(&self) -> f64 {
        let t = &self.tree;
        let (plo, phi) = preimage_boxes(t, t.k_star(), |_, _, _| {});
        let d = t.dim();
        let mut worst = 0.0f64;
        for leaf in 0..1usize << t.k_star() {
            let (qlo, qs) = t.box_bounds(t.k_star(), leaf);
            let diam2: f64 = qs.iter().map(|s| s * s).sum();
            let (lo, hi) = (&plo[leaf * d..(leaf + 1) * d], &phi[leaf * d..(leaf + 1) * d]);
            for &p in t.leaf_points(leaf) {
                let (cl, ch) = self.cell(p);
                // image of the cell under S_{k_*} versus the point
                let far: f64 = (0..d)
                    .map(|i| {
                        let scale = if hi[i] > lo[i] { qs[i] / (hi[i] - lo[i]) } else { 0.0 };
                        let a = qlo[i] + (cl[i] - lo[i]) * scale;
                        let b = qlo[i] + (ch[i] - lo[i]) * scale;
                        let x = t.cloud().point(p)[i];
                        let m = (x - a).abs().max((x - b).abs());
                        m * m
                    })
                    .sum();
                worst = worst.max(libm::sqrt(far / diam2));
            }
        }
        worst
    }
}

/// `(1/|B|) int_B |x - target|^2 dx` for the box `B = [lo, hi]`.
pub(crate) fn box_moment(lo: &[f64], hi: &[f64], target: &[f64]) -> f64 {
    lo.iter()
        .zip(hi)
        .zip(target)
        .map(|((a, b), t)| {
            let mid = 0.5 * (a + b);
            let w = b - a;
            (t - mid) * (t - mid) + w * w / 12.0
        })
        .sum()
}

/// Preimage boxes `S_k^{-1}(Q)` of all boxes of level `level`, as row-major
/// lower and upper corners. `visit(k, lo, hi)` sees every level on the way.
pub(crate) fn preimage_boxes(
    tree: &DyadicTree,
    level: usize,
    mut visit: impl FnMut(usize, &[f64], &[f64]),
) -> (Vec<f64>, Vec<f64>) {
    let d = tree.dim();
    let mut lo = vec![0.0; d];
    let mut hi = vec![tree.side(); d];
    visit(0, &lo, &hi);
    for k in 1..=level {
        let c = split_axis(k, d);
        let parents = 1usize << (k - 1);
        let mut nlo = Vec::with_capacity(2 * parents * d);
        let mut nhi = Vec::with_capacity(2 * parents * d);
        for i in 0..parents {
            let (pl, ph) = (&lo[i * d..(i + 1) * d], &hi[i * d..(i + 1) * d]);
            let parent = tree.count(k - 1, i);
            let frac = if parent > 0 {
                tree.count(k, 2 * i) as f64 / parent as f64
            } else {
                0.5
            };
            let cut = if frac == 1.0 { ph[c] } else { pl[c] + (ph[c] - pl[c]) * frac };
            nlo.extend_from_slice(pl);
            nhi.extend_from_slice(ph);
            nhi[(2 * i) * d + c] = cut;
            nlo.extend_from_slice(pl);
            nhi.extend_from_slice(ph);
            nlo[(2 * i + 1) * d + c] = cut;
        }
        lo = nlo;
        hi = nhi;
        visit(k, &lo, &hi);
    }
    (lo, hi)
}

/// The coupling `pi_nm = (N / L^d) |T^{-1}(X_n) cap S^{-1}(Y_m)|` of two
/// clouds through their maps, with its cost.
pub fn couple_two_clouds(t: &HierarchicalMap, s: &HierarchicalMap) -> Result<TransportPlan> {
    check_compatible(t, s)?;
    let n = t.tree.len();
    let d = t.tree.dim();
    let scale = n as f64 / libm::pow(t.tree.side(), d as f64);
    // sweep along the first coordinate
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| s.cell(a).0[0].total_cmp(&s.cell(b).0[0]));
    let mut entries = Vec::new();
    let mut cost = 0.0;
    for a in 0..n {
        let (alo, ahi) = t.cell(a);
        for &b in &order {
            let (blo, bhi) = s.cell(b);
            if blo[0] >= ahi[0] {
                break;
            }
            let mut vol = 1.0;
            for i in 0..d {
                let w = ahi[i].min(bhi[i]) - alo[i].max(blo[i]);
                if w <= 0.0 {
                    vol = 0.0;
                    break;
                }
                vol *= w;
            }
            if vol > 0.0 {
                let w = vol * scale;
                cost += w * squared_distance(t.tree.cloud().point(a), s.tree.cloud().point(b));
                entries.push((a, b, w));
            }
        }
    }
    Ok(TransportPlan {
        kind: PlanKind::Coupling(Coupling::new(n, entries)?),
        cost: cost / n as f64,
    })
}

/// Common-probe Monte Carlo estimate of the coupling of two maps.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCoupling {
    /// Estimated `pi_nm`; margins equal one only up to sampling error.
    pub coupling: Coupling,
    pub cost: f64,
    pub stderr: f64,
    pub probes: usize,
}

/// Probes `x` uniformly and records the pair `(T(x), S(x))`.
pub fn couple_two_clouds_sampled(
    t: &HierarchicalMap,
    s: &HierarchicalMap,
    probes: usize,
    seed: u64,
) -> Result<SampledCoupling> {
    check_compatible(t, s)?;
    if probes < MIN_PROBES {
        return Err(Error::domain("at least 1000 probes are required"));
    }
    let n = t.tree.len();
    let d = t.tree.dim();
    let side = t.tree.side();
    let mut rng = rng_from_seed(seed);
    let mut hits = vec![0u64; n * n];
    let mut x = vec![0.0; d];
    let mut m = Moments::new();
    for _ in 0..probes {
        for v in x.iter_mut() {
            *v = side * rng.random::<f64>();
        }
        let (a, b) = (t.descend(&x).0, s.descend(&x).0);
        let (pa, pb) = (
            a.map_or(&x[..], |a| t.tree.cloud().point(a)),
            b.map_or(&x[..], |b| s.tree.cloud().point(b)),
        );
        m.push(squared_distance(pa, pb));
        if let (Some(a), Some(b)) = (a, b) {
            hits[a * n + b] += 1;
        }
    }
    let weight = n as f64 / probes as f64;
    let entries = hits
        .iter()
        .enumerate()
        .filter(|(_, h)| **h > 0)
        .map(|(k, &h)| (k / n, k % n, h as f64 * weight))
        .collect();
    Ok(SampledCoupling {
        coupling: Coupling::new(n, entries)?,
        cost: m.mean(),
        stderr: m.stderr(),
        probes,
    })
}

fn check_compatible(t: &HierarchicalMap, s: &HierarchicalMap) -> Result<()> {
    let (a, b) = (&t.tree, &s.tree);
    if a.len() != b.len() || a.dim() != b.dim() || a.side() != b.side() {
        return Err(Error::domain("maps belong to clouds of different shape"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{cost_matrix, match_solver};
    use crate::dyadic::build_tree;
    use crate::geometry::{sample_pair, sample_uniform, PointCloud};

    fn map_of(x: &PointCloud) -> HierarchicalMap {
        HierarchicalMap::new(build_tree(x).unwrap())
    }

    #[test]
    fn single_point_takes_everything() {
        let x = PointCloud::from_points(2, 1.0, &[[0.3, 0.6]]).unwrap();
        let h = map_of(&x);
        for p in [[0.0, 0.0], [0.9, 0.1], [1.0, 1.0]] {
            assert_eq!(h.evaluate(&p).unwrap(), Some(0));
            assert_eq!(h.apply(&p).unwrap(), vec![0.3, 0.6]);
        }
        assert!((h.cost() - ((0.3f64 - 0.5).powi(2) + (0.6f64 - 0.5).powi(2) + 2.0 / 12.0)).abs() < 1e-15);
    }

    #[test]
    fn centered_grid_moves_only_the_last_mile() {
        // one point at the centre of every stopping box: all rho_- equal one
        let pts: Vec<[f64; 2]> = (0..64)
            .map(|k| [(k % 8) as f64 / 8.0 + 1.0 / 16.0, (k / 8) as f64 / 8.0 + 1.0 / 16.0])
            .collect();
        let x = PointCloud::from_points(2, 1.0, &pts).unwrap();
        let h = map_of(&x);
        let t = h.tree();
        assert_eq!(t.k_star(), 5);
        for k in 1..=5 {
            for i in 0..1 << (k - 1) {
                assert_eq!(t.rho_minus(k, i), Some(1.0));
            }
        }
        // level-5 boxes are 1/8 x 1/4 and hold two points each; cost is below
        // d L_{k_*}^2
        assert!(h.cost() <= 2.0 * t.l_k(5).powi(2));
        // S_{k_*} is the identity, so x lies in its own preimage cell
        assert_eq!(h.evaluate(&[0.06, 0.06]).unwrap(), Some(0));
    }

    #[test]
    fn structural_product_and_cell_volumes() {
        for (seed, dim, n) in [(1u64, 1usize, 37usize), (2, 2, 100), (3, 3, 256), (4, 2, 5)] {
            let x = sample_uniform(n, 1.5, dim, seed).unwrap();
            let h = map_of(&x);
            let target = 1.5f64.powi(dim as i32) / n as f64;
            for p in 0..n {
                assert!((h.preimage_volume_product(p) / target - 1.0).abs() < 1e-12);
                assert!((h.cell_volume(p) / target - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn descent_agrees_with_cells() {
        let (x, _) = sample_pair(200, 1.0, 2, 31).unwrap();
        let h = map_of(&x);
        let mut rng = rng_from_seed(5);
        let mut checked = 0;
        for _ in 0..5000 {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            let owner = (0..200).find(|&n| {
                let (lo, hi) = h.cell(n);
                (0..2).all(|i| lo[i] + 1e-9 < p[i] && p[i] < hi[i] - 1e-9)
            });
            if let Some(owner) = owner {
                assert_eq!(h.evaluate(&p).unwrap(), Some(owner));
                checked += 1;
            }
        }
        assert!(checked > 4900);
    }

    #[test]
    fn monte_carlo_preimage_volumes() {
        let x = sample_uniform(32, 1.0, 2, 77).unwrap();
        let h = map_of(&x);
        let probes = 1_000_000u64;
        let mut rng = rng_from_seed(78);
        let mut hits = vec![0u64; 32];
        for _ in 0..probes {
            let p = [rng.random::<f64>(), rng.random::<f64>()];
            hits[h.evaluate(&p).unwrap().unwrap()] += 1;
        }
        let q = 1.0 / 32.0;
        let se = (q * (1.0 - q) / probes as f64).sqrt();
        for &c in &hits {
            assert!((c as f64 / probes as f64 - q).abs() <= 4.0 * se);
        }
    }

    #[test]
    fn exact_cost_matches_monte_carlo() {
        for (seed, dim) in [(8u64, 1usize), (9, 2), (10, 3)] {
            let x = sample_uniform(150, 1.0, dim, seed).unwrap();
            let h = map_of(&x);
            let (est, se) = h.map_cost(200_000, seed + 100).unwrap();
            assert!((est - h.cost()).abs() <= 4.0 * se, "d={dim}: {est} +- {se} vs {}", h.cost());
        }
        assert!(map_of(&sample_uniform(4, 1.0, 2, 1).unwrap()).map_cost(10, 0).is_err());
    }

    #[test]
    fn last_mile_stays_in_the_box() {
        for (seed, dim) in [(1u64, 1usize), (2, 2), (3, 3)] {
            let h = map_of(&sample_uniform(300, 1.0, dim, seed).unwrap());
            assert!(h.last_mile_ratio() <= 1.0 + 1e-12);
            // the diameter is at most sqrt(d) times twice L_{k_*}
            let t = h.tree();
            let (_, s) = t.box_bounds(t.k_star(), 0);
            let diam: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(diam <= (dim as f64).sqrt() * 2.0 * t.l_k(t.k_star()) + 1e-15);
        }
    }

    #[test]
    fn identical_clouds_couple_on_the_diagonal() {
        let x = sample_uniform(50, 1.0, 2, 4).unwrap();
        let h = map_of(&x);
        let plan = couple_two_clouds(&h, &h).unwrap();
        assert_eq!(plan.cost, 0.0);
        let k = plan.coupling().unwrap();
        assert!(k.entries().iter().all(|&(a, b, _)| a == b));
        let sampled = couple_two_clouds_sampled(&h, &h, 10_000, 1).unwrap();
        assert!(sampled.cost <= 4.0 * sampled.stderr);
    }

    #[test]
    fn coupling_is_bistochastic_and_dominates_the_optimum() {
        for seed in 0..100u64 {
            let (x, y) = sample_pair(64, 1.0, 2, 500 + seed).unwrap();
            let plan = couple_two_clouds(&map_of(&x), &map_of(&y)).unwrap();
            let k = plan.coupling().unwrap();
            assert!(k.is_bistochastic(1e-9));
            let c = cost_matrix(&x, &y).unwrap();
            assert!((c.coupling_cost(k) - plan.cost).abs() <= 1e-12 * plan.cost);
            assert!(plan.cost >= match_solver(&c).unwrap().cost);
        }
    }

    #[test]
    fn hand_placed_line() {
        let x = PointCloud::from_points(1, 1.0, &[[0.1], [0.35], [0.6], [0.95]]).unwrap();
        let y = PointCloud::from_points(1, 1.0, &[[0.05], [0.3], [0.7], [0.8]]).unwrap();
        let plan = couple_two_clouds(&map_of(&x), &map_of(&y)).unwrap();
        let opt = match_solver(&cost_matrix(&x, &y).unwrap()).unwrap();
        assert!(plan.cost >= opt.cost);
    }

    #[test]
    fn triangle_inequality_and_sampled_margins() {
        let (x, y) = sample_pair(64, 1.0, 2, 21).unwrap();
        let (t, s) = (map_of(&x), map_of(&y));
        let plan = couple_two_clouds(&t, &s).unwrap();
        assert!(plan.cost.sqrt() <= t.cost().sqrt() + s.cost().sqrt() + 1e-12);
        let probes = 400_000;
        let sampled = couple_two_clouds_sampled(&t, &s, probes, 3).unwrap();
        assert!((sampled.cost - plan.cost).abs() <= 4.0 * sampled.stderr);
        let se = (1.0f64 / 64.0 * (1.0 - 1.0 / 64.0) / probes as f64).sqrt() * 64.0;
        for m in sampled.coupling.row_sums().iter().chain(&sampled.coupling.col_sums()) {
            assert!((m - 1.0).abs() <= 4.0 * se);
        }
    }

    #[test]
    fn rejects_mismatched_maps() {
        let a = map_of(&sample_uniform(8, 1.0, 2, 1).unwrap());
        let b = map_of(&sample_uniform(9, 1.0, 2, 1).unwrap());
        assert!(couple_two_clouds(&a, &b).is_err());
        assert!(a.evaluate(&[1.5, 0.0]).is_err());
    }
}
