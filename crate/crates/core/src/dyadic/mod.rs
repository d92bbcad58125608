//! Dyadic decomposition of `[0, L]^d` and the hierarchical transport map
//! from the uniform measure to an empirical measure.
//!
//! Level `k` of the tree halves every level-`(k - 1)` box along coordinate
//! `(k - 1) mod d`, so level `k` holds `2^k` boxes. The box index at level
//! `k` is the bit string `b_1 ... b_k` of lower (`0`) / upper (`1`) choices,
//! most significant bit first; the children of box `i` are `2i` and `2i + 1`.
//! The tree stops at `k_*`, the first level whose smallest side `L_k`
//! satisfies `r <= L_k < 2r`.

mod audit;
mod block;
mod map;

use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::{dyadic_cell, DyadicBox, PointCloud};

pub use audit::{level_profile, recursion_audit, AuditRow, AuditTable, LevelProfile};
pub use block::{
    block_map, block_map_defect, block_map_symmetrized_defect, quadratic_defect_constant,
};
pub use map::{
    couple_two_clouds, couple_two_clouds_sampled, HierarchicalMap, SampledCoupling, MIN_PROBES,
};

pub(crate) use block::apply as apply_block;

/// Number of points per box at every level, plus the sorted point lists of
/// the stopping boxes.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicTree {
    cloud: PointCloud,
    k_star: usize,
    counts: Vec<Vec<usize>>,
    leaf_of: Vec<usize>,
    leaf_start: Vec<usize>,
    leaf_members: Vec<usize>,
}

/// Coordinate halved when passing from level `k - 1` to level `k` (0-based).
#[inline]
pub fn split_axis(k: usize, dim: usize) -> usize {
    (k - 1) % dim
}

/// `L_k = 2^{-ceil(k / d)} L`.
#[inline]
pub fn level_side(k: usize, side: f64, dim: usize) -> f64 {
    libm::ldexp(side, -(k.div_ceil(dim) as i32))
}

/// Depth of coordinate `axis` after `k` halvings.
#[inline]
pub fn axis_depth(k: usize, axis: usize, dim: usize) -> u32 {
    if k > axis {
        ((k - 1 - axis) / dim + 1) as u32
    } else {
        0
    }
}

/// The stopping level: `k_* = d (j - 1) + 1` for the largest `j` with
/// `2^{jd} <= N`, and `0` when `N < 2^d`.
pub fn stopping_level(n: usize, dim: usize) -> usize {
    let mut j = 0usize;
    while (j + 1) * dim < usize::BITS as usize && (1usize << ((j + 1) * dim)) <= n {
        j += 1;
    }
    if j == 0 {
        0
    } else {
        dim * (j - 1) + 1
    }
}

/// Builds the tree of `cloud` down to the stopping level.
pub fn build_tree(cloud: &PointCloud) -> Result<DyadicTree> {
    DyadicTree::build(cloud)
}

impl DyadicTree {
    pub fn build(cloud: &PointCloud) -> Result<Self> {
        let n = cloud.len();
        if n == 0 {
            return Err(Error::domain("cannot build a tree on an empty cloud"));
        }
        let dim = cloud.dim();
        let k_star = stopping_level(n, dim);
        let depths: Vec<u32> = (0..dim).map(|i| axis_depth(k_star, i, dim)).collect();
        let leaf_of: Vec<usize> = cloud
            .points()
            .map(|x| leaf_index_with(x, cloud.side(), &depths, k_star))
            .collect();

        let mut counts: Vec<Vec<usize>> = (0..=k_star).map(|k| vec![0; 1 << k]).collect();
        for &leaf in &leaf_of {
            counts[k_star][leaf] += 1;
        }
        for k in (0..k_star).rev() {
            let (coarse, fine) = counts.split_at_mut(k + 1);
            for (i, c) in coarse[k].iter_mut().enumerate() {
                *c = fine[0][2 * i] + fine[0][2 * i + 1];
            }
        }

        let leaves = 1usize << k_star;
        let mut leaf_start = vec![0usize; leaves + 1];
        for (i, &c) in counts[k_star].iter().enumerate() {
            leaf_start[i + 1] = leaf_start[i] + c;
        }
        let mut fill = leaf_start.clone();
        let mut leaf_members = vec![0usize; n];
        for (p, &leaf) in leaf_of.iter().enumerate() {
            leaf_members[fill[leaf]] = p;
            fill[leaf] += 1;
        }
        for i in 0..leaves {
            leaf_members[leaf_start[i]..leaf_start[i + 1]]
                .sort_by(|&a, &b| lexicographic(cloud.point(a), cloud.point(b)).then(a.cmp(&b)));
        }

        Ok(DyadicTree {
            cloud: cloud.clone(),
            k_star,
            counts,
            leaf_of,
            leaf_start,
            leaf_members,
        })
    }

    pub fn cloud(&self) -> &PointCloud {
        &self.cloud
    }

    pub fn dim(&self) -> usize {
        self.cloud.dim()
    }

    pub fn side(&self) -> f64 {
        self.cloud.side()
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn k_star(&self) -> usize {
        self.k_star
    }

    /// `L_k` of this tree.
    pub fn l_k(&self, k: usize) -> f64 {
        level_side(k, self.side(), self.dim())
    }

    pub fn count(&self, k: usize, i: usize) -> usize {
        self.counts[k][i]
    }

    pub fn counts(&self, k: usize) -> &[usize] {
        &self.counts[k]
    }

    /// `rho_- = 2 N_{Q_-} / N_Q` for box `i` of level `k - 1` split at level
    /// `k`; `None` for an empty box.
    pub fn rho_minus(&self, k: usize, i: usize) -> Option<f64> {
        let parent = self.counts[k - 1][i];
        (parent > 0).then(|| 2.0 * self.counts[k][2 * i] as f64 / parent as f64)
    }

    /// Stopping box containing point `n`.
    pub fn leaf_of(&self, n: usize) -> usize {
        self.leaf_of[n]
    }

    /// Points of stopping box `i`, sorted lexicographically by coordinates.
    pub fn leaf_points(&self, i: usize) -> &[usize] {
        &self.leaf_members[self.leaf_start[i]..self.leaf_start[i + 1]]
    }

    /// Stopping box containing `x`; the box at level `k` is this index
    /// shifted right by `k_* - k`.
    pub fn leaf_index(&self, x: &[f64]) -> usize {
        let dim = self.dim();
        let depths: Vec<u32> = (0..dim).map(|i| axis_depth(self.k_star, i, dim)).collect();
        leaf_index_with(x, self.side(), &depths, self.k_star)
    }

    /// Box `i` of level `k` as a dyadic box.
    pub fn dyadic_box(&self, k: usize, i: usize) -> DyadicBox {
        let dim = self.dim();
        let mut depth = vec![0u32; dim];
        let mut index = vec![0u64; dim];
        for j in 1..=k {
            let c = split_axis(j, dim);
            depth[c] += 1;
            index[c] = 2 * index[c] + ((i >> (k - j)) & 1) as u64;
        }
        DyadicBox::new(depth, index).expect("tree boxes are valid dyadic boxes")
    }

    /// Lower corner and side lengths of box `i` of level `k`.
    pub fn box_bounds(&self, k: usize, i: usize) -> (Vec<f64>, Vec<f64>) {
        let q = self.dyadic_box(k, i);
        (q.lower(self.side()), q.sides(self.side()))
    }
}

fn leaf_index_with(x: &[f64], side: f64, depths: &[u32], k_star: usize) -> usize {
    let dim = depths.len();
    let mut cells: Vec<u64> = x
        .iter()
        .zip(depths)
        .map(|(&xi, &s)| dyadic_cell(xi, side, s))
        .collect();
    // consume each coordinate's bits from the most significant end
    let mut remaining: Vec<u32> = depths.to_vec();
    let mut idx = 0usize;
    for j in 1..=k_star {
        let c = split_axis(j, dim);
        remaining[c] -= 1;
        let bit = (cells[c] >> remaining[c]) & 1;
        cells[c] &= (1u64 << remaining[c]) - 1;
        idx = 2 * idx + bit as usize;
    }
    idx
}

fn lexicographic(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.partial_cmp(y).unwrap_or(Ordering::Equal))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}
