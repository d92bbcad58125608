//! Point clouds in the box `[0, L]^d`, dyadic sub-boxes and the microscopic
//! length scale `r = L N^{-1/d}`.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// `N` points in `[0, L]^d`, stored row-major, together with the seed that
/// generated them (0 for hand-built clouds).
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    side: f64,
    coords: Vec<f64>,
    seed: u64,
}

impl PointCloud {
    /// Builds a cloud from row-major coordinates, checking that every
    /// coordinate lies in `[0, side]`.
    pub fn new(dim: usize, side: f64, coords: Vec<f64>, seed: u64) -> Result<Self> {
        check_shape(dim, side)?;
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::domain("coordinate count is not a multiple of the dimension"));
        }
        if let Some(bad) = coords.iter().find(|c| !(0.0..=side).contains(*c)) {
            return Err(Error::domain(alloc::format!(
                "coordinate {bad} lies outside [0, {side}]"
            )));
        }
        Ok(PointCloud {
            dim,
            side,
            coords,
            seed,
        })
    }

    pub fn from_points<P: AsRef<[f64]>>(dim: usize, side: f64, points: &[P]) -> Result<Self> {
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            let p = p.as_ref();
            if p.len() != dim {
                return Err(Error::domain("point has the wrong dimension"));
            }
            coords.extend_from_slice(p);
        }
        PointCloud::new(dim, side, coords, 0)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> f64 {
        self.side
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, n: usize) -> &[f64] {
        &self.coords[n * self.dim..(n + 1) * self.dim]
    }

    pub fn points(&self) -> core::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// `L^d`.
    pub fn volume(&self) -> f64 {
        libm::pow(self.side, self.dim as f64)
    }

    /// Multiplies every coordinate (and the side) by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) {
            return Err(Error::domain("scale factor must be positive"));
        }
        Ok(PointCloud {
            dim: self.dim,
            side: self.side * factor,
            coords: self.coords.iter().map(|c| c * factor).collect(),
            seed: self.seed,
        })
    }

    /// The same cloud with its points listed in the order given by `order`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        let mut coords = Vec::with_capacity(self.coords.len());
        for &n in order {
            coords.extend_from_slice(self.point(n));
        }
        PointCloud {
            coords,
            ..self.clone()
        }
    }
}

fn check_shape(dim: usize, side: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::domain("dimension must be at least 1"));
    }
    if !(side > 0.0) || !side.is_finite() {
        return Err(Error::domain("side length must be positive and finite"));
    }
    Ok(())
}

/// The microscopic length `r`, with `r^d N = L^d`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct MicroScale(pub f64);

impl MicroScale {
    pub fn of(n: usize, side: f64, dim: usize) -> Result<Self> {
        check_shape(dim, side)?;
        if n == 0 {
            return Err(Error::domain("the microscopic scale of an empty cloud is undefined"));
        }
        Ok(MicroScale(side * libm::pow(n as f64, -1.0 / dim as f64)))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `r = L N^{-1/d}` for a nonempty cloud.
pub fn micro_scale(cloud: &PointCloud) -> Result<MicroScale> {
    MicroScale::of(cloud.len(), cloud.side, cloud.dim)
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of substream `stream` of `master`. Distinct streams of one master
/// never share generator state.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    mix64(mix64(master) ^ mix64(stream.wrapping_add(0xD1B5_4A32_D192_ED03)))
}

/// The generator behind every sampled cloud.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` i.i.d. uniform points in `[0, side]^dim`; bit-identical for equal
/// arguments.
pub fn sample_uniform(n: usize, side: f64, dim: usize, seed: u64) -> Result<PointCloud> {
    check_shape(dim, side)?;
    let mut rng = rng_from_seed(seed);
    let coords = (0..n * dim)
        .map(|_| side * rng.random::<f64>())
        .collect();
    Ok(PointCloud {
        dim,
        side,
        coords,
        seed,
    })
}

/// The two independent clouds `(X, Y)` of one matching trial.
pub fn sample_pair(
    n: usize,
    side: f64,
    dim: usize,
    trial_seed: u64,
) -> Result<(PointCloud, PointCloud)> {
    Ok((
        sample_uniform(n, side, dim, derive_seed(trial_seed, 0))?,
        sample_uniform(n, side, dim, derive_seed(trial_seed, 1))?,
    ))
}

/// Index of the dyadic cell of depth `depth` containing `x` in `[0, side]`.
/// Cells are half-open except the last, which is closed at `side`.
#[inline]
pub fn dyadic_cell(x: f64, side: f64, depth: u32) -> u64 {
    let cells = 1u64 << depth;
    let t = libm::floor(x / side * cells as f64);
    if t <= 0.0 {
        0
    } else if t >= cells as f64 {
        cells - 1
    } else {
        t as u64
    }
}

/// An axis-aligned box of the dyadic family: coordinate `i` covers cell
/// `index[i]` of the dyadic subdivision of `[0, L]` at depth `depth[i]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DyadicBox {
    depth: Vec<u32>,
    index: Vec<u64>,
}

impl DyadicBox {
    pub fn root(dim: usize) -> Self {
        DyadicBox {
            depth: alloc::vec![0; dim],
            index: alloc::vec![0; dim],
        }
    }

    pub fn new(depth: Vec<u32>, index: Vec<u64>) -> Result<Self> {
        if depth.len() != index.len() || depth.is_empty() {
            return Err(Error::domain("depth and index must have equal, positive length"));
        }
        if depth.iter().any(|&j| j > 52) {
            return Err(Error::domain("dyadic depth beyond floating resolution"));
        }
        if depth.iter().zip(&index).any(|(&j, &a)| a >= 1u64 << j) {
            return Err(Error::domain("cell index out of range for its depth"));
        }
        Ok(DyadicBox { depth, index })
    }

    pub fn dim(&self) -> usize {
        self.depth.len()
    }

    pub fn depth(&self) -> &[u32] {
        &self.depth
    }

    pub fn index(&self) -> &[u64] {
        &self.index
    }

    /// Halves the box along `axis`, returning the lower and upper child.
    pub fn split(&self, axis: usize) -> (DyadicBox, DyadicBox) {
        let mut lo = self.clone();
        lo.depth[axis] += 1;
        lo.index[axis] *= 2;
        let mut hi = lo.clone();
        hi.index[axis] += 1;
        (lo, hi)
    }

    pub fn lower(&self, side: f64) -> Vec<f64> {
        self.depth
            .iter()
            .zip(&self.index)
            .map(|(&j, &a)| side * a as f64 / (1u64 << j) as f64)
            .collect()
    }

    pub fn sides(&self, side: f64) -> Vec<f64> {
        self.depth
            .iter()
            .map(|&j| side / (1u64 << j) as f64)
            .collect()
    }

    /// `|Q| / L^d`.
    pub fn volume_fraction(&self) -> f64 {
        let total: u32 = self.depth.iter().sum();
        libm::ldexp(1.0, -(total as i32))
    }

    /// Half-open membership, closed on faces lying on the outer boundary.
    pub fn contains(&self, x: &[f64], side: f64) -> bool {
        self.depth
            .iter()
            .zip(&self.index)
            .zip(x)
            .all(|((&j, &a), &xi)| (0.0..=side).contains(&xi) && dyadic_cell(xi, side, j) == a)
    }
}
