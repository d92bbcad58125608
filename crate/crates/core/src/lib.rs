//! Optimal matching of uniform random point clouds.
//!
//! The crate computes the exact bipartite matching cost between two clouds,
//! a hierarchical transport map from the uniform measure to a cloud (an
//! upper-bound certificate), a hierarchical dual potential (a lower-bound
//! certificate), and the Monte Carlo machinery used to measure how the
//! expected cost scales with `N` and `d`.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assignment;
pub mod binomial;
pub mod dual;
pub mod dyadic;
pub mod error;
pub mod geometry;
pub mod stats;

pub use error::{Error, Result};
