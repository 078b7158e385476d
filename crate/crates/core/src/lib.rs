//! Exact counting, estimation and inequality certification for weighted
//! contingency tables and integer flows.
//!
//! The weighted table count is
//!
//! ```text
//! T(R, C; W) = sum over tables D with row sums R and column sums C of prod_ij w_ij^d_ij
//! ```
//!
//! with the convention `0^0 = 1`. This crate computes it exactly (rational
//! arithmetic), estimates it through a random-permanent representation,
//! bounds it through matrix scaling and classical permanent estimates, and
//! checks Brunn-Minkowski type inequalities between counts for convex
//! combinations of margins.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! parallel sweeps live in the `flowtab` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod brunnmink;
mod error;
pub mod flows;
mod matrix;
pub mod model;
pub mod montecarlo;
pub mod permanent;
pub mod scaling;
pub mod semiring;
pub mod special;
pub mod tables;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{
    omega, omega_uniform, parse_rational, validate_instance, BigCount, MarginPair, MarginVector,
    WeightMatrix,
};
pub use num_bigint::BigInt;
pub use num_rational::BigRational;
