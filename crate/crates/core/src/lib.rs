//! Desk-scale analysis of bounded-degree polynomials over small prime
//! fields: exact and sampled bias, Gowers uniformity norms, derivative
//! calculus, rank oracles, product-plus-remainder decompositions,
//! polynomial-factor regularization, and constant-subspace extraction,
//! with machine-checkable certificates throughout.

// index loops mirror the matrix algebra; iterator forms read worse here
#![allow(clippy::needless_range_loop)]

pub mod analysis;
pub mod error;
pub mod factors;
pub mod gf;
pub mod linalg;
pub mod nonclassical;
pub mod poly;
pub mod rng;
pub mod structure;
pub mod subspace;
pub mod table;

pub use error::{Error, Result};
