//! Least-squares radial basis function approximation.
//!
//! Smooth functions on an interval or a planar region are approximated by
//! normalized translates of a radial kernel whose centers extend past the
//! domain. The sample set is oversampled and the rectangular system is solved
//! with a truncated SVD, which keeps the coefficients bounded at the price of a
//! limiting accuracy set by the truncation threshold. A collocation variant
//! solves the Poisson problem with Dirichlet data.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod kernels;
pub mod lssolver;
pub mod pde;
pub mod scaling;

pub use error::{Error, Result};
pub use faer;
