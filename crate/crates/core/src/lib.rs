//! Finite element solver for volume-constrained nonlocal Poisson problems.
//!
//! The inner integral of the nonlocal bilinear form is evaluated with
//! optimization-based quadrature on regular grids inside each interaction ball;
//! the outer integral uses Gauss rules on the mesh elements.

// negated float comparisons are used on purpose so that NaN is rejected
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod config;
pub mod convergence;
pub mod error;
pub mod gauss;
pub mod gmls;
pub mod io;
pub mod kernel;
pub mod mesh;
pub mod norms;
pub mod plot;
pub mod problems;
pub mod runner;
pub mod solve;
pub mod space;
pub mod strang;

pub use error::{Error, Result};
