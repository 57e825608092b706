//! Exact evaluation and verification of trigonometric R-matrices for
//! symmetric tensor representations of `U_q(sl_n)`, their stochastic
//! gauge, the associated L-operators and the three-dimensional R-operator
//! they descend from.

pub mod error;
pub mod field;
pub mod loperator;
pub mod qseries;
pub mod rmatrix;
pub mod stochastic;
pub mod verify;
pub mod weights3d;

pub use error::{Error, Result};
pub use field::{EvalPoint, Field, Scalar};
