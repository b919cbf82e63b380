//! Numerical laboratory for the strong (divergence-form) and normalized
//! (non-divergence-form) p(x)-Laplace equations on uniform grids.

pub mod error;
pub mod experiments;
pub mod exponent;
pub mod grid;
pub mod infconv;
pub mod linalg;
pub mod operators;
pub mod problems;
pub mod sparse;
pub mod tolerances;
pub mod varexp;
pub mod visc;
pub mod weak;

pub use error::{Error, Result};
pub use exponent::{make_exponent, mollify, ExponentField, ExponentSpec};
pub use grid::{discrete_jet, gradient_centered, hessian_centered, integrate, Domain, GridFunction, Jet};
