//! Numerical verification toolkit for monotonicity formulas of divergence-form
//! elliptic equations `div(A∇u) = 0` on the unit ball.

// Index loops and NaN-rejecting `!(a < b)` checks are deliberate in the numerics.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod boundary;
pub mod coefficient;
pub mod descriptor;
pub mod energy;
pub mod error;
pub mod exponent;
pub mod quadrature;
pub mod solutions;
pub mod solver;

pub use coefficient::{CoefficientField, FieldDescriptor, FieldKind};
pub use error::{Error, Result};
pub use quadrature::QuadratureRule;
pub use solutions::{Provenance, Solution};
