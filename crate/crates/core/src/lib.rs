//! Degenerate nonlinear diffusion with van der Waals cohesion, solved through
//! its porous-medium-equation transform with Q1 finite elements, implicit
//! Euler in time and Picard linearization.

// `!(x > 0.0)` is the NaN-rejecting form; index loops follow the quadrature sums.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod assembly;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod linsolve;
pub mod mesh;
pub mod model;
pub mod sparse;
pub mod stepper;

pub use error::{Error, Result};
pub use field::ScalarField;
pub use mesh::{MeshGrid, Rect};
