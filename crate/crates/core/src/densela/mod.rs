//! Small dense linear algebra: row-major matrices, LU solves, nonsymmetric eigenvalues and
//! the symmetric Gauss-Seidel split.
//!
//! Everything here targets desk-scale problems (tens of unknowns). Values are immutable
//! once built and all routines are pure functions of their inputs.

mod eigen;
mod lu;
mod matrix;
mod sgs;

pub use eigen::{eigenvalues, ComplexScalar, MAX_QR_SWEEPS};
pub use lu::{rank, solve_linear, Lu, PIVOT_THRESHOLD};
pub use matrix::{Matrix, Vector};
pub use sgs::{sgs_split, SgsSplit};
