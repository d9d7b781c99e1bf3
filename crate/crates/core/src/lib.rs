//! Multi-block ADMM solvers and the linear algebra needed to analyse them.
//!
//! Four solver variants share one problem model ([`model::MultiBlockProblem`]) and one set of
//! exact block minimizers ([`blocksolve`]):
//!
//! * cyclic (direct extension) ADMM,
//! * randomly permuted ADMM,
//! * ADMM with a Gaussian back substitution correction,
//! * symmetric Gauss-Seidel ADMM (forward sweep, backward sweep, Richardson dual step).
//!
//! For problems with zero or quadratic objectives every variant is an affine map of
//! `(x, λ)`. The [`spectra`] module assembles those maps (analytically for the symmetric
//! Gauss-Seidel variant, by probing for all of them) and checks the eigenvalue relations
//! that govern their convergence.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blocksolve;
pub mod cli;
pub mod densela;
mod error;
pub mod model;
pub mod solvers;
pub mod spectra;

pub use error::{Error, Result};
