//! Linear-case analysis of the ADMM variants.
//!
//! With zero or quadratic objectives every variant is an affine map of the iterate. This
//! module assembles the saddle-point system and the symmetric Gauss-Seidel iteration
//! matrix analytically, recovers any variant's iteration matrix by probing, and checks the
//! eigenvalue relations between those matrices and `G̃⁻¹G`.
//!
//! Iteration matrices use KKT coordinates `(x, μ)` with `μ = -λ`, matching the saddle
//! system `[[G, -Aᵀ], [-A, 0]] (x, μ) = (βAᵀb, -b)`.

mod kkt;
mod probe;
mod remark;
mod theorem;

pub use kkt::{
    build_kkt, sadmm_affine_map, sadmm_iteration_matrix, schur_complement, schur_rhs, solve_kkt,
    KktSystem,
};
pub use probe::{
    extract_iteration_matrix, permuted_stepper, rp_expected_map, variant_stepper, AffineMap,
    AFFINE_TOL,
};
pub use remark::{
    remark_map_check, rp_expected_matrix, rp_expected_q, RemarkReport, MAX_ENUMERATED_BLOCKS,
};
pub use theorem::{
    dual_kernel_dim, root_pair, theorem_map_check, MappingPair, SpectralReport, MAPPING_TOL,
    MODULUS_TOL,
};

use crate::densela::{eigenvalues, Matrix};
use crate::Result;

/// Largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|e| e.norm()).fold(0.0, f64::max))
}
