use itertools::Itertools;
use num_complex::Complex64;

use crate::densela::{eigenvalues, Lu, Matrix};
use crate::model::{MultiBlockProblem, ObjectiveTerm};
use crate::spectra::MAPPING_TOL;
use crate::{Error, Result};

/// Largest block count for which the `m!` orders are enumerated.
pub const MAX_ENUMERATED_BLOCKS: usize = 8;

pub(crate) fn check_enumerable(m: usize) -> Result<()> {
    if m > MAX_ENUMERATED_BLOCKS {
        return Err(Error::TooManyBlocks {
            blocks: m,
            max: MAX_ENUMERATED_BLOCKS,
        });
    }
    Ok(())
}

fn block_owner(dims: &[usize]) -> Vec<usize> {
    dims.iter()
        .enumerate()
        .flat_map(|(b, &d)| std::iter::repeat_n(b, d))
        .collect()
}

/// `E_σ[L_σ⁻¹]` over all block orders `σ`, where `L_σ` keeps the blocks of `AᵀA` on or
/// below the block diagonal in the order `σ`.
pub fn rp_expected_q(p: &MultiBlockProblem) -> Result<Matrix> {
    let m = p.num_blocks();
    check_enumerable(m)?;
    let ata = p.stacked_a().gram();
    let owner = block_owner(&p.block_dims());
    let n = ata.rows();
    let mut sum = Matrix::zeros(n, n);
    let mut count = 0usize;
    for sigma in (0..m).permutations(m) {
        let mut position = vec![0; m];
        for (k, &b) in sigma.iter().enumerate() {
            position[b] = k;
        }
        let lower = Matrix::from_fn(n, n, |i, j| {
            if position[owner[i]] >= position[owner[j]] {
                ata[(i, j)]
            } else {
                0.0
            }
        });
        sum = sum.add(&Lu::factor(&lower)?.inverse());
        count += 1;
    }
    Ok(sum.scale(1.0 / count as f64))
}

/// `M = [[I - QAᵀA, QAᵀ], [AQAᵀA - A, I - AQAᵀ]]`, the unit-penalty iteration matrix of a
/// block scheme whose primal update applies `Q` to the residual.
pub fn rp_expected_matrix(p: &MultiBlockProblem, q: &Matrix) -> Result<Matrix> {
    check_enumerable(p.num_blocks())?;
    if let Some(i) = p
        .blocks()
        .iter()
        .position(|b| b.objective != ObjectiveTerm::Zero)
    {
        return Err(Error::InvalidObjective {
            block: i,
            reason: "the expected iteration matrix needs zero objectives".to_string(),
        });
    }
    let a = p.stacked_a();
    let (rows, n) = (a.rows(), a.cols());
    if q.rows() != n || q.cols() != n {
        return Err(Error::DimensionMismatch(format!(
            "Q is {}x{}, expected {n}x{n}",
            q.rows(),
            q.cols()
        )));
    }
    let qat = q.matmul(&a.transpose());
    let qata = qat.matmul(&a);
    let aqat = a.matmul(&qat);
    Ok(Matrix::from_blocks(
        &Matrix::identity(n).sub(&qata),
        &qat,
        &a.matmul(&qata).sub(&a),
        &Matrix::identity(rows).sub(&aqat),
    ))
}

#[derive(Clone, Debug)]
pub struct RemarkReport {
    pub spectrum: Vec<Complex64>,
    pub rho: f64,
    /// Eigenvalues of `QAᵀA`.
    pub preconditioned: Vec<Complex64>,
    pub max_residual: f64,
}

impl RemarkReport {
    /// Whether `eig(QAᵀA)` is real and inside `(0, 1)`.
    pub fn preconditioned_inside_unit_interval(&self) -> bool {
        self.preconditioned
            .iter()
            .all(|z| z.im.abs() <= 1e-9 && z.re > 0.0 && z.re < 1.0 - 1e-10)
    }
}

/// Checks `(1-λ)²/(1-2λ) ∈ eig(QAᵀA)` for every eigenvalue `λ` of `m`.
pub fn remark_map_check(m: &Matrix, qata: &Matrix) -> Result<RemarkReport> {
    let spectrum = eigenvalues(m)?;
    let preconditioned = eigenvalues(qata)?;
    let mut max_residual: f64 = 0.0;
    for &lambda in &spectrum {
        let den = 1.0 - 2.0 * lambda;
        if den.norm() < 1e-12 {
            return Err(Error::MappingViolation(format!(
                "lambda = {lambda} makes 1 - 2 lambda vanish"
            )));
        }
        let psi = (1.0 - lambda).powi(2) / den;
        let residual = preconditioned
            .iter()
            .map(|z| (z - psi).norm())
            .fold(f64::INFINITY, f64::min);
        max_residual = max_residual.max(residual);
        if !(residual <= MAPPING_TOL) {
            return Err(Error::MappingViolation(format!(
                "lambda = {lambda} maps to {psi}, at distance {residual:e} from eig(QA^T A)"
            )));
        }
    }
    Ok(RemarkReport {
        rho: spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max),
        spectrum,
        preconditioned,
        max_residual,
    })
}
