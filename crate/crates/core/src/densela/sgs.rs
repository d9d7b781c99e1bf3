use super::{Lu, Matrix, Vector};
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric Gauss-Seidel split `G = L + Lᵀ + D` and the preconditioner
/// `G̃ = (L + D) D⁻¹ (Lᵀ + D)`.
///
/// `D` is diagonal for the pointwise split and block diagonal when a block partition is
/// given, in which case `L` is the strictly block-lower part.
#[derive(Clone, Debug)]
pub struct SgsSplit {
    lower: Matrix,
    diag: Matrix,
    gtilde: Matrix,
    blocks: Vec<usize>,
}

/// Pointwise split of a symmetric matrix with positive diagonal.
pub fn sgs_split(g: &Matrix) -> Result<SgsSplit> {
    SgsSplit::with_blocks(g, &vec![1; g.rows()])
}

impl SgsSplit {
    /// Block split along the partition `blocks` (sizes summing to the dimension of `g`).
    /// Every diagonal block must be symmetric positive definite.
    pub fn with_blocks(g: &Matrix, blocks: &[usize]) -> Result<SgsSplit> {
        if !g.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "SGS split needs a square matrix, got {}x{}",
                g.rows(),
                g.cols()
            )));
        }
        let n = g.rows();
        if blocks.iter().sum::<usize>() != n || blocks.contains(&0) {
            return Err(Error::DimensionMismatch(format!(
                "block sizes {blocks:?} do not partition dimension {n}"
            )));
        }
        if let Some((row, col, gap)) = g.symmetry_defect(SYMMETRY_TOL * g.max_abs().max(1.0)) {
            return Err(Error::NonSymmetric { row, col, gap });
        }
        for i in 0..n {
            if g[(i, i)] <= 0.0 {
                return Err(Error::NonpositiveDiagonal {
                    index: i,
                    value: g[(i, i)],
                });
            }
        }
        let owner = block_owner(blocks);
        let mut lower = Matrix::zeros(n, n);
        let mut diag = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if owner[i] == owner[j] {
                    diag[(i, j)] = g[(i, j)];
                } else if owner[i] > owner[j] {
                    lower[(i, j)] = g[(i, j)];
                }
            }
        }
        let d_lu = Lu::factor(&diag)?;
        let l_plus_d = lower.add(&diag);
        let upper = l_plus_d.transpose();
        let gtilde = l_plus_d.matmul(&d_lu.solve_matrix(&upper));
        Ok(SgsSplit {
            lower,
            diag,
            gtilde,
            blocks: blocks.to_vec(),
        })
    }

    /// Strictly (block) lower part `L`.
    pub fn lower(&self) -> &Matrix {
        &self.lower
    }

    /// (Block) diagonal part `D`.
    pub fn diag(&self) -> &Matrix {
        &self.diag
    }

    /// `G̃ = (L + D) D⁻¹ (Lᵀ + D)`.
    pub fn gtilde(&self) -> &Matrix {
        &self.gtilde
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    /// Reassembles `L + Lᵀ + D`.
    pub fn reassemble(&self) -> Matrix {
        self.lower.add(&self.lower.transpose()).add(&self.diag)
    }

    /// `G̃ - G = L D⁻¹ Lᵀ`.
    pub fn correction(&self) -> Result<Matrix> {
        let d_lu = Lu::factor(&self.diag)?;
        Ok(self
            .lower
            .matmul(&d_lu.solve_matrix(&self.lower.transpose())))
    }

    /// `G̃⁻¹ G`, the operator whose spectrum lies in `(0, 1]`.
    pub fn preconditioned(&self) -> Result<Matrix> {
        Ok(Lu::factor(&self.gtilde)?.solve_matrix(&self.reassemble()))
    }

    /// One symmetric Gauss-Seidel sweep for `G x = rhs` starting from `x`:
    /// `(L + D) x½ = rhs - Lᵀ x`, then `(Lᵀ + D) x' = rhs - L x½`.
    pub fn sweep(&self, x: &[f64], rhs: &[f64]) -> Result<Vector> {
        let upper = self.lower.transpose();
        let half_rhs = Vector::from(rhs).sub(&upper.matvec(x));
        let half = Lu::factor(&self.lower.add(&self.diag))?.solve(&half_rhs);
        let full_rhs = Vector::from(rhs).sub(&self.lower.matvec(&half));
        Ok(Lu::factor(&upper.add(&self.diag))?.solve(&full_rhs))
    }
}

fn block_owner(blocks: &[usize]) -> Vec<usize> {
    blocks
        .iter()
        .enumerate()
        .flat_map(|(b, &size)| std::iter::repeat_n(b, size))
        .collect()
}
