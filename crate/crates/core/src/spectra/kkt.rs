use crate::densela::{Lu, Matrix, SgsSplit, Vector};
use crate::model::{MultiBlockProblem, ObjectiveTerm};
use crate::spectra::AffineMap;
use crate::{Error, Result};

/// Saddle-point system `[[G, -Aᵀ], [-A, 0]] (x, μ) = (βAᵀb, -b)` with `G = θ + βAᵀA`.
///
/// `θ` is the block diagonal Hessian of the objective, `2Θᵢ` per quadratic block.
#[derive(Clone, Debug)]
pub struct KktSystem {
    pub g: Matrix,
    pub a: Matrix,
    pub theta: Matrix,
    pub beta: f64,
    pub rhs_top: Vector,
    pub rhs_bottom: Vector,
    pub block_dims: Vec<usize>,
    g_lu: Lu,
}

impl KktSystem {
    pub fn primal_dim(&self) -> usize {
        self.a.cols()
    }

    pub fn dual_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn b(&self) -> Vector {
        self.rhs_bottom.scale(-1.0)
    }

    pub fn theta_is_zero(&self) -> bool {
        self.theta.max_abs() == 0.0
    }

    /// `G⁻¹ B` for a matrix `B` with `n` rows.
    pub fn g_solve(&self, b: &Matrix) -> Matrix {
        self.g_lu.solve_matrix(b)
    }

    /// Full saddle-point matrix.
    pub fn saddle_matrix(&self) -> Matrix {
        let p = self.dual_dim();
        Matrix::from_blocks(
            &self.g,
            &self.a.transpose().scale(-1.0),
            &self.a.scale(-1.0),
            &Matrix::zeros(p, p),
        )
    }
}

pub fn build_kkt(p: &MultiBlockProblem) -> Result<KktSystem> {
    let mut hessians = Vec::with_capacity(p.num_blocks());
    for (i, block) in p.blocks().iter().enumerate() {
        hessians.push(match &block.objective {
            ObjectiveTerm::Zero => Matrix::zeros(block.dim(), block.dim()),
            ObjectiveTerm::Quadratic { theta } => theta.scale(2.0),
            ObjectiveTerm::QuadraticL1 { tau, theta } if *tau == 0.0 => theta.scale(2.0),
            ObjectiveTerm::QuadraticL1 { .. } => {
                return Err(Error::NotAffine(format!(
                    "block {i} has an L1 term, so its optimality system is not linear"
                )))
            }
        });
    }
    let theta = Matrix::block_diag(&hessians.iter().collect::<Vec<_>>());
    let a = p.stacked_a();
    let beta = p.beta();
    let g = theta.add(&a.gram().scale(beta));
    let g_lu = Lu::factor(&g).map_err(|_| Error::SingularG)?;
    Ok(KktSystem {
        rhs_top: a.tr_matvec(p.b()).scale(beta),
        rhs_bottom: p.b().scale(-1.0),
        g,
        a,
        theta,
        beta,
        block_dims: p.block_dims(),
        g_lu,
    })
}

/// Schur complement `A G⁻¹ Aᵀ`.
pub fn schur_complement(k: &KktSystem) -> Matrix {
    k.a.matmul(&k.g_solve(&k.a.transpose()))
}

/// Right-hand side `b - βAG⁻¹Aᵀb` of the reduced dual system `AG⁻¹Aᵀ μ = ...`.
pub fn schur_rhs(k: &KktSystem) -> Vector {
    let b = k.b();
    let s = schur_complement(k);
    b.add_scaled(-k.beta, &s.matvec(&b))
}

/// Solves the saddle-point system for `(x, μ)`. Needs `A` of full row rank.
pub fn solve_kkt(k: &KktSystem) -> Result<(Vector, Vector)> {
    let rhs = Vector::concat(&[k.rhs_top.clone(), k.rhs_bottom.clone()]);
    let z = Lu::factor(&k.saddle_matrix())?.solve(&rhs);
    let parts = z.split(&[k.primal_dim(), k.dual_dim()]);
    Ok((parts[0].clone(), parts[1].clone()))
}

/// The symmetric Gauss-Seidel scheme as one affine map
/// `z ↦ z + B⁻¹(c - Mz)` with `B = [[-G̃, 0], [ωA, I]]`, `M = [[-G, Aᵀ], [ωA, 0]]` and
/// `c = (-βAᵀb, ωb)`; the split of `G` follows the block partition.
pub fn sadmm_affine_map(k: &KktSystem, omega: f64) -> Result<AffineMap> {
    let (n, p) = (k.primal_dim(), k.dual_dim());
    let split = SgsSplit::with_blocks(&k.g, &k.block_dims)?;
    let wa = k.a.scale(omega);
    let b = Matrix::from_blocks(
        &split.gtilde().scale(-1.0),
        &Matrix::zeros(n, p),
        &wa,
        &Matrix::identity(p),
    );
    let m = Matrix::from_blocks(
        &k.g.scale(-1.0),
        &k.a.transpose(),
        &wa,
        &Matrix::zeros(p, p),
    );
    let b_lu = Lu::factor(&b)?;
    let t = Matrix::identity(n + p).sub(&b_lu.solve_matrix(&m));
    let c = Vector::concat(&[k.rhs_top.scale(-1.0), k.b().scale(omega)]);
    Ok(AffineMap {
        matrix: t,
        offset: b_lu.solve(&c),
    })
}

/// `T = I - B⁻¹M` of [`sadmm_affine_map`].
pub fn sadmm_iteration_matrix(k: &KktSystem, omega: f64) -> Result<Matrix> {
    Ok(sadmm_affine_map(k, omega)?.matrix)
}
