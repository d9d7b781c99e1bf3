use itertools::Itertools;

use crate::densela::{Matrix, Vector};
use crate::model::{MultiBlockProblem, SolverState};
use crate::solvers::{self, PermutationDraw, SplitMix64, Variant};
use crate::{Error, Result};

/// Probe agreement required by [`extract_iteration_matrix`], relative to the probe scale.
pub const AFFINE_TOL: f64 = 1e-9;
const RANDOM_PROBES: usize = 10;
const PROBE_SEED: u64 = 0x5eed;

/// One step of a solver as a map on KKT coordinates.
pub type Stepper<'a> = Box<dyn FnMut(&[f64]) -> Result<Vector> + 'a>;

/// `z ↦ matrix · z + offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub offset: Vector,
}

impl AffineMap {
    pub fn apply(&self, z: &[f64]) -> Vector {
        self.matrix.matvec(z).add(&self.offset)
    }
}

/// Linearizes `stepper` on `R^n`: the offset is `stepper(0)` and column `j` is
/// `stepper(eⱼ) - offset`. Ten random probes must then agree with the fitted map.
pub fn extract_iteration_matrix(
    mut stepper: impl FnMut(&[f64]) -> Result<Vector>,
    n: usize,
) -> Result<AffineMap> {
    let offset = stepper(&vec![0.0; n])?;
    if offset.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "stepper maps R^{n} to R^{}",
            offset.dim()
        )));
    }
    let mut matrix = Matrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        let col = stepper(&e)?.sub(&offset);
        e[j] = 0.0;
        for i in 0..n {
            matrix[(i, j)] = col[i];
        }
    }
    let map = AffineMap { matrix, offset };
    let mut rng = SplitMix64::new(PROBE_SEED);
    for probe in 0..RANDOM_PROBES {
        let z: Vec<f64> = (0..n).map(|_| rng.next_signed_unit()).collect();
        let got = stepper(&z)?;
        let want = map.apply(&z);
        let scale = 1.0 + want.norm_inf();
        let gap = got.sub(&want).norm_inf();
        if !(gap <= AFFINE_TOL * scale) {
            return Err(Error::NotAffine(format!(
                "random probe {probe} misses the fitted affine map by {gap:e}"
            )));
        }
    }
    Ok(map)
}

fn kkt_stepper<'a>(
    p: &'a MultiBlockProblem,
    mut step: impl FnMut(&SolverState) -> Result<SolverState> + 'a,
) -> impl FnMut(&[f64]) -> Result<Vector> + 'a {
    let (n, m) = (p.primal_dim(), p.dual_dim());
    move |z: &[f64]| {
        if z.len() != n + m {
            return Err(Error::DimensionMismatch(format!(
                "KKT vector has dimension {}, expected {}",
                z.len(),
                n + m
            )));
        }
        let x = Vector::from(&z[..n]).split(&p.block_dims());
        let lambda = Vector::from(&z[n..]).scale(-1.0);
        let next = step(&SolverState::new(p, x, lambda)?)?;
        Ok(Vector::concat(&[next.x_flat(), next.lambda.scale(-1.0)]))
    }
}

/// One step of `variant` as a map on KKT coordinates `(x, μ)`, `μ = -λ`.
///
/// Randomly permuted ADMM has no single iteration matrix; use [`permuted_stepper`] for a
/// fixed order or [`rp_expected_map`] for the expectation.
pub fn variant_stepper<'a>(p: &'a MultiBlockProblem, variant: Variant) -> Result<Stepper<'a>> {
    variant.validate(p.beta())?;
    Ok(match variant {
        Variant::Cyclic => Box::new(kkt_stepper(p, move |s| solvers::step_cyclic(p, s))),
        Variant::RandomPermutation { .. } => {
            return Err(Error::NotAffine(
                "randomly permuted ADMM draws a new order every step".to_string(),
            ))
        }
        Variant::GaussianBackSubstitution { alpha } => {
            let correction = solvers::BackSubstitution::new(p)?;
            Box::new(kkt_stepper(p, move |s| {
                solvers::step_gadmm_with(p, s, alpha, &correction)
            }))
        }
        Variant::SymmetricGaussSeidel { omega } => {
            Box::new(kkt_stepper(p, move |s| solvers::step_sadmm(p, s, omega)))
        }
    })
}

/// One sweep in the fixed block order `order` as a map on KKT coordinates.
pub fn permuted_stepper<'a>(
    p: &'a MultiBlockProblem,
    order: PermutationDraw,
) -> impl FnMut(&[f64]) -> Result<Vector> + 'a {
    kkt_stepper(p, move |s| solvers::step_permuted(p, s, &order))
}

/// Expected one-step map of randomly permuted ADMM: the mean of the fixed-order maps over
/// all `m!` orders.
pub fn rp_expected_map(p: &MultiBlockProblem) -> Result<AffineMap> {
    let m = p.num_blocks();
    super::remark::check_enumerable(m)?;
    let n = p.primal_dim() + p.dual_dim();
    let mut matrix = Matrix::zeros(n, n);
    let mut offset = Vector::zeros(n);
    let mut count = 0usize;
    for sigma in (0..m).permutations(m) {
        let map = extract_iteration_matrix(permuted_stepper(p, PermutationDraw { sigma }), n)?;
        matrix = matrix.add(&map.matrix);
        offset = offset.add(&map.offset);
        count += 1;
    }
    let w = 1.0 / count as f64;
    Ok(AffineMap {
        matrix: matrix.scale(w),
        offset: offset.scale(w),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{counterexample_problem, quadratic_l1_problem};
    use crate::spectra::{build_kkt, sadmm_affine_map, spectral_radius};

    #[test]
    fn identity_stepper() {
        let map = extract_iteration_matrix(|z| Ok(Vector::from(z)), 4).unwrap();
        assert_eq!(map.matrix, Matrix::identity(4));
        assert_eq!(map.offset, Vector::zeros(4));
    }

    #[test]
    fn nonlinear_stepper_is_rejected() {
        let err = extract_iteration_matrix(|z| Ok(Vector::from_fn(z.len(), |i| z[i] * z[i])), 3)
            .unwrap_err();
        assert!(matches!(err, Error::NotAffine(_)));
    }

    #[test]
    fn sadmm_stepper_matches_compact_form() {
        let p = counterexample_problem(4.0).unwrap();
        let probed = extract_iteration_matrix(
            variant_stepper(&p, Variant::SymmetricGaussSeidel { omega: 4.0 }).unwrap(),
            6,
        )
        .unwrap();
        let analytic = sadmm_affine_map(&build_kkt(&p).unwrap(), 4.0).unwrap();
        assert!(probed.matrix.max_abs_diff(&analytic.matrix) < 1e-12);
        assert!(probed.offset.sub(&analytic.offset).norm_inf() < 1e-12);
    }

    #[test]
    fn cyclic_counterexample_is_unstable() {
        let p = counterexample_problem(4.0).unwrap();
        let t = extract_iteration_matrix(variant_stepper(&p, Variant::Cyclic).unwrap(), 6).unwrap();
        assert!(spectral_radius(&t.matrix).unwrap() > 1.001);
    }

    #[test]
    fn l1_stepper_is_not_affine() {
        let p = quadratic_l1_problem(4.0, 1.0).unwrap();
        let n = p.primal_dim() + p.dual_dim();
        let stepper = variant_stepper(&p, Variant::SymmetricGaussSeidel { omega: 4.0 }).unwrap();
        assert!(matches!(
            extract_iteration_matrix(stepper, n),
            Err(Error::NotAffine(_))
        ));
    }

    #[test]
    fn rp_has_no_single_matrix() {
        let p = counterexample_problem(4.0).unwrap();
        assert!(variant_stepper(&p, Variant::RandomPermutation { seed: 1 }).is_err());
    }
}
