//! The four ADMM variants as pure state transformers, plus a driver loop.
//!
//! All variants use the multiplier convention `λ ← λ + step · (Σ Aⱼxⱼ - b)` and minimize
//! each block against `(β/2)‖Σ Aⱼxⱼ - b + λ/β‖²`.

mod rng;

pub use rng::{PermutationDraw, SplitMix64};

use log::{debug, info};

use crate::blocksolve;
use crate::densela::{Lu, Matrix, Vector};
use crate::model::{objective_value, HistoryEntry, MultiBlockProblem, SolverState};
use crate::{Error, Result};

/// Primal residual beyond which a run is reported as diverged.
pub const DIVERGENCE_THRESHOLD: f64 = 1e12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    /// Blocks in order `1..m` every sweep.
    Cyclic,
    /// Fresh uniformly random block order every sweep.
    RandomPermutation { seed: u64 },
    /// Cyclic prediction followed by a Gaussian back substitution correction, `α ∈ (0, 1)`.
    GaussianBackSubstitution { alpha: f64 },
    /// Forward sweep, backward sweep, dual step `ω ∈ (0, 2β)`.
    SymmetricGaussSeidel { omega: f64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Cyclic => "cyclic",
            Variant::RandomPermutation { .. } => "rp",
            Variant::GaussianBackSubstitution { .. } => "gadmm",
            Variant::SymmetricGaussSeidel { .. } => "sadmm",
        }
    }

    pub fn validate(&self, beta: f64) -> Result<()> {
        match *self {
            Variant::GaussianBackSubstitution { alpha } => check_alpha(alpha),
            Variant::SymmetricGaussSeidel { omega } => check_omega(omega, beta),
            _ => Ok(()),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )))
    }
}

fn check_omega(omega: f64, beta: f64) -> Result<()> {
    if omega > 0.0 && omega < 2.0 * beta {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "omega must lie in (0, 2 beta) = (0, {}), got {omega}",
            2.0 * beta
        )))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverParams {
    pub variant: Variant,
    pub max_iters: usize,
    /// Stop once the primal residual is at most this.
    pub tol: f64,
}

impl SolverParams {
    pub fn new(variant: Variant, max_iters: usize, tol: f64) -> Self {
        SolverParams {
            variant,
            max_iters,
            tol,
        }
    }
}

/// Minimizes block `i` with every other block fixed at its value in `x`.
fn update_block(
    p: &MultiBlockProblem,
    x: &[Vector],
    lambda: &[f64],
    i: usize,
) -> Result<(Vector, f64)> {
    let beta = p.beta();
    let block = &p.blocks()[i];
    let others = p.residual_vector(x).sub(&block.a.matvec(&x[i]));
    let r = others.add_scaled(1.0 / beta, lambda);
    blocksolve::minimize(&block.objective, &block.a, &r, beta)
}

/// Gauss-Seidel pass over `order`, updating `x` in place. Returns the worst certificate gap.
fn sweep(
    p: &MultiBlockProblem,
    x: &mut [Vector],
    lambda: &[f64],
    order: impl IntoIterator<Item = usize>,
) -> Result<f64> {
    let mut gap: f64 = 0.0;
    for i in order {
        let (xi, g) = update_block(p, x, lambda, i)?;
        x[i] = xi;
        gap = gap.max(g);
    }
    Ok(gap)
}

fn advance(
    p: &MultiBlockProblem,
    s: &SolverState,
    x: Vec<Vector>,
    lambda: Vector,
    gap: f64,
) -> Result<SolverState> {
    let iter = s.iter + 1;
    let entry = HistoryEntry {
        iter,
        primal_residual: p.residual_vector(&x).norm(),
        objective: objective_value(p, &x)?,
        certificate_gap: gap,
    };
    let mut history = s.history.clone();
    history.push(entry);
    Ok(SolverState {
        x,
        lambda,
        iter,
        history,
    })
}

fn dual_step(p: &MultiBlockProblem, lambda: &[f64], x: &[Vector], step: f64) -> Vector {
    Vector::from(lambda).add_scaled(step, &p.residual_vector(x))
}

fn check_state(p: &MultiBlockProblem, s: &SolverState) -> Result<()> {
    p.check_dims(&s.x)?;
    if s.lambda.dim() != p.dual_dim() {
        return Err(Error::DimensionMismatch(format!(
            "multiplier has dimension {}, expected {}",
            s.lambda.dim(),
            p.dual_dim()
        )));
    }
    Ok(())
}

/// One sweep in the block order `order`, followed by `λ ← λ + β(Ax - b)`.
pub fn step_permuted(
    p: &MultiBlockProblem,
    s: &SolverState,
    order: &PermutationDraw,
) -> Result<SolverState> {
    check_state(p, s)?;
    if order.sigma.len() != p.num_blocks() || !order.is_permutation() {
        return Err(Error::InvalidParameter(format!(
            "{:?} is not a permutation of {} blocks",
            order.sigma,
            p.num_blocks()
        )));
    }
    let mut x = s.x.clone();
    let gap = sweep(p, &mut x, &s.lambda, order.sigma.iter().copied())?;
    let lambda = dual_step(p, &s.lambda, &x, p.beta());
    advance(p, s, x, lambda, gap)
}

/// Direct extension of ADMM: blocks `1..m` in order, then the dual step.
pub fn step_cyclic(p: &MultiBlockProblem, s: &SolverState) -> Result<SolverState> {
    step_permuted(p, s, &PermutationDraw::identity(p.num_blocks()))
}

/// Randomly permuted ADMM. Returns the drawn order alongside the new state.
pub fn step_rp(
    p: &MultiBlockProblem,
    s: &SolverState,
    rng: &mut SplitMix64,
) -> Result<(SolverState, PermutationDraw)> {
    let draw = rng.permutation(p.num_blocks());
    let next = step_permuted(p, s, &draw)?;
    Ok((next, draw))
}

/// Gaussian back substitution correction operator for `AᵀA = D + L + Lᵀ` split along
/// the block partition: `d ↦ (D + Lᵀ)⁻¹ D d`.
#[derive(Clone, Debug)]
pub struct BackSubstitution {
    upper: Lu,
    diag: Matrix,
}

impl BackSubstitution {
    pub fn new(p: &MultiBlockProblem) -> Result<Self> {
        let ata = p.stacked_a().gram();
        let dims = p.block_dims();
        let owner: Vec<usize> = dims
            .iter()
            .enumerate()
            .flat_map(|(b, &d)| std::iter::repeat_n(b, d))
            .collect();
        let n = ata.rows();
        let diag = Matrix::from_fn(n, n, |i, j| {
            if owner[i] == owner[j] {
                ata[(i, j)]
            } else {
                0.0
            }
        });
        let upper = Matrix::from_fn(n, n, |i, j| {
            if owner[i] <= owner[j] {
                ata[(i, j)]
            } else {
                0.0
            }
        });
        Ok(BackSubstitution {
            upper: Lu::factor(&upper)?,
            diag,
        })
    }

    pub fn apply(&self, d: &[f64]) -> Vector {
        self.upper.solve(&self.diag.matvec(d))
    }
}

/// G-ADMM with a prepared correction operator.
pub fn step_gadmm_with(
    p: &MultiBlockProblem,
    s: &SolverState,
    alpha: f64,
    correction: &BackSubstitution,
) -> Result<SolverState> {
    check_alpha(alpha)?;
    check_state(p, s)?;
    let mut predicted = s.x.clone();
    let gap = sweep(p, &mut predicted, &s.lambda, 0..p.num_blocks())?;
    let x_flat = s.x_flat();
    let delta = Vector::concat(&predicted).sub(&x_flat);
    let x_next = x_flat.add_scaled(alpha, &correction.apply(&delta));
    let lambda = dual_step(p, &s.lambda, &predicted, alpha * p.beta());
    advance(p, s, x_next.split(&p.block_dims()), lambda, gap)
}

/// ADMM with Gaussian back substitution: cyclic prediction `x̃`, then
/// `x ← x + α(D + Lᵀ)⁻¹D(x̃ - x)` and `λ ← λ + αβ(Ax̃ - b)`.
pub fn step_gadmm(p: &MultiBlockProblem, s: &SolverState, alpha: f64) -> Result<SolverState> {
    step_gadmm_with(p, s, alpha, &BackSubstitution::new(p)?)
}

/// Symmetric Gauss-Seidel ADMM: forward sweep `1..m`, backward sweep `m-1..1` (block `m`
/// keeps its forward value), then `λ ← λ + ω(Ax - b)`.
pub fn step_sadmm(p: &MultiBlockProblem, s: &SolverState, omega: f64) -> Result<SolverState> {
    check_omega(omega, p.beta())?;
    check_state(p, s)?;
    let m = p.num_blocks();
    let mut x = s.x.clone();
    let forward = sweep(p, &mut x, &s.lambda, 0..m)?;
    let backward = sweep(p, &mut x, &s.lambda, (0..m.saturating_sub(1)).rev())?;
    let lambda = dual_step(p, &s.lambda, &x, omega);
    advance(p, s, x, lambda, forward.max(backward))
}

/// Runs `params.variant` from `(x0, λ0)` until `max_iters` steps or residual `≤ tol`.
pub fn run(
    p: &MultiBlockProblem,
    params: &SolverParams,
    x0: Vec<Vector>,
    lambda0: Vector,
) -> Result<SolverState> {
    run_observed(p, params, x0, lambda0, |_| {})
}

/// [`run`] with a callback invoked on every history entry as it is produced, starting with
/// the initial one.
pub fn run_observed(
    p: &MultiBlockProblem,
    params: &SolverParams,
    x0: Vec<Vector>,
    lambda0: Vector,
    mut observer: impl FnMut(&HistoryEntry),
) -> Result<SolverState> {
    params.variant.validate(p.beta())?;
    if !(params.tol >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tol must be nonnegative, got {}",
            params.tol
        )));
    }
    let mut state = SolverState::new(p, x0, lambda0)?;
    observer(state.last());
    let mut rng = match params.variant {
        Variant::RandomPermutation { seed } => Some(SplitMix64::new(seed)),
        _ => None,
    };
    let correction = match params.variant {
        Variant::GaussianBackSubstitution { .. } => Some(BackSubstitution::new(p)?),
        _ => None,
    };
    info!(
        "running {} for at most {} iterations (beta = {})",
        params.variant.name(),
        params.max_iters,
        p.beta()
    );
    while state.iter < params.max_iters && state.last().primal_residual > params.tol {
        state = match params.variant {
            Variant::Cyclic => step_cyclic(p, &state)?,
            Variant::RandomPermutation { .. } => {
                let (next, draw) = step_rp(p, &state, rng.as_mut().expect("seeded above"))?;
                debug!("iteration {}: order {:?}", next.iter, draw.sigma);
                next
            }
            Variant::GaussianBackSubstitution { alpha } => {
                step_gadmm_with(p, &state, alpha, correction.as_ref().expect("built above"))?
            }
            Variant::SymmetricGaussSeidel { omega } => step_sadmm(p, &state, omega)?,
        };
        let entry = *state.last();
        observer(&entry);
        if !(entry.primal_residual <= DIVERGENCE_THRESHOLD) {
            return Err(Error::Diverged {
                iter: entry.iter,
                residual: entry.primal_residual,
                state: Box::new(state),
            });
        }
    }
    info!(
        "{} stopped after {} iterations, residual {:e}",
        params.variant.name(),
        state.iter,
        state.last().primal_residual
    );
    Ok(state)
}
