//! Multi-block problems `min Σ θᵢ(xᵢ)  s.t.  Σ Aᵢ xᵢ = b`, their JSON form, and solver state.
//!
//! Quadratic terms are evaluated as `xᵀΘx` (no ½ factor); the L1 term adds `τ‖x‖₁`.

use serde::{Deserialize, Serialize};

use crate::densela::{eigenvalues, Matrix, Vector};
use crate::{Error, Result};

const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const GRAM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub enum ObjectiveTerm {
    Zero,
    Quadratic { theta: Matrix },
    QuadraticL1 { theta: Matrix, tau: f64 },
}

impl ObjectiveTerm {
    pub fn theta(&self) -> Option<&Matrix> {
        match self {
            ObjectiveTerm::Zero => None,
            ObjectiveTerm::Quadratic { theta } | ObjectiveTerm::QuadraticL1 { theta, .. } => {
                Some(theta)
            }
        }
    }

    pub fn l1_weight(&self) -> f64 {
        match self {
            ObjectiveTerm::QuadraticL1 { tau, .. } => *tau,
            _ => 0.0,
        }
    }

    /// True when the block minimizer is an affine function of its data.
    pub fn is_smooth(&self) -> bool {
        self.l1_weight() == 0.0
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ObjectiveTerm::Zero => 0.0,
            ObjectiveTerm::Quadratic { theta } => quad_form(theta, x),
            ObjectiveTerm::QuadraticL1 { theta, tau } => {
                quad_form(theta, x) + tau * x.iter().map(|v| v.abs()).sum::<f64>()
            }
        }
    }

    fn validate(&self, block: usize, dim: usize) -> Result<()> {
        let invalid = |reason: String| Error::InvalidObjective { block, reason };
        if let Some(theta) = self.theta() {
            if theta.rows() != dim || theta.cols() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "block {block}: theta is {}x{}, expected {dim}x{dim}",
                    theta.rows(),
                    theta.cols()
                )));
            }
            if let Some((i, j, gap)) = theta.symmetry_defect(SYMMETRY_TOL) {
                return Err(invalid(format!(
                    "theta not symmetric at ({i}, {j}), gap {gap:e}"
                )));
            }
            let smallest = eigenvalues(theta)?
                .iter()
                .map(|e| e.re)
                .fold(f64::INFINITY, f64::min);
            if smallest < -PSD_TOL {
                return Err(invalid(format!(
                    "theta not positive semidefinite, smallest eigenvalue {smallest:e}"
                )));
            }
        }
        let tau = self.l1_weight();
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(invalid(format!("L1 weight must be nonnegative, got {tau}")));
        }
        Ok(())
    }
}

fn quad_form(theta: &Matrix, x: &[f64]) -> f64 {
    theta.matvec(x).dot(x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub objective: ObjectiveTerm,
    /// Coupling matrix, `p x nᵢ`.
    pub a: Matrix,
}

impl Block {
    pub fn new(objective: ObjectiveTerm, a: Matrix) -> Self {
        Block { objective, a }
    }

    pub fn dim(&self) -> usize {
        self.a.cols()
    }
}

/// Validated multi-block problem. Construct through [`MultiBlockProblem::new`] or
/// [`load_problem`]; fields are read-only afterwards.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiBlockProblem {
    blocks: Vec<Block>,
    b: Vector,
    beta: f64,
}

impl MultiBlockProblem {
    pub fn new(blocks: Vec<Block>, b: Vector, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidPenalty(beta));
        }
        if blocks.is_empty() {
            return Err(Error::DimensionMismatch("problem has no blocks".into()));
        }
        if !b.is_finite() {
            return Err(Error::NonFinite("b has non-finite entries".into()));
        }
        let p = b.dim();
        for (i, block) in blocks.iter().enumerate() {
            if block.a.rows() != p {
                return Err(Error::DimensionMismatch(format!(
                    "block {i}: A has {} rows but b has dimension {p}",
                    block.a.rows()
                )));
            }
            if block.dim() == 0 {
                return Err(Error::DimensionMismatch(format!(
                    "block {i} has dimension 0"
                )));
            }
            block.objective.validate(i, block.dim())?;
            let smallest = eigenvalues(&block.a.gram())?
                .iter()
                .map(|e| e.re)
                .fold(f64::INFINITY, f64::min);
            if smallest <= GRAM_TOL {
                return Err(Error::SingularBlockGram { block: i, smallest });
            }
        }
        Ok(MultiBlockProblem { blocks, b, beta })
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn block_dims(&self) -> Vec<usize> {
        self.blocks.iter().map(Block::dim).collect()
    }

    /// Total primal dimension `n = Σ nᵢ`.
    pub fn primal_dim(&self) -> usize {
        self.blocks.iter().map(Block::dim).sum()
    }

    /// Constraint dimension `p`.
    pub fn dual_dim(&self) -> usize {
        self.b.dim()
    }

    pub fn b(&self) -> &Vector {
        &self.b
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Same problem with a different penalty.
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidPenalty(beta));
        }
        Ok(MultiBlockProblem {
            beta,
            ..self.clone()
        })
    }

    /// Concatenated constraint matrix `A = (A₁ … A_m)`.
    pub fn stacked_a(&self) -> Matrix {
        let parts: Vec<&Matrix> = self.blocks.iter().map(|b| &b.a).collect();
        Matrix::hstack(&parts)
    }

    pub fn is_smooth(&self) -> bool {
        self.blocks.iter().all(|b| b.objective.is_smooth())
    }

    pub fn check_dims(&self, x: &[Vector]) -> Result<()> {
        if x.len() != self.blocks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} block values for {} blocks",
                x.len(),
                self.blocks.len()
            )));
        }
        for (i, (xi, block)) in x.iter().zip(&self.blocks).enumerate() {
            if xi.dim() != block.dim() {
                return Err(Error::DimensionMismatch(format!(
                    "block {i}: value has dimension {}, expected {}",
                    xi.dim(),
                    block.dim()
                )));
            }
        }
        Ok(())
    }

    /// `Σ Aᵢ xᵢ`, without dimension checks.
    pub(crate) fn apply_a(&self, x: &[Vector]) -> Vector {
        let mut out = Vector::zeros(self.dual_dim());
        for (xi, block) in x.iter().zip(&self.blocks) {
            out = out.add(&block.a.matvec(xi));
        }
        out
    }

    pub(crate) fn residual_vector(&self, x: &[Vector]) -> Vector {
        self.apply_a(x).sub(&self.b)
    }
}

/// `Σᵢ θᵢ(xᵢ)`.
pub fn objective_value(p: &MultiBlockProblem, x: &[Vector]) -> Result<f64> {
    p.check_dims(x)?;
    Ok(p.blocks
        .iter()
        .zip(x)
        .map(|(block, xi)| block.objective.value(xi))
        .sum())
}

/// `‖Σ Aᵢ xᵢ - b‖₂`.
pub fn primal_residual(p: &MultiBlockProblem, x: &[Vector]) -> Result<f64> {
    p.check_dims(x)?;
    Ok(p.residual_vector(x).norm())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryEntry {
    pub iter: usize,
    pub primal_residual: f64,
    pub objective: f64,
    /// Largest optimality-certificate violation among the block solves of this step
    /// (zero for the initial entry).
    pub certificate_gap: f64,
}

/// Iterate of any solver variant: block values, multiplier and the per-iteration history.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub x: Vec<Vector>,
    pub lambda: Vector,
    pub iter: usize,
    pub history: Vec<HistoryEntry>,
}

impl SolverState {
    /// Starting state; the history holds one entry for iteration 0.
    pub fn new(p: &MultiBlockProblem, x0: Vec<Vector>, lambda0: Vector) -> Result<Self> {
        p.check_dims(&x0)?;
        if lambda0.dim() != p.dual_dim() {
            return Err(Error::DimensionMismatch(format!(
                "multiplier has dimension {}, expected {}",
                lambda0.dim(),
                p.dual_dim()
            )));
        }
        let entry = HistoryEntry {
            iter: 0,
            primal_residual: primal_residual(p, &x0)?,
            objective: objective_value(p, &x0)?,
            certificate_gap: 0.0,
        };
        Ok(SolverState {
            x: x0,
            lambda: lambda0,
            iter: 0,
            history: vec![entry],
        })
    }

    /// Zero primal and dual start.
    pub fn zeros(p: &MultiBlockProblem) -> Self {
        let x = p.block_dims().into_iter().map(Vector::zeros).collect();
        SolverState::new(p, x, Vector::zeros(p.dual_dim()))
            .expect("dimensions match by construction")
    }

    pub fn last(&self) -> &HistoryEntry {
        self.history
            .last()
            .expect("history always holds the initial entry")
    }

    /// Concatenated primal vector.
    pub fn x_flat(&self) -> Vector {
        Vector::concat(&self.x)
    }
}

// --- JSON wire format ------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemDoc {
    beta: f64,
    b: Vec<f64>,
    blocks: Vec<BlockDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x0: Option<Vec<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BlockDoc {
    dim: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    objective: ObjectiveDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum ObjectiveDoc {
    Zero,
    Quadratic { theta: Vec<Vec<f64>> },
    QuadraticL1 { theta: Vec<Vec<f64>>, tau: f64 },
}

/// Problem plus an optional starting point, as read from a config file.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemConfig {
    pub problem: MultiBlockProblem,
    /// Concatenated starting point, split per block.
    pub x0: Option<Vec<Vector>>,
}

fn parse_matrix(
    rows: &[Vec<f64>],
    expect_rows: Option<usize>,
    cols: usize,
    what: &str,
) -> Result<Matrix> {
    // an all-empty row list still has a known shape
    if rows.iter().all(Vec::is_empty) && cols == 0 {
        return Ok(Matrix::zeros(rows.len(), 0));
    }
    let m = Matrix::from_rows(rows).map_err(|e| match e {
        Error::DimensionMismatch(msg) => Error::DimensionMismatch(format!("{what}: {msg}")),
        other => other,
    })?;
    if m.cols() != cols || expect_rows.is_some_and(|r| r != m.rows()) {
        return Err(Error::DimensionMismatch(format!(
            "{what} is {}x{}, expected {}x{cols}",
            m.rows(),
            m.cols(),
            expect_rows.map_or("p".to_string(), |r| r.to_string())
        )));
    }
    Ok(m)
}

/// Parses and validates a problem config (including the optional `x0`).
pub fn load_config(text: &str) -> Result<ProblemConfig> {
    let doc: ProblemDoc = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if !(doc.beta > 0.0) {
        return Err(Error::InvalidPenalty(doc.beta));
    }
    let p = doc.b.len();
    let mut blocks = Vec::with_capacity(doc.blocks.len());
    for (i, bd) in doc.blocks.iter().enumerate() {
        let a = parse_matrix(&bd.a, Some(p), bd.dim, &format!("block {i}: A"))?;
        let objective = match &bd.objective {
            ObjectiveDoc::Zero => ObjectiveTerm::Zero,
            ObjectiveDoc::Quadratic { theta } => ObjectiveTerm::Quadratic {
                theta: parse_matrix(theta, Some(bd.dim), bd.dim, &format!("block {i}: theta"))?,
            },
            ObjectiveDoc::QuadraticL1 { theta, tau } => ObjectiveTerm::QuadraticL1 {
                theta: parse_matrix(theta, Some(bd.dim), bd.dim, &format!("block {i}: theta"))?,
                tau: *tau,
            },
        };
        blocks.push(Block::new(objective, a));
    }
    let problem = MultiBlockProblem::new(blocks, Vector::from(doc.b), doc.beta)?;
    let x0 = match doc.x0 {
        None => None,
        Some(flat) => {
            if flat.len() != problem.primal_dim() {
                return Err(Error::DimensionMismatch(format!(
                    "x0 has {} entries, expected {}",
                    flat.len(),
                    problem.primal_dim()
                )));
            }
            Some(Vector::from(flat).split(&problem.block_dims()))
        }
    };
    Ok(ProblemConfig { problem, x0 })
}

/// Parses and validates a problem document.
pub fn load_problem(text: &str) -> Result<MultiBlockProblem> {
    load_config(text).map(|c| c.problem)
}

/// Serializes a problem (and optional starting point) to the JSON config format.
pub fn to_json(p: &MultiBlockProblem, x0: Option<&[Vector]>) -> String {
    let doc = ProblemDoc {
        beta: p.beta,
        b: p.b.to_vec(),
        blocks: p
            .blocks
            .iter()
            .map(|b| BlockDoc {
                dim: b.dim(),
                a: b.a.to_rows(),
                objective: match &b.objective {
                    ObjectiveTerm::Zero => ObjectiveDoc::Zero,
                    ObjectiveTerm::Quadratic { theta } => ObjectiveDoc::Quadratic {
                        theta: theta.to_rows(),
                    },
                    ObjectiveTerm::QuadraticL1 { theta, tau } => ObjectiveDoc::QuadraticL1 {
                        theta: theta.to_rows(),
                        tau: *tau,
                    },
                },
            })
            .collect(),
        x0: x0.map(|x| Vector::concat(x).into_inner()),
    };
    serde_json::to_string_pretty(&doc).expect("problem documents always serialize")
}

// --- built-in experiment problems ------------------------------------------------------

/// The 3x3 matrix on which cyclic three-block ADMM diverges.
pub fn counterexample_matrix() -> Matrix {
    Matrix::from_rows(&[
        vec![1.0, 1.0, 1.0],
        vec![1.0, 1.0, 2.0],
        vec![1.0, 2.0, 2.0],
    ])
    .expect("constant matrix")
}

/// `min 0 s.t. A x = 0` with three scalar blocks (the columns of [`counterexample_matrix`]).
pub fn counterexample_problem(beta: f64) -> Result<MultiBlockProblem> {
    let a = counterexample_matrix();
    let blocks = (0..3)
        .map(|j| Block::new(ObjectiveTerm::Zero, Matrix::column(&a.col(j))))
        .collect();
    MultiBlockProblem::new(blocks, Vector::zeros(3), beta)
}

/// Starting point `x₀ = (1, 1, 1)` of the counterexample runs.
pub fn counterexample_start() -> Vec<Vector> {
    vec![Vector::from(vec![1.0]); 3]
}

/// Ten two-dimensional blocks with `θᵢ(x) = xᵀΘᵢx + τ‖x‖₁`,
/// `Θᵢ = [[5+i, 1], [1, 5+i]]` and `Aᵢ` rows `(2r+1+i, 2r+2+i)` for `r = 0..9`.
///
/// Every column of `A` is affine in the row index, so `A` has rank 2 and only right-hand
/// sides affine in the row index are attainable. `b_r = 1 + 10r` keeps the leading
/// entries `(1, 11)` and is feasible.
pub fn quadratic_l1_problem(beta: f64, tau: f64) -> Result<MultiBlockProblem> {
    let blocks = (1..=10)
        .map(|i| {
            let s = 5.0 + i as f64;
            let theta = Matrix::from_rows(&[vec![s, 1.0], vec![1.0, s]]).expect("2x2");
            let a = Matrix::from_fn(10, 2, |r, c| (2 * r + 1 + c + i) as f64);
            Block::new(ObjectiveTerm::QuadraticL1 { theta, tau }, a)
        })
        .collect();
    let b = Vector::from_fn(10, |r| 1.0 + 10.0 * r as f64);
    MultiBlockProblem::new(blocks, b, beta)
}

#[cfg(test)]
mod tests {
    use super::*;

    const COUNTEREXAMPLE: &str = r#"{
        "beta": 4.0, "b": [0, 0, 0],
        "blocks": [
            {"dim": 1, "A": [[1], [1], [1]], "objective": {"type": "zero"}},
            {"dim": 1, "A": [[1], [1], [2]], "objective": {"type": "zero"}},
            {"dim": 1, "A": [[1], [2], [2]], "objective": {"type": "zero"}}
        ]
    }"#;

    #[test]
    fn loads_counterexample() {
        let p = load_problem(COUNTEREXAMPLE).unwrap();
        assert_eq!(p.num_blocks(), 3);
        assert_eq!(p.beta(), 4.0);
        assert_eq!(p.stacked_a(), counterexample_matrix());
        assert_eq!(p, counterexample_problem(4.0).unwrap());
    }

    #[test]
    fn dimension_mismatch_names_block() {
        let text = r#"{"beta": 1.0, "b": [0, 0],
            "blocks": [{"dim": 1, "A": [[1], [1], [1]], "objective": {"type": "zero"}}]}"#;
        match load_problem(text) {
            Err(Error::DimensionMismatch(msg)) => assert!(msg.contains("block 0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_beta_is_invalid_penalty() {
        let text = COUNTEREXAMPLE.replace("\"beta\": 4.0", "\"beta\": 0");
        assert!(matches!(load_problem(&text), Err(Error::InvalidPenalty(b)) if b == 0.0));
        assert!(matches!(
            counterexample_problem(4.0).unwrap().with_beta(-1.0),
            Err(Error::InvalidPenalty(_))
        ));
    }

    #[test]
    fn parse_and_gram_errors() {
        assert!(matches!(load_problem("{not json"), Err(Error::Parse(_))));
        let text = r#"{"beta": 1.0, "b": [0, 0],
            "blocks": [{"dim": 2, "A": [[1, 2], [2, 4]], "objective": {"type": "zero"}}]}"#;
        assert!(matches!(
            load_problem(text),
            Err(Error::SingularBlockGram { block: 0, .. })
        ));
        let text = r#"{"beta": 1.0, "b": [0],
            "blocks": [{"dim": 1, "A": [[1]], "objective": {"type": "quadratic", "theta": [[-1]]}}]}"#;
        assert!(matches!(
            load_problem(text),
            Err(Error::InvalidObjective { .. })
        ));
    }

    #[test]
    fn objective_values() {
        let p = counterexample_problem(1.0).unwrap();
        assert_eq!(objective_value(&p, &counterexample_start()).unwrap(), 0.0);

        let single = MultiBlockProblem::new(
            vec![Block::new(
                ObjectiveTerm::Quadratic {
                    theta: Matrix::identity(2),
                },
                Matrix::identity(2),
            )],
            Vector::zeros(2),
            1.0,
        )
        .unwrap();
        let x = vec![Vector::from(vec![1.0, 2.0])];
        assert_eq!(objective_value(&single, &x).unwrap(), 5.0);
        assert!(matches!(
            objective_value(&single, &[Vector::zeros(3)]),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn residuals() {
        let p = counterexample_problem(4.0).unwrap();
        let r = primal_residual(&p, &counterexample_start()).unwrap();
        assert!((r - 50f64.sqrt()).abs() < 1e-14);

        let q = quadratic_l1_problem(4.0, 1.0).unwrap();
        let zero = SolverState::zeros(&q);
        assert_eq!(objective_value(&q, &zero.x).unwrap(), 0.0);
        assert_eq!(zero.last().primal_residual, q.b().norm());
    }

    #[test]
    fn quadratic_l1_layout() {
        let q = quadratic_l1_problem(4.0, 1.0).unwrap();
        assert_eq!(q.block_dims(), vec![2; 10]);
        let a1 = &q.blocks()[0].a;
        assert_eq!(a1.row(0), &[2.0, 3.0]);
        assert_eq!(a1.row(9), &[20.0, 21.0]);
        let a10 = &q.blocks()[9].a;
        assert_eq!(a10.row(9), &[29.0, 30.0]);
        assert_eq!(q.b()[1], 11.0);
    }

    #[test]
    fn x0_is_split_per_block() {
        let text = COUNTEREXAMPLE.replace("\"beta\": 4.0,", "\"beta\": 4.0, \"x0\": [1, 1, 1],");
        let cfg = load_config(&text).unwrap();
        assert_eq!(cfg.x0.unwrap(), counterexample_start());
        let bad = COUNTEREXAMPLE.replace("\"beta\": 4.0,", "\"beta\": 4.0, \"x0\": [1, 1],");
        assert!(matches!(
            load_config(&bad),
            Err(Error::DimensionMismatch(_))
        ));
    }
}
