use crate::model::SolverState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Every failure the library reports. Messages start with the variant name so the
/// CLI can print them verbatim.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("SingularMatrix: pivot {pivot:e} below threshold {threshold:e} at column {column}")]
    SingularMatrix {
        column: usize,
        pivot: f64,
        threshold: f64,
    },
    #[error("NoConvergence: {what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },
    #[error("NonSymmetric: entry ({row}, {col}) differs from its transpose by {gap:e}")]
    NonSymmetric { row: usize, col: usize, gap: f64 },
    #[error("NonpositiveDiagonal: diagonal entry {index} is {value}")]
    NonpositiveDiagonal { index: usize, value: f64 },
    #[error("NonFinite: {0}")]
    NonFinite(String),
    #[error("DimensionMismatch: {0}")]
    DimensionMismatch(String),
    #[error("ParseError: {0}")]
    Parse(String),
    #[error("InvalidPenalty: beta must be positive, got {0}")]
    InvalidPenalty(f64),
    #[error("SingularBlockGram: A_i^T A_i of block {block} has smallest eigenvalue {smallest:e}")]
    SingularBlockGram { block: usize, smallest: f64 },
    #[error("InvalidObjective: block {block}: {reason}")]
    InvalidObjective { block: usize, reason: String },
    #[error("InvalidParameter: {0}")]
    InvalidParameter(String),
    #[error("Diverged: primal residual {residual:e} at iteration {iter}")]
    Diverged {
        iter: usize,
        residual: f64,
        state: Box<SolverState>,
    },
    #[error("SingularG: G = theta + beta A^T A is not invertible")]
    SingularG,
    #[error("NotAffine: {0}")]
    NotAffine(String),
    #[error("MappingViolation: {0}")]
    MappingViolation(String),
    #[error("TooManyBlocks: {blocks} blocks exceed the enumeration limit of {max}")]
    TooManyBlocks { blocks: usize, max: usize },
    #[error("UnknownExperiment: {0}")]
    UnknownExperiment(String),
    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}
