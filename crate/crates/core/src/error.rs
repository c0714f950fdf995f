use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("tolerance `{field}` must lie strictly between 0 and 1 (got {value})")]
pub struct ToleranceError {
    pub field: &'static str,
    pub value: f64,
}

/// Failures of the dense linear-algebra kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("matrix is singular under tolerance (rank {rank} < {n})")]
    Singular { rank: usize, n: usize },
    #[error("eigenvalue iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
}

/// Failures of the structure-constant model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgebraError {
    #[error("malformed algebra: {reason}")]
    MalformedSpec { reason: String },
    #[error("dimension mismatch: expected length {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("change of basis is singular")]
    Singular,
    #[error("annihilator is zero")]
    EmptyAnnihilator,
    #[error("annihilator is the whole algebra, quotient is zero-dimensional")]
    EmptyQuotient,
    #[error("algebra is already complex")]
    AlreadyComplex,
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Conditions under which the solver cannot reach a verdict.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("restricted matrix {index} is not diagonalisable inside a common eigenspace")]
    RefinementInconsistency { index: usize },
    #[error("Gram matrix of a common eigenspace is numerically singular")]
    GramBreakdown,
    #[error("matrices must be square and of equal size")]
    ShapeMismatch,
    #[error("matrix {index} is not symmetric")]
    NotSymmetric { index: usize },
    #[error("witness rank {found} does not match the required rank {expected}")]
    WitnessRank { expected: usize, found: usize },
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("epsilon {epsilon} outside the genetic range [{lo}, {hi}] of `{example}`")]
    OutOfRangeEpsilon {
        example: &'static str,
        epsilon: f64,
        lo: f64,
        hi: f64,
    },
    #[error("`{kind}` instances need dimension at least {min} (got {n})")]
    UnsupportedSize {
        kind: &'static str,
        n: usize,
        min: usize,
    },
    #[error("unknown example `{0}`")]
    UnknownExample(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}
