use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("inconsistent edit: {0}")]
    InconsistentEdit(String),
    #[error("infeasible add/delete mix: {0}")]
    InfeasibleMix(String),
    #[error("instance too large: n = {n} exceeds the enumeration budget {budget}")]
    TooLarge { n: usize, budget: usize },
    #[error("bad parameters: {0}")]
    BadParams(String),
    #[error("embedded construction failed validation: {0}")]
    ConstructionInvalid(String),
    #[error("eigensolver did not converge")]
    NoConvergence,
    #[error("ambiguous eigenvalue clustering: gap {gap:.3e} below {threshold:.3e}")]
    AmbiguousClustering { gap: f64, threshold: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("solver failure: {0}")]
    SolverFailure(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("maximum iterations ({0}) reached")]
    MaxIterations(usize),
    #[error("fixed-point iteration is not contracting: {0}")]
    NotContracting(String),
    #[error("projector diagonals are not uniform")]
    NotUniform,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("dataset is empty: {0}")]
    EmptyDataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
