use thiserror::Error;

/// Invalid shapes, sizes or configuration values.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArgumentError {
    #[error("{what}: dimension mismatch, expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid CSR structure: {0}")]
    InvalidCsr(String),
    #[error("grid needs at least {min} points per axis, got {got}")]
    GridTooSmall { min: usize, got: usize },
    #[error("unsupported grid: {0}")]
    UnsupportedGrid(String),
    #[error("dense size {n} exceeds cap {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Iterative solver that stopped before meeting its tolerance.
///
/// Carries the best iterate so callers can inspect or fall back.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{solver} did not converge after {iterations} iterations (residual {residual:e})")]
pub struct ConvergenceError {
    pub solver: &'static str,
    pub iterations: usize,
    pub residual: f64,
    pub best: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error(transparent)]
    Argument(#[from] ArgumentError),
    #[error(transparent)]
    Convergence(#[from] ConvergenceError),
    #[error("incomplete Cholesky hit a nonpositive pivot {pivot:e} at row {row}")]
    Factorization { row: usize, pivot: f64 },
}

/// Failure of a time integration run.
///
/// Blow-up and solver failure are kept apart so stability scans can tell an
/// unstable step size from a solver that gave up.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Argument(#[from] ArgumentError),
    #[error("solver failed at step {step} (t = {t}): {source}")]
    Solver {
        step: usize,
        t: f64,
        #[source]
        source: SolverError,
    },
    #[error("blow-up at step {step} (t = {t}): max-norm {norm:e}")]
    BlowUp { step: usize, t: f64, norm: f64 },
}

impl IntegrateError {
    pub fn is_blow_up(&self) -> bool {
        matches!(self, IntegrateError::BlowUp { .. })
    }
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Argument(#[from] ArgumentError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error("reference solution rejected: {0}")]
    Reference(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}
