use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index {index} out of range (limit {limit})")]
    IndexOutOfRange { index: usize, limit: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("map is not trace preserving (deviation {deviation:e})")]
    NotTracePreserving { deviation: f64 },

    #[error("map is not completely positive (Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64 },

    #[error("solver did not converge after {iterations} iterations (gap {gap:e}, infeasibility {infeasibility:e})")]
    SolverFailure {
        iterations: usize,
        gap: f64,
        infeasibility: f64,
    },

    #[error("honesty constraint infeasible: state {state} short by {violation:e}")]
    Infeasible { state: usize, violation: f64 },

    #[error("degenerate channel set: {0}")]
    DegenerateSet(String),

    #[error("unknown code `{0}`")]
    UnknownCode(String),

    #[error("invalid code: {0}")]
    InvalidCode(String),

    #[error("codespace leakage {0:e} exceeds tolerance")]
    Leakage(f64),

    #[error("no candidate degree met the relative variance bar (best degree {degree}, relative variance {relative_variance:e})")]
    FitRejected { degree: u32, relative_variance: f64 },

    #[error("series is identically zero")]
    ZeroSeries,

    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors raised by an iterative solver rather than by bad input.
    pub fn is_solver_failure(&self) -> bool {
        matches!(
            self,
            Error::SolverFailure { .. } | Error::Infeasible { .. } | Error::FitRejected { .. }
        )
    }
}
