use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max deviation {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("eigenvalue iteration failed to converge")]
    NoConvergence,

    #[error("matrix norm {norm:e} exceeds the scaling budget of expm")]
    Overflow { norm: f64 },

    #[error("linear system is singular")]
    SingularMatrix,

    #[error("quadrature needs at least 2 samples, got {0}")]
    TooFewSamples(usize),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid model: {0}")]
    ModelInvalid(String),

    #[error("invalid density matrix: {0}")]
    StateInvalid(String),

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("operation requires a trap but the model has none")]
    NoTrap,

    #[error("history set has {entries} decoherence-matrix entries, exceeding the cap of {cap}")]
    BudgetExceeded { entries: u128, cap: u64 },

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),

    #[error("file not found: {0}")]
    FileNotFound(String),

    #[error("parse error: {0}")]
    ParseError(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
