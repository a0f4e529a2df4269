use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("register size mismatch: expected {expected} qubits, got {got}")]
    SizeMismatch { expected: usize, got: usize },

    #[error("register of {0} qubits is too large for a dense matrix (limit {1})")]
    RegisterTooLarge(usize, usize),

    #[error("mode index {index} out of range for {n_modes} modes")]
    ModeOutOfRange { index: usize, n_modes: usize },

    #[error("invalid Pauli letter '{0}'")]
    InvalidPauliLetter(char),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parameter {index} is unbound (circuit has {available} bound values)")]
    UnboundParameter { index: usize, available: usize },

    #[error("gate '{0}' has no parameter derivative")]
    NotDifferentiable(String),

    #[error("operator is not Hermitian; {0}")]
    NotHermitian(String),

    #[error("residual {residual:e} exceeds tolerance {tolerance:e}; {context}")]
    ResidualTooLarge {
        residual: f64,
        tolerance: f64,
        context: String,
    },

    #[error("no sign change of the residual in [{lo}, {hi}]; widen the bracket")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("state norm {0} deviates from 1")]
    NotNormalized(f64),

    #[error("misrouted operator split: {0}")]
    MisroutedSplit(String),

    #[error("{0}")]
    Validation(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
