use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("non-Hermitian input: {0}")]
    NonHermitian(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{n_qubits} qubits exceeds the limit of {limit} for this operation")]
    TooLarge { n_qubits: usize, limit: usize },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("symmetry {symmetry} does not commute with term {term}")]
    NonCommuting { symmetry: String, term: String },

    #[error("postselection discarded every shot")]
    AllShotsDiscarded,

    #[error("calibration matrix is singular")]
    SingularCalibration,

    #[error("expected {expected} parameters, got {got}")]
    ParamMismatch { expected: usize, got: usize },

    #[error("dataset: {0}")]
    Dataset(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
