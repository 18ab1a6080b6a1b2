use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("qubit index {index} out of range for {n_qubits} qubits")]
    QubitOutOfRange { index: usize, n_qubits: usize },

    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),

    #[error("matrix is not unitary (deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("observable is not Hermitian (deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid parameter location: {0}")]
    InvalidLocation(String),

    #[error("resource cap exceeded: {requested} amplitudes requested, cap is {cap}")]
    ResourceCap { requested: u128, cap: u128 },

    #[error("table entry {0} is flagged and was requested without the override")]
    FlaggedEntry(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),

    #[error("i/o failed: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
