use thiserror::Error;

/// Errors produced by model construction, measurement validation, and the
/// analysis pipeline.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("qubit index {index} out of range for {nqubits} qubits")]
    QubitOutOfRange { index: usize, nqubits: usize },

    #[error("duplicate qubit index {0}")]
    DuplicateQubit(usize),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not anti-Hermitian (max deviation {deviation:.3e})")]
    NotAntiHermitian { deviation: f64 },

    #[error("matrix is not traceless (|trace| = {trace:.3e})")]
    NotTraceless { trace: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("state vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("Bloch axis is not unit length (norm = {norm})")]
    NonUnitAxis { norm: f64 },

    #[error("matrix is neither Hermitian nor anti-Hermitian within tolerance")]
    NotBlochDecomposable,

    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),

    #[error("precondition not met: {0}")]
    Precondition(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("inconsistent structure: {0}")]
    Inconsistent(String),

    #[error("model spec: {0}")]
    Spec(String),
}

pub type Result<T> = std::result::Result<T, Error>;
