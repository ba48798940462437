use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("no normalizable steady state: {0}")]
    NoSteadyState(String),

    #[error("steady state is not unique: null space dimension {nullity} (singular values {singular_values:?})")]
    DegenerateSteadyState {
        nullity: usize,
        singular_values: Vec<f64>,
    },

    #[error("linear algebra failure: {0}")]
    LinearAlgebra(String),

    #[error("truncation did not converge below the dimension cap {cap}: {detail}")]
    TruncationCap { cap: usize, detail: String },

    #[error("propagation failed: {0}")]
    Stiffness(String),

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("distortion threshold {epsilon} is unattainable; it must lie below {bound}")]
    UnattainableDistortion { epsilon: f64, bound: f64 },

    #[error("frequency grid rejected: {0}")]
    Grid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
