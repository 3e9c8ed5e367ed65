use thiserror::Error;

use crate::regime::RegimeReport;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid cavity graph: {0}")]
    InvalidGraph(String),

    #[error("frequency collision between {first} and {second} (both {value})")]
    FrequencyCollision {
        first: String,
        second: String,
        value: f64,
    },

    #[error("unsupported detuning configuration: {0}")]
    UnsupportedDetuning(String),

    #[error(
        "time step {max_step} does not resolve the fastest rotating term \
         (max |nu| = {max_frequency}, step limit {limit})"
    )]
    StepResolution {
        max_frequency: f64,
        max_step: f64,
        limit: f64,
    },

    #[error("operator is not Hermitian (max asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("initial state is not an eigenstate of the starting Hamiltonian (residual {0:e})")]
    NotAnEigenstate(f64),

    #[error("numerical non-convergence: {0}")]
    NonConvergence(String),

    #[error("dimension {dim} exceeds the dense limit {limit}")]
    TooLarge { dim: usize, limit: usize },

    #[error("parameter regime violated: {}", .0.messages.join("; "))]
    RegimeViolation(Box<RegimeReport>),
}

pub type Result<T> = std::result::Result<T, Error>;
