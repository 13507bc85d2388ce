//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |A - A^dag| entry is {defect:.3e}, tolerance {tol:.3e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("matrix is singular: sigma_min = {sigma_min:.3e} is below 1e-14 * sigma_max = {sigma_max:.3e}")]
    Singular { sigma_min: f64, sigma_max: f64 },

    #[error("zero vector where a nonzero vector is required")]
    ZeroVector,

    #[error("zero matrix cannot be rescaled")]
    ZeroMatrix,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix size {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("{n} qubits exceeds the configured limit of {max}: {context}")]
    QubitLimit { n: usize, max: usize, context: String },

    #[error("expected {expected} ansatz parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },

    #[error("vector norm {norm} differs from 1 by more than {tol}")]
    NotUnitNorm { norm: f64, tol: f64 },

    #[error("unsupported gate for this operation: {0}")]
    UnsupportedGate(String),

    #[error("circuit is not lowered to the RX/RY/RZ/CX basis: found {0}")]
    NotLowered(String),

    #[error("invalid Hadamard test spec: {0}")]
    InvalidTestSpec(String),

    #[error("shot count must be at least 1")]
    ZeroShots,

    #[error(
        "LCU coefficients have imaginary parts up to {max_imag:.3e}; \
         the reduced real-coefficient expressions do not apply, use the general path"
    )]
    ComplexCoefficients { max_imag: f64 },

    #[error("denominator <psi|psi> = {0:.3e} is below the singularity threshold 1e-14")]
    SingularDenominator(f64),

    #[error("objective returned a non-finite value at evaluation {evaluation}")]
    NonFiniteObjective { evaluation: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
