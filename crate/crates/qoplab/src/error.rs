use thiserror::Error;

/// Errors shared across the laboratory modules.
#[derive(Error, Debug)]
pub enum QopError {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),

    #[error("total dimension {total} exceeds cap {cap}")]
    DimCap { total: usize, cap: usize },

    #[error("invalid subsystem selection: {0}")]
    BadSubsystem(String),

    #[error("state is not normalized: ‖ψ‖ = {norm}")]
    NotNormalized { norm: f64 },

    #[error("matrix is not Hermitian (max |M − M†| entry = {dev:.3e})")]
    NotHermitian { dev: f64 },

    #[error("matrix is not unitary (max |M†M − I| entry = {dev:.3e})")]
    NotUnitary { dev: f64 },

    #[error("operator fails positivity: min eigenvalue = {min_eig:.3e}")]
    NotPositive { min_eig: f64 },

    #[error("trace = {trace} where 1 was required")]
    BadTrace { trace: f64 },

    #[error("numerical routine failed: {0}")]
    Numerics(String),

    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, QopError>;
