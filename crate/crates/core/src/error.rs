use thiserror::Error;

/// Errors raised by the estimation pipeline and its supporting kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not antisymmetric (max |S + S^T| = {0:e})")]
    NotAntisymmetric(f64),

    #[error("matrix is not a rotation: orthogonality error {orthogonality:e}, det {det}")]
    NotARotation { orthogonality: f64, det: f64 },

    #[error("projection onto SO(3) failed: det = {0}")]
    ReflectionAfterProjection(f64),

    #[error("matrix is not symmetric positive definite ({0})")]
    NotPositiveDefinite(String),

    #[error("measurement noise variance must be positive, got {0}")]
    NonPositiveMeasurementNoise(f64),

    #[error("timestamp regression: {previous} s followed by {current} s")]
    TimestampRegression { previous: f64, current: f64 },

    #[error("stream length mismatch: {what} has {got} samples, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("inertial magnetic field must be nonzero")]
    ZeroMagneticField,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
