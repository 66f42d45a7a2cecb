use thiserror::Error;

/// Errors raised by the geometric and spectral kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FinslerError {
    #[error("invalid metric model: {0}")]
    InvalidModel(String),
    #[error("operation undefined at the zero tangent vector")]
    DegenerateDirection,
    #[error("fundamental tensor is singular or indefinite at {0:?}")]
    DegenerateMetric([f64; 2]),
    #[error("finite differencing failed: {0}")]
    DifferentiationFailure(String),
    #[error("geodesic integration diverged at t = {t}")]
    IntegrationDiverged { t: f64 },
    #[error("geodesic left the chart domain at t = {t}")]
    ChartExit { t: f64 },
    #[error("Legendre inversion did not converge after {iterations} iterations (residual {residual:e})")]
    InversionFailure { iterations: usize, residual: f64 },
    #[error("energy undefined for the zero field")]
    UndefinedEnergy,
    #[error("level set at t = {0} is empty")]
    TrivialCut(f64),
    #[error("unsupported dimension n = {0}")]
    UnsupportedDimension(usize),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("bound direction mismatch: {0}")]
    DirectionViolation(String),
    #[error("incomplete verification: missing {0}")]
    IncompleteVerification(String),
}

pub type Result<T, E = FinslerError> = std::result::Result<T, E>;
