use thiserror::Error;

/// Errors produced across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// A kernel parameter is outside its family's admissible range.
    #[error("parameter domain violation for {family}: {message}")]
    ParameterDomain { family: String, message: String },

    /// A derivative was requested on the diagonal s = t where it is undefined.
    #[error("kernel derivative undefined on the diagonal (s = t = {at})")]
    DiagonalSingularity { at: f64 },

    /// A finite-difference step underflowed to zero.
    #[error("finite-difference step underflow at (s, t) = ({s}, {t})")]
    StepUnderflow { s: f64, t: f64 },

    /// Numerical integration failed to reach the requested tolerance.
    #[error("quadrature did not converge: {context} (error estimate {error_estimate:.3e})")]
    Quadrature {
        context: String,
        error_estimate: f64,
    },

    /// The kernel does not support the requested operation.
    #[error("unsupported kernel for this operation: {0}")]
    UnsupportedKernel(String),

    /// Covariance factorization failed even after jitter escalation.
    #[error("covariance factorization failed (min eigenvalue {min_eigenvalue:.3e})")]
    Factorization { min_eigenvalue: f64 },

    /// An estimator denominator vanished (all-zero or otherwise degenerate path).
    #[error("degenerate path: {0}")]
    DegeneratePath(String),

    /// Invalid experiment or grid configuration.
    #[error("invalid configuration: {0}")]
    Configuration(String),

    /// Too many degenerate replications in a Monte Carlo run.
    #[error("data quality: {degenerate} of {total} replications degenerate")]
    DataQuality { degenerate: usize, total: usize },

    #[error("invalid step function: {0}")]
    InvalidStepFunction(String),

    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
