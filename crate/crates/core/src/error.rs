use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An input outside the domain of an operation (zero norm, no double well, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Two fields or grids that were required to match do not.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// The caller asked for something that makes no sense (empty trace set, ...).
    #[error("usage error: {0}")]
    Usage(String),

    #[error("internal consistency error: {0}")]
    Consistency(String),

    #[error("eigensolver did not converge after {iterations} iterations (residuals {residuals:?})")]
    Convergence { iterations: usize, residuals: Vec<f64> },

    #[error("unstable time step at step {step}: norm history tail {norms:?}")]
    Instability { step: usize, norms: Vec<f64> },

    #[error("quadrature accuracy not reached: relative change {achieved:e} > {target:e}")]
    Accuracy { achieved: f64, target: f64 },

    /// Localized combinations of the singlet/triplet states do not localize.
    #[error("phase convention error: {0}")]
    PhaseConvention(String),

    #[error("fit error: {0}")]
    Fit(String),

    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid configuration: {0:?}")]
    Validation(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
