use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid event sequence: {0}")]
    InvalidEvents(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("thinning acceptance ratio {ratio} exceeds 1 for code {code} at t = {time}")]
    DominatingBound { code: usize, time: f64, ratio: f64 },

    #[error("matrix is not Hermitian (max defect {0:e})")]
    NotHermitian(f64),

    #[error("both classes must be present (found {positives} positive, {negatives} negative)")]
    SingleClass { positives: usize, negatives: usize },

    #[error("solver did not converge after {iterations} iterations (gradient norm {grad_norm:e}); {hint}")]
    NotConverged {
        iterations: usize,
        grad_norm: f64,
        hint: &'static str,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
