use thiserror::Error;

/// Errors raised by the filtering and evaluation routines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum FilterError {
    #[error("sigma-point scaling n + kappa = {0} must be positive")]
    NonPositiveScaling(f64),

    #[error("cholesky factorization failed after {tries} jitter escalations (last jitter {last_jitter:e})")]
    FactorizationFailure { tries: usize, last_jitter: f64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("invalid gaussian belief: {0}")]
    InvalidBelief(String),

    #[error("innovation covariance is not positive definite")]
    SingularInnovation,

    #[error("gram matrix is singular after ridge regularization")]
    SingularGram,

    #[error("information matrix recursion hit a singular matrix")]
    SingularInformation,

    #[error("at least {required} Monte-Carlo runs are required, got {got}")]
    InsufficientRuns { required: usize, got: usize },

    #[error("degenerate inputs: {0}")]
    DegenerateInputs(String),

    #[error("empty input")]
    EmptyInput,

    #[error("forward step failed at inverse sigma point {index}: {source}")]
    ForwardStep {
        index: usize,
        #[source]
        source: Box<FilterError>,
    },
}

pub type Result<T> = std::result::Result<T, FilterError>;
