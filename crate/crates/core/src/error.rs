use thiserror::Error;

/// Errors produced by the library.
///
/// The coarse split mirrors the CLI exit codes: input problems, numerical
/// failures, and violated preconditions are kept distinguishable.
#[derive(Debug, Error)]
pub enum Error {
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("composition would reach degree {degree}, above the materialization cap {cap}; evaluate through the tower instead")]
    ComposeCapExceeded { degree: String, cap: usize },

    #[error("coefficient overflow while materializing a degree-{degree} polynomial in float mode; evaluate through the tower (log-scale) instead")]
    CoefficientOverflow { degree: usize },

    #[error("root finding failed at level {level} (target {target}): {detail}")]
    RootFinding {
        level: usize,
        target: String,
        detail: String,
    },

    #[error("anchor a = {a} violates the preimage condition (margin {margin:.6e})")]
    AnchorInvalid { a: String, margin: f64 },

    #[error("moment matrix is not positive definite at order {order}: measure not real or requested order too large for this level")]
    NotPositiveDefinite { order: usize },

    #[error("regularity violated at n = {n}: {detail}")]
    RegularityViolation { n: usize, detail: String },

    #[error("interval bracketing failed on branch {branch} of level {level}: {detail}")]
    Bracketing {
        level: usize,
        branch: usize,
        detail: String,
    },

    #[error("input error: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
