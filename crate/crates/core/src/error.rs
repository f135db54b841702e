use thiserror::Error;

/// Errors raised by model construction, exact oracles and experiment configuration.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tree of size {n} requires expectations up to {n}, table only covers {covered}")]
    IncompleteTable { n: usize, covered: usize },

    #[error("state {0:?} is not sorted in nonincreasing order")]
    UnsortedState(Vec<u32>),

    #[error("enumeration budget exceeded: {0}")]
    Budget(String),

    #[error("operation requires a b-ary tree, got a linear recursive tree")]
    NotBary,

    #[error("coupling order violated at step {step}: {lower:?} is not below {upper:?}")]
    OrderViolation {
        step: usize,
        lower: Vec<u32>,
        upper: Vec<u32>,
    },

    #[error("stochastic domination fails for n = {n} at v = {v}: cdf margin {margin:e}")]
    DominationViolation { n: usize, v: f64, margin: f64 },

    #[error("tail bound breached at t = {t} ({side}): {detail}")]
    TailBreach { t: f64, side: String, detail: String },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
