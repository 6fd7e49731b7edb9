use thiserror::Error;

/// Errors produced by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what}: error estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    NotConverged {
        what: &'static str,
        estimate: f64,
        tolerance: f64,
    },

    #[error("tail truncation estimate {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    TailEstimate { estimate: f64, tolerance: f64 },

    #[error("window ({n1}, {n2}) outside admissible index range [{lo}, {hi}]")]
    WindowOutOfRange { n1: i64, n2: i64, lo: i64, hi: i64 },

    #[error("sequence is not strictly increasing at index {0}")]
    NotIncreasing(i64),

    #[error("sequence is not lacunary for rho = {rho}: minimum ratio {min_ratio}")]
    NotLacunary { rho: f64, min_ratio: f64 },

    #[error("non-finite value at position {0}")]
    NonFinite(usize),

    #[error("empty {0}")]
    Empty(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
