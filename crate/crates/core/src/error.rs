use thiserror::Error;

/// Errors produced by the fitting and testing routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Fewer than two distinct sample positions; no log-concave density exists.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// A fitted estimator returned a non-finite log-density on a finite point.
    #[error("numeric failure: {0}")]
    Numeric(String),

    /// A single Monte-Carlo replication failed.
    #[error("run failed (mu={mu}, rep={rep}, seed={seed}): {source}")]
    Run {
        mu: f64,
        rep: usize,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
