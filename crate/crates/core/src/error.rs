use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A space, modulus or mapping could not be built from its description.
    #[error("construction error: {0}")]
    Construction(String),

    /// A configuration document is malformed or references unknown names.
    #[error("configuration error: {0}")]
    Config(String),

    /// A hypothesis of a bound theorem fails on the supplied data.
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    /// A recorded trace does not match the mapping that supposedly produced it.
    #[error("trace integrity error at step {step}: {detail}")]
    Integrity { step: usize, detail: String },

    /// Floating point values left the representable range.
    #[error("numeric error at step {step}: {detail}")]
    Numeric { step: usize, detail: String },

    /// A computation would exceed its configured budget.
    #[error("resource budget exceeded: {0}")]
    Resource(String),

    /// Expression or mini-language parse failure.
    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    /// A sequence violates the premise of a sequence lemma.
    #[error("precondition violated at index {index}: {detail}")]
    Precondition { index: usize, detail: String },

    /// No witness was found where a proven statement guarantees one.
    #[error("counterexample: {0}")]
    Counterexample(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }
}
