use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty range: limit {limit} < 2")]
    EmptyRange { limit: u64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("resource limit exceeded: {0}")]
    Resource(String),

    /// A claimed group order does not annihilate an element.
    #[error("inconsistent group order: {0}")]
    Inconsistent(String),

    #[error("no class number candidate in [{lo}, {hi}] for d = {d}")]
    SearchFailure { d: i64, lo: u64, hi: u64 },

    #[error("probabilistic step exhausted for d = {d}; retry with a new seed")]
    RetryExhausted { d: i64 },

    #[error("outside hypothesis: {0}")]
    Hypothesis(String),

    #[error("arithmetic overflow in {0}")]
    Overflow(&'static str),

    #[error("merge refused: {0}")]
    MergeRefused(String),

    #[error("survey not certified complete: {0}")]
    Incomplete(String),

    #[error("{}:{line}: {msg}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
