use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A coefficient beyond the computed precision was requested.
    #[error("precision exhausted: {what} needs coefficient index {needed}, only {available} available")]
    PrecisionExhausted {
        what: String,
        needed: u64,
        available: u64,
    },

    #[error("rank instability: dimension {full} at precision {prec} but {half} at precision {half_prec}")]
    RankInstability {
        prec: usize,
        full: usize,
        half_prec: usize,
        half: usize,
    },

    #[error("Hecke operator T_{{{p}^2}} does not split over Q: characteristic polynomial {charpoly}")]
    NotSplit { p: u64, charpoly: String },

    #[error("eigenspace of dimension {dim} not separated by primes {primes:?}")]
    NotSeparated { dim: usize, primes: Vec<u64> },

    #[error("form is identically zero within precision")]
    ZeroForm,

    #[error("no admissible square-free index with nonzero coefficient below {0}")]
    NoAdmissibleIndex(usize),

    #[error("series is not in the span of the given basis: {0}")]
    NotInSpan(String),

    #[error("verification failed: {identity} at index {index}")]
    Verification { identity: String, index: u64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn exhausted(what: impl Into<String>, needed: u64, available: u64) -> Error {
    Error::PrecisionExhausted {
        what: what.into(),
        needed,
        available,
    }
}
