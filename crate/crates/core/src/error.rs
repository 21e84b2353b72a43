use thiserror::Error;

/// Errors raised by the skew-product toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("symbol {symbol} outside alphabet 1..={alphabet}")]
    SymbolOutOfRange { symbol: usize, alphabet: usize },

    #[error("invalid word: {0}")]
    InvalidWord(String),

    #[error("invalid transition matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid Markov chain: {0}")]
    InvalidMarkov(String),

    #[error("invalid fiber map: {0}")]
    InvalidMap(String),

    #[error("point {0} outside the unit interval")]
    OutsideUnitInterval(f64),

    #[error("value {y} not in the image [{lo}, {hi}] of the fiber map")]
    OutOfImage { y: f64, lo: f64, hi: f64 },

    #[error("window exhausted: {0}")]
    WindowExhausted(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("enumeration of {count} words exceeds the limit of {limit}")]
    EnumerationTooLarge { count: u128, limit: u128 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
