use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("basis is singular or near-singular (|det| = {det:e})")]
    SingularBasis { det: f64 },

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("brute-force search too large: {candidates} candidates")]
    SearchTooLarge { candidates: f64 },

    #[error("symbol {symbol} cannot be coded: {reason}")]
    AlphabetOverflow { symbol: i64, reason: String },

    #[error("corrupt stream: {0}")]
    CorruptStream(String),

    #[error("stream header does not match the model: {0}")]
    HeaderMismatch(String),

    #[error("input is empty")]
    EmptyInput,

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bad specification: {0}")]
    BadSpec(String),

    #[error("curve needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },

    #[error("quality ranges overlap by {overlap:.3} dB, need at least {needed} dB")]
    InsufficientOverlap { overlap: f64, needed: f64 },

    #[error("decoded reconstruction differs from encoder-side reconstruction at value {index}")]
    RoundTripMismatch { index: usize },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
