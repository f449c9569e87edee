use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid constellation: {0}")]
    InvalidConstellation(String),

    #[error("invalid quantizer: {0}")]
    InvalidQuantizer(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("zero vector has no Householder reflector")]
    ZeroVector,

    #[error("channel is rank deficient (smallest/largest singular value = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("zero Bussgang gain: quantizer output is uncorrelated with its input")]
    ZeroBussgangGain,

    #[error("degenerate quantizer: SQNR objective is not finite anywhere on the search domain")]
    DegenerateQuantizer,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),
}

pub type Result<T> = std::result::Result<T, Error>;
