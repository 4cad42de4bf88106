use thiserror::Error;

use crate::vocab::TokenId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sentinel token {id} at position {pos} in raw input")]
    SentinelInInput { id: TokenId, pos: usize },

    #[error("token id {0} is not in the vocabulary")]
    InvalidToken(TokenId),

    #[error("duplicate surface form {0:?} in vocabulary")]
    DuplicateSurface(String),

    #[error("invalid decode config: {0}")]
    InvalidDecodeConfig(String),

    #[error("invalid transformer config: {0}")]
    InvalidTransformerConfig(String),

    #[error("duplicate source sequence in scripted pairs (pair {0})")]
    DuplicateSource(usize),

    #[error("n-gram corpus is empty")]
    EmptyCorpus,

    #[error("invalid n-gram parameters: {0}")]
    InvalidNgram(String),

    #[error("every logit is masked")]
    AllMasked,

    #[error("prediction/copy window length mismatch: {predictions} vs {copied}")]
    WindowMismatch { predictions: usize, copied: usize },

    #[error("edit ratio is undefined for an empty input")]
    EmptyInput,

    #[error("input is not a prepared sequence: {0}")]
    Unprepared(&'static str),

    #[error("report serialization failed: {0}")]
    Report(String),
}
