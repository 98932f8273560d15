use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid dimension mismatch: expected {expected_w}x{expected_h}, got {got_w}x{got_h}")]
    DimensionMismatch {
        expected_w: usize,
        expected_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("empty grid stack")]
    EmptyStack,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("trust weight is only defined for n >= 1 exploring neighbours")]
    NoExploringNeighbors,

    #[error("downsample factor {factor} does not divide grid side {side}")]
    NonDividingFactor { factor: usize, side: usize },

    #[error("could not place {placed} of {requested} agents after {attempts} attempts")]
    Spawn {
        requested: usize,
        placed: usize,
        attempts: usize,
    },

    #[error("malformed {format} data: {reason}")]
    Format { format: &'static str, reason: String },

    #[error(transparent)]
    Io(#[from] io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn format(format: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            format,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
