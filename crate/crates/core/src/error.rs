use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("level {level} is too large to materialize (maximum is {max})")]
    LevelTooLarge { level: usize, max: usize },

    #[error("connecting map requires j <= i, got j = {j}, i = {i}")]
    IndexOrder { j: usize, i: usize },

    #[error("depth {depth} is beyond the supported range of {system}")]
    DepthUnsupported { system: String, depth: usize },

    #[error("level 0 has no predecessor level; use the () self-transition instead")]
    NoPredecessorLevel,

    #[error("channel level {level} is empty")]
    EmptyChannel { level: usize },

    #[error("index sequence is not strictly increasing at position {position}")]
    NotIncreasing { position: usize },

    #[error("not a channel: {0}")]
    NotAChannel(String),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
