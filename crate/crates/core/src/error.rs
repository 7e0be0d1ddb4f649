use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("corpus is empty after filtering")]
    EmptyCorpus,
    #[error("unsupported {format} version {found} (expected {expected})")]
    Version {
        format: &'static str,
        found: u32,
        expected: u32,
    },
    #[error("malformed {0}")]
    Format(String),
    #[error("character {0:?} is not on the keyboard")]
    UnknownCharacter(char),
    #[error("{0} is undefined")]
    Undefined(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
