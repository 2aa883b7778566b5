use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unsupported mesh format: {0}")]
    UnsupportedFormat(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resolution mismatch: expected {expected}, got {actual}")]
    ResolutionMismatch { expected: u8, actual: u8 },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("bad magic: expected {expected:?}, found {found:?}")]
    BadMagic { expected: [u8; 4], found: [u8; 4] },

    #[error("unsupported format version {0}")]
    UnsupportedVersion(u32),

    #[error("corrupt data: {0}")]
    Corrupt(String),

    #[error("query mesh has no usable vertices")]
    NoUsableVertices,

    #[error("viewpoint sees no triangles")]
    EmptyView,

    #[error("missing correspondence: {0}")]
    MissingCorrespondence(String),
}

impl Error {
    pub(crate) fn parse(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            location: location.into(),
            message: message.into(),
        }
    }
}

/// Maps an unexpected EOF to a structured truncation error.
pub(crate) fn truncated(err: io::Error, what: &str) -> Error {
    if err.kind() == io::ErrorKind::UnexpectedEof {
        Error::Corrupt(format!("truncated while reading {what}"))
    } else {
        Error::Io(err)
    }
}
