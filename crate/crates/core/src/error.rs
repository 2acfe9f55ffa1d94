use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: missing required column `{column}`")]
    MissingColumn { context: String, column: String },

    #[error("{context}: row {row}, column `{column}`: {message}")]
    InvalidField {
        context: String,
        row: usize,
        column: String,
        message: String,
    },

    #[error("duplicate asset_id `{0}`")]
    DuplicateAsset(String),

    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),

    #[error("unknown asset `{0}`")]
    UnknownAsset(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Process exit code for the command line: 2 config, 3 data, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Io { .. } => 2,
            Error::Numeric(_) => 4,
            _ => 3,
        }
    }
}
