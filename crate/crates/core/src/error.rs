use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed csv: {0}")]
    Csv(String),

    #[error("row {row}, column {column}: cannot parse {value:?} as a finite number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },

    #[error("row {row}, column {column}: label {value:?} is not 0 or 1")]
    Label {
        row: usize,
        column: String,
        value: String,
    },

    #[error("column {0:?} not found in header")]
    MissingColumn(String),

    #[error("{what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("labels must contain both classes")]
    SingleClass,

    #[error("labels contain no positive class")]
    NoPositives,

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("container version mismatch: expected {expected}, found {found}")]
    VersionMismatch { expected: u8, found: u8 },

    #[error("corrupt container: {0}")]
    Corrupt(String),
}

impl Error {
    pub(crate) fn shape(what: &'static str, expected: usize, found: usize) -> Self {
        Error::Shape {
            what,
            expected,
            found,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for failures caused by numerical divergence rather than bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonFinite(_))
    }
}
