use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("size error: {0}")]
    Size(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("arity error: {0}")]
    Arity(String),
    #[error("range error: {0}")]
    Range(String),
    #[error("construction error: {0}")]
    Construction(String),
    #[error("schema error in {path}: {msg}")]
    Schema { path: PathBuf, msg: String },
    #[error("join error: {0}")]
    Join(String),
    #[error("singularity error: {0}")]
    Singularity(String),
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("degenerate class: {0}")]
    DegenerateClass(String),
    #[error("alignment error: {0}")]
    Alignment(String),
    #[error("compatibility error: {0}")]
    Compatibility(String),
    #[error("unsupported mode: {0}")]
    UnsupportedMode(String),
    #[error("csv error in {path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by input data (files, schemas, joins) rather
    /// than by numerics or argument shapes.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Schema { .. }
                | Error::Join(_)
                | Error::Parse { .. }
                | Error::Csv { .. }
                | Error::Io { .. }
                | Error::Compatibility(_)
                | Error::Geometry(_)
        )
    }
}
