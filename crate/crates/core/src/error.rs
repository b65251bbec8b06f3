use std::path::PathBuf;

use crate::regions::Category;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("format error: {0}")]
    Format(String),

    #[error("category mismatch: expected {expected}, found {found}")]
    CategoryMismatch { expected: Category, found: Category },

    #[error("architecture mismatch: {0}")]
    ArchitectureMismatch(String),

    #[error("singular system: pivot {pivot} at column {column}")]
    Singular { column: usize, pivot: f64 },

    #[error("incomplete coverage: pixel ({x}, {y}) is not covered by any piece")]
    IncompleteCoverage { x: usize, y: usize },

    #[error("missing {what} for category {category}")]
    Missing { what: &'static str, category: Category },

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Image(#[from] ::image::ImageError),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// Attach the file the error came from.
    pub fn at(self, path: impl Into<PathBuf>) -> Self {
        Error::File {
            path: path.into(),
            source: Box::new(self),
        }
    }
}
