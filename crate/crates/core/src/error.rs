use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ReinaError>;

#[derive(Debug, Error)]
pub enum ReinaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("validation failed: {0}")]
    Validation(String),

    /// A dataset record failed validation; `line` is 1-based.
    #[error("line {line}: {message}")]
    Record { line: usize, message: String },

    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),

    #[error("document `{0}` has an empty key")]
    EmptyKey(String),

    #[error("cannot build an index from zero documents")]
    EmptyCorpus,

    #[error("unknown document id `{0}`")]
    UnknownDoc(String),

    #[error("incompatible indices: {0}")]
    Incompatible(String),

    #[error("line {line}: malformed JSON: {message}")]
    Parse { line: usize, message: String },

    #[error("bad index file: {0}")]
    IndexFormat(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ReinaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ReinaError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures of the filesystem rather than of the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, ReinaError::Io { .. })
    }
}
