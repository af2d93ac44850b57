use std::path::PathBuf;

use thiserror::Error;

use crate::dom::NodeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is not valid {encoding}")]
    Decode { encoding: String },

    #[error("unknown encoding label `{0}`")]
    UnknownEncoding(String),

    #[error("document is empty")]
    EmptyDocument,

    #[error("node {0} does not exist in this tree")]
    UnknownNode(NodeId),

    #[error("image at node {0} has no countable text on its ancestor path")]
    NoSegment(NodeId),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("distribution is empty: no relevant items")]
    EmptyDistribution,

    #[error("correlation is undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate image key `{image_key}` on page `{page_id}`")]
    DuplicateKey { page_id: String, image_key: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
