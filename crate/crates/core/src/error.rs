use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
///
/// Variants are grouped by how a caller is expected to react: configuration
/// and argument problems are user mistakes, data problems come from the input
/// files, and the structural variants indicate a broken invariant between
/// stages.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dataset error: {0}")]
    Dataset(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("malformed structure: {0}")]
    Structural(String),

    #[error("no variance: input data is constant")]
    NoVariance,

    #[error("over-compressed: {0}")]
    OverCompressed(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("stage `{stage}` failed ({config}): {source}")]
    Stage {
        stage: &'static str,
        config: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// The innermost error, looking through any stage wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for errors caused by the user's configuration or arguments
    /// rather than by the data.
    pub fn is_usage(&self) -> bool {
        matches!(self.root(), Error::Config(_) | Error::Argument(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
