use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("singular value decomposition did not converge")]
    Decomposition,

    #[error("gram matrix for {rows} rows exceeds the configured limit of {limit}")]
    GramTooLarge { rows: usize, limit: usize },

    #[error("invalid gram matrix: {0}")]
    InvalidGram(String),

    #[error("similarity undefined: {0}")]
    UndefinedSimilarity(String),

    #[error("degenerate spectrum: {0}")]
    DegenerateSpectrum(String),

    #[error("invalid beta grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    #[error("not enough evaluable items in task `{task}`: {reason}")]
    NotEnoughData { task: String, reason: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Short stable identifier used in the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidEmbedding(_) => "invalid-embedding",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::Decomposition => "decomposition",
            Error::GramTooLarge { .. } => "gram-too-large",
            Error::InvalidGram(_) => "invalid-gram",
            Error::UndefinedSimilarity(_) => "undefined-similarity",
            Error::DegenerateSpectrum(_) => "degenerate-spectrum",
            Error::InvalidGrid(_) => "invalid-grid",
            Error::InvalidArgument(_) => "invalid-argument",
            Error::UndefinedCorrelation(_) => "undefined-correlation",
            Error::NotEnoughData { .. } => "not-enough-data",
            Error::Parse { .. } => "parse",
            Error::Io { .. } => "io",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }

    pub(crate) fn not_enough(task: &str, reason: impl Into<String>) -> Self {
        Error::NotEnoughData {
            task: task.to_string(),
            reason: reason.into(),
        }
    }
}
