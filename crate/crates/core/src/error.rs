use thiserror::Error;

/// Errors raised while reading or validating input text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: vector has {got} features, expected {want}")]
    InconsistentWidth { line: usize, got: usize, want: usize },
    #[error("database contains no data lines")]
    EmptyDatabase,
    #[error("duplicate feature index {0}")]
    DuplicateIndex(usize),
    #[error("line {0}: bad feature index")]
    BadIndex(usize),
    #[error("line {line}: model parse error: {reason}")]
    Model { line: usize, reason: String },
}

/// Errors raised by the training, query and evaluation operations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("vector has {got} features, model expects {want}")]
    VectorWidthMismatch { got: usize, want: usize },
    #[error("unknown method `{0}`")]
    UnknownMethod(String),
    #[error("training corpus has {train} features but evaluation corpus has {eval}")]
    FeatureWidthMismatch { train: usize, eval: usize },
    #[error("split left no evaluation points")]
    NoEvalPoints,
    #[error("split left no training points")]
    NoTrainPoints,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
