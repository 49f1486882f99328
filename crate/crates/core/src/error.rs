use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed row at line {line}: {message}")]
    MalformedRow { line: u64, message: String },

    #[error("unknown node index {0}")]
    UnknownNode(u32),

    #[error("node {0} is not embedded")]
    NotEmbedded(u32),

    #[error("pair ({0}, {1}) is not adjacent; edge-weight score is only defined for existing edges")]
    NotAdjacent(u32, u32),

    #[error("empty graph")]
    EmptyGraph,

    #[error("no new edges")]
    NoNewEdges,

    #[error("node {0} missing from community assignment")]
    Unassigned(u32),

    #[error("degenerate labels: need at least one positive and one negative")]
    DegenerateLabels,

    #[error("no positive pairs")]
    NoPositives,

    #[error("zero variance in rank correlation input")]
    ZeroVariance,

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("need at least {need} observations, got {got}")]
    TooFewObservations { need: usize, got: usize },

    #[error("invalid era config `{name}`: {message}")]
    InvalidEra { name: String, message: String },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("author unknown: {0}")]
    AuthorUnknown(String),

    #[error("http request failed: {0}")]
    Http(String),

    #[error("response parse error: {0}")]
    ResponseParse(String),

    #[error("prompt variant {variant} requires {what}")]
    MissingExtras { variant: String, what: String },

    #[error("missing profile for node {0}")]
    MissingProfile(u32),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{0}")]
    Other(String),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
