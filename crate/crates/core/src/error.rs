use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed container: {0}")]
    MalformedHeader(String),

    #[error("probability {value} out of [0,1] at branch {branch}, sample {sample}, pixel ({x},{y})")]
    ValueOutOfRange {
        branch: usize,
        sample: usize,
        x: usize,
        y: usize,
        value: f32,
    },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid manifest: {0}")]
    InvalidManifest(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("probability {0} outside [0,1]")]
    InvalidProbability(f64),

    #[error("duplicate temporal index {t} in video {video}")]
    DuplicateTemporalIndex { video: String, t: i64 },

    #[error("temporal indices not increasing in video {video} at t={t}")]
    UnorderedTemporalIndex { video: String, t: i64 },

    #[error("no score available for frame {0}")]
    MissingScore(String),

    #[error("budget exhausted: {completed} of {total} cycles already run")]
    BudgetExhausted { completed: u32, total: u32 },

    #[error("pool state version {found} not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("corrupt pool state: {0}")]
    CorruptState(String),

    #[error("json error in {context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("unknown frame {0}")]
    UnknownFrame(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn json(context: impl Into<String>, source: serde_json::Error) -> Self {
        Error::Json {
            context: context.into(),
            source,
        }
    }
}
