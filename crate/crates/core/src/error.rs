use std::path::PathBuf;

use thiserror::Error;

/// Coarse failure class, used by front-ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Validation,
    Adapter,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("ROI has zero area")]
    ZeroRoiArea,

    #[error("invalid ROI: {0}")]
    InvalidRoi(String),

    #[error("{field} = {value} is outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },

    #[error("frame source {0} contains no frames")]
    EmptySource(PathBuf),

    #[error("cannot parse frame timestamp from file name '{0}'")]
    BadFrameName(String),

    #[error("duplicate frame '{0}'")]
    DuplicateFrame(String),

    #[error("flip count {count} exceeds the {train} train entries")]
    CountExceedsTrain { count: usize, train: usize },

    #[error("{}line {line}: {message}", .source_name.as_deref().map(|s| format!("{s}: ")).unwrap_or_default())]
    Parse {
        source_name: Option<String>,
        line: usize,
        message: String,
    },

    #[error("timestamps not strictly increasing at frame '{frame_id}' (ts {ts} after {previous})")]
    NonMonotonicTimestamps {
        frame_id: String,
        ts: i64,
        previous: i64,
    },

    #[error("duplicate frame_id '{0}' in detection stream")]
    DuplicateFrameId(String),

    #[error("adapter exited with {status}: {stderr}")]
    AdapterCrashed { status: String, stderr: String },

    #[error("adapter protocol violation: {0}")]
    ProtocolViolation(String),

    #[error("no annotations for {} frame(s): {}", .0.len(), .0.join(", "))]
    MissingAnnotations(Vec<String>),

    #[error("coverage series is empty")]
    EmptySeries,

    #[error("invalid config field '{field}': {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("jitter sigma {sigma} px exceeds the limit {limit} px (min item side / 10)")]
    SigmaTooLarge { sigma: f64, limit: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        match self {
            Error::AdapterCrashed { .. } | Error::ProtocolViolation(_) => ErrorClass::Adapter,
            Error::Io { .. } => ErrorClass::Io,
            _ => ErrorClass::Validation,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidConfig {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
