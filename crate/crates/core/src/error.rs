use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("sequence {sequence}: actors do not alternate at index {index} ({previous} then {current})")]
    Alternation {
        sequence: usize,
        index: usize,
        previous: String,
        current: String,
    },

    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("invalid domain: {}", .0.join("; "))]
    Domain(Vec<String>),

    #[error("replay failed at element {index}: action '{action}' is not valid at task-step '{step}'")]
    Replay {
        index: usize,
        action: String,
        step: String,
    },

    #[error("impossible observation: no hidden type can produce observation {observation} at task-step {step}")]
    ImpossibleObservation { step: usize, observation: usize },

    #[error("invalid model: {0}")]
    Model(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("session {0} is complete")]
    SessionComplete(String),

    #[error("'{action}' is not allowed at task-step '{step}'; legal: {}", .legal.join(", "))]
    IllegalAction {
        action: String,
        step: String,
        legal: Vec<String>,
    },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
