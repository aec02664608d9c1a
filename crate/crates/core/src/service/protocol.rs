//! JSON messages exchanged with clients, one object per line.
//!
//! Floats are written with serde_json's shortest round-trip formatting, so every value
//! parses back to the identical `f64`.

use serde::{Deserialize, Serialize};

use super::session::SessionState;
use crate::domain::Actor;
use crate::error::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Request {
    Create {
        /// May be omitted when the service holds a single bundle.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bundle: Option<String>,
        #[serde(default)]
        prior: PriorSource,
    },
    Act {
        session: String,
        /// Label of a human action.
        action: String,
    },
    Transcript {
        session: String,
    },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PriorSource {
    #[default]
    Uniform,
    /// Posterior from the user's demonstrations, each a list of action labels.
    OfflinePosterior { sequences: Vec<Vec<String>> },
    /// A belief supplied as is; it must be a distribution over the bundle's types.
    Explicit { belief: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionInfo {
    pub label: String,
    pub actor: Actor,
}

/// Returned by `create`: everything a client needs to render the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionView {
    pub session: String,
    pub bundle: String,
    pub protocol_version: u32,
    pub types: Vec<String>,
    pub alphabet: Vec<ActionInfo>,
    pub steps: Vec<String>,
    #[serde(flatten)]
    pub status: Status,
}

/// Where a session stands after the robot has moved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Status {
    /// The robot's decision step.
    pub step: String,
    /// Robot action taken at `step`, if the task is not over.
    pub robot_action: Option<String>,
    /// Task-step the human sees, after the robot's action.
    pub board: String,
    pub belief: Vec<f64>,
    pub state: SessionState,
    pub terminal: bool,
    /// Human actions accepted next.
    pub legal: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub index: usize,
    pub step: String,
    /// Belief the robot acted on.
    pub belief: Vec<f64>,
    pub robot_action: String,
    pub human_action: String,
    pub next: String,
    pub belief_after: Vec<f64>,
    #[serde(default)]
    pub belief_reset: bool,
}

/// Returned by `act`: the turns the submission closed, then the new status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnResult {
    pub session: String,
    pub turns: Vec<TurnRecord>,
    #[serde(flatten)]
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptView {
    pub session: String,
    pub prior: Vec<f64>,
    pub turns: Vec<TurnRecord>,
    #[serde(flatten)]
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "kebab-case")]
pub enum Reply {
    Create(SessionView),
    Act(TurnResult),
    Transcript(TranscriptView),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub kind: String,
    pub message: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub legal: Vec<String>,
}

impl From<&Error> for ErrorBody {
    fn from(e: &Error) -> Self {
        let (kind, legal) = match e {
            Error::NotFound(_) => ("not-found", Vec::new()),
            Error::SessionComplete(_) => ("session-complete", Vec::new()),
            Error::IllegalAction { legal, .. } => ("illegal-action", legal.clone()),
            Error::Parse { .. } | Error::Json(_) => ("bad-request", Vec::new()),
            _ => ("invalid", Vec::new()),
        };
        Self {
            kind: kind.to_string(),
            message: e.to_string(),
            legal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Reply>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Response {
    pub fn success(reply: Reply) -> Self {
        Self {
            ok: true,
            result: Some(reply),
            error: None,
        }
    }

    pub fn failure(e: &Error) -> Self {
        Self {
            ok: false,
            result: None,
            error: Some(e.into()),
        }
    }
}
