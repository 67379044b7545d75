//! Wire messages, one JSON object per WebSocket text frame, tagged by `kind`.
//! Unknown fields are ignored.

use serde::{Deserialize, Serialize};

use lockctl_core::sim::{FaultProfile, PlantSummary};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClientMessage {
    Hello {
        v: u32,
        id: String,
        #[serde(default)]
        seed: Option<u64>,
        /// Requirement selection such as `all` or `safreq5,all-operator`.
        #[serde(default)]
        requirements: Option<String>,
        #[serde(default)]
        profile: Option<FaultProfile>,
    },
    Command {
        id: String,
        action: String,
    },
    Fault {
        id: String,
        fault: String,
        on: bool,
    },
    TickControl {
        id: String,
        #[serde(flatten)]
        op: TickOp,
    },
    /// A request for the current state.
    StateSnapshot {
        id: String,
    },
}

impl ClientMessage {
    pub fn id(&self) -> &str {
        match self {
            ClientMessage::Hello { id, .. }
            | ClientMessage::Command { id, .. }
            | ClientMessage::Fault { id, .. }
            | ClientMessage::TickControl { id, .. }
            | ClientMessage::StateSnapshot { id } => id,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum TickOp {
    /// Advance this many ticks now.
    Step {
        ticks: u64,
    },
    /// Tick automatically at this rate.
    Run {
        rate_hz: f64,
    },
    Pause,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloInfo {
    pub v: u32,
    pub session: u64,
    pub config: String,
    pub requirements: Vec<String>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recording: Option<Recording>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub trace: String,
    pub scenario: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ServerMessage {
    Ack {
        id: String,
        #[serde(flatten, skip_serializing_if = "Option::is_none")]
        hello: Option<HelloInfo>,
    },
    Error {
        /// Absent when the offending message had no readable id.
        #[serde(skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        message: String,
    },
    TraceEvent {
        seq: u64,
        event: &'static str,
        action: String,
    },
    Violation {
        requirement: &'static str,
        title: &'static str,
        witness: Option<u64>,
        binding: Option<String>,
    },
    StateSnapshot {
        #[serde(skip_serializing_if = "Option::is_none")]
        id: Option<String>,
        tick: u64,
        /// Next trace sequence number.
        seq: u64,
        params: serde_json::Map<String, serde_json::Value>,
        plant: PlantSummary,
    },
}

impl ServerMessage {
    pub fn error(id: Option<&str>, message: impl Into<String>) -> Self {
        ServerMessage::Error {
            id: id.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// Parses a client frame. On failure returns the id if one could be read.
pub fn parse_client(text: &str) -> Result<ClientMessage, (Option<String>, String)> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| (None, format!("malformed JSON: {e}")))?;
    let id = value.get("id").and_then(|v| v.as_str()).map(str::to_string);
    serde_json::from_value(value).map_err(|e| (id, format!("bad message: {e}")))
}
