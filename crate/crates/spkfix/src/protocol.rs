//! Wire messages of the live session protocol (see PROTOCOL.md).

use serde::{Deserialize, Serialize};
use spkfix_core::engine::{SessionEvent, Snapshot};

use crate::formats::SegmentRecord;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ClientMessage {
    Segment { segment: SegmentRecord },
    Correction { text: String },
    Snapshot,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientFrame {
    pub v: u32,
    #[serde(flatten)]
    pub message: ClientMessage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ServerMessage {
    Snapshot { snapshot: Snapshot },
    Event { event: SessionEvent },
    ProtocolError { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ServerFrame {
    pub v: u32,
    #[serde(flatten)]
    pub message: ServerMessage,
}

impl ServerFrame {
    pub fn new(message: ServerMessage) -> Self {
        Self { v: PROTOCOL_VERSION, message }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("frames serialize")
    }
}

/// Parses a client frame, rejecting other protocol versions.
pub fn parse_client_frame(text: &str) -> Result<ClientMessage, String> {
    let frame: ClientFrame = serde_json::from_str(text).map_err(|e| format!("malformed frame: {e}"))?;
    if frame.v != PROTOCOL_VERSION {
        return Err(format!("unsupported protocol version {}", frame.v));
    }
    Ok(frame.message)
}
