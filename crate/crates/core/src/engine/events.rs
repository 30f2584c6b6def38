use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::diarization::AssignmentTrace;
use crate::feedback::{CorrectionDirective, DisplayWindow};
use crate::model::{Embedding, Revision, Segment, SegmentId, SpeakerId};
use crate::swm::{SplitPoint, UnsplitReason, WindowVote};

/// One entry of the totally ordered session log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvent {
    pub logical_index: u64,
    #[serde(flatten)]
    pub body: EventBody,
}

impl SessionEvent {
    pub fn kind(&self) -> &'static str {
        self.body.kind()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum EventBody {
    Segment(SegmentEvent),
    Summary(DisplayWindow),
    Revision(RevisionEvent),
    Enrollment(EnrollmentEvent),
    LimitReached { corrections_used: usize, limit: usize },
    Error(ErrorEvent),
}

impl EventBody {
    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::Segment(_) => "segment",
            EventBody::Summary(_) => "summary",
            EventBody::Revision(_) => "revision",
            EventBody::Enrollment(_) => "enrollment",
            EventBody::LimitReached { .. } => "limit-reached",
            EventBody::Error(_) => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentEvent {
    /// The segment as appended to the transcript, label included.
    pub segment: Segment,
    /// Pool decision behind the label; `None` when the label came from the
    /// split votes because no embedding covered the sub-span.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<AssignmentTrace>,
    /// Split attempt details, on the first event of each incoming segment.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swm: Option<SwmAudit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwmAudit {
    pub input: SegmentId,
    pub votes: Vec<WindowVote>,
    pub outcome: SwmOutcome,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "result")]
pub enum SwmOutcome {
    Unsplit { reason: UnsplitReason },
    /// `input_trace` is the assignment of the whole segment before the split.
    Split { point: SplitPoint, input_trace: AssignmentTrace },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisionEvent {
    pub revision: Revision,
    pub directive: CorrectionDirective,
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnrollmentEvent {
    pub speaker: SpeakerId,
    pub segment_id: SegmentId,
    pub embedding: Embedding,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEvent {
    /// gate, budget, parse, locate, apply, segment or engine.
    pub stage: String,
    pub message: String,
    /// Segment id or raw feedback text that caused the error.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}
