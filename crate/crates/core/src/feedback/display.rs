use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::gateway::{GatewayRequest, TextGateway};
use super::prompts::{fill, PromptName};
use crate::model::{render_line, DisplayMode, Segment, SegmentId};
use crate::text::word_count;

/// What the user sees at a summary tick.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplayWindow {
    pub mode: DisplayMode,
    pub segment_ids: Vec<SegmentId>,
    pub text: String,
    pub word_count: usize,
    /// Set when summary mode was requested but the gateway failed.
    #[serde(default)]
    pub degraded: bool,
}

/// Renders the given window of segments in the requested mode. Summary mode
/// asks the gateway; on failure the tick falls back to conversation mode.
pub fn render_display<'a>(
    window: impl IntoIterator<Item = &'a Segment>,
    mode: DisplayMode,
    llm: &mut dyn TextGateway,
) -> DisplayWindow {
    let mut segment_ids = Vec::new();
    let mut lines = Vec::new();
    for seg in window {
        segment_ids.push(seg.id.clone());
        lines.push(render_line(seg));
    }
    let conversation = lines.join("\n");
    let (mode, text, degraded) = match mode {
        DisplayMode::Conversation => (DisplayMode::Conversation, conversation, false),
        DisplayMode::Summary => {
            let request = GatewayRequest {
                prompt_name: PromptName::Summarization,
                filled_template: fill(PromptName::Summarization, &[&conversation]),
            };
            match llm.complete(&request) {
                Ok(resp) => (DisplayMode::Summary, resp.text, false),
                Err(_) => (DisplayMode::Conversation, conversation, true),
            }
        }
    };
    DisplayWindow {
        mode,
        segment_ids,
        word_count: word_count(&text),
        text,
        degraded,
    }
}
