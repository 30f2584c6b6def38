//! Prompt templates with `[]` placeholders, filled positionally.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const SUMMARIZATION: &str = include_str!("../../prompts/summarization.txt");
pub const FEEDBACK_SIMULATION: &str = include_str!("../../prompts/feedback_simulation.txt");
pub const CORRECTION: &str = include_str!("../../prompts/correction.txt");

const PLACEHOLDER: &str = "[]";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptName {
    Summarization,
    FeedbackSimulation,
    Correction,
}

impl PromptName {
    pub fn as_str(&self) -> &'static str {
        match self {
            PromptName::Summarization => "summarization",
            PromptName::FeedbackSimulation => "feedback_simulation",
            PromptName::Correction => "correction",
        }
    }

    pub fn template(&self) -> &'static str {
        match self {
            PromptName::Summarization => SUMMARIZATION,
            PromptName::FeedbackSimulation => FEEDBACK_SIMULATION,
            PromptName::Correction => CORRECTION,
        }
    }

    pub fn arity(&self) -> usize {
        self.template().matches(PLACEHOLDER).count()
    }
}

/// Replaces the template's placeholders in order. Missing arguments fill as
/// empty strings; extra arguments are ignored.
pub fn fill(name: PromptName, args: &[&str]) -> String {
    let template = name.template();
    let mut out = String::with_capacity(template.len() + args.iter().map(|a| a.len()).sum::<usize>());
    for (i, part) in template.split(PLACEHOLDER).enumerate() {
        if i > 0 {
            out.push_str(args.get(i - 1).copied().unwrap_or(""));
        }
        out.push_str(part);
    }
    out
}

/// Inverse of [`fill`]: recovers the placeholder values from a filled prompt.
pub fn extract_fields(name: PromptName, filled: &str) -> Option<Vec<String>> {
    let parts: Vec<&str> = name.template().split(PLACEHOLDER).collect();
    let mut rest = filled.strip_prefix(parts[0])?;
    let mut fields = Vec::with_capacity(parts.len() - 1);
    for (i, part) in parts.iter().enumerate().skip(1) {
        let pos = if i + 1 == parts.len() {
            if !rest.ends_with(part) {
                return None;
            }
            rest.len() - part.len()
        } else {
            rest.find(part)?
        };
        fields.push(String::from(&rest[..pos]));
        rest = &rest[pos + part.len()..];
    }
    Some(fields)
}
