//! Text-generation gateway contract and the offline implementations.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::prompts::{extract_fields, PromptName};
use crate::error::{Error, Result};
use crate::text::{token_f1, tokens};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayRequest {
    pub prompt_name: PromptName,
    pub filled_template: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GatewayResponse {
    pub text: String,
}

pub trait TextGateway {
    fn complete(&mut self, request: &GatewayRequest) -> Result<GatewayResponse>;
}

impl<T: TextGateway + ?Sized> TextGateway for &mut T {
    fn complete(&mut self, request: &GatewayRequest) -> Result<GatewayResponse> {
        (**self).complete(request)
    }
}

/// Hex SHA-256 over `prompt_name \0 filled_template`; keys scripted responses.
pub fn request_key(request: &GatewayRequest) -> String {
    let mut h = Sha256::new();
    h.update(request.prompt_name.as_str().as_bytes());
    h.update([0u8]);
    h.update(request.filled_template.as_bytes());
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Returns the filled prompt unchanged.
#[derive(Debug, Default, Clone, Copy)]
pub struct EchoGateway;

impl TextGateway for EchoGateway {
    fn complete(&mut self, request: &GatewayRequest) -> Result<GatewayResponse> {
        Ok(GatewayResponse {
            text: request.filled_template.clone(),
        })
    }
}

/// Replays canned responses keyed by [`request_key`]; unknown requests fail.
#[derive(Debug, Default, Clone, Serialize, Deserialize)]
pub struct ScriptedGateway {
    responses: BTreeMap<String, String>,
}

impl ScriptedGateway {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_map(responses: BTreeMap<String, String>) -> Self {
        Self { responses }
    }

    pub fn insert(&mut self, request: &GatewayRequest, response: impl Into<String>) {
        self.responses.insert(request_key(request), response.into());
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

impl TextGateway for ScriptedGateway {
    fn complete(&mut self, request: &GatewayRequest) -> Result<GatewayResponse> {
        let key = request_key(request);
        self.responses
            .get(&key)
            .map(|text| GatewayResponse { text: text.clone() })
            .ok_or_else(|| Error::Gateway(format!("no scripted response for request {key}")))
    }
}

/// Deterministic stand-in for the language model. It answers the three
/// prompts with simple heuristics: summaries keep the first few words per
/// speaker, corrections find the quoted line, and feedback simulation
/// aligns predicted lines to ground truth by token overlap.
#[derive(Debug, Clone)]
pub struct RuleBasedGateway {
    /// Words kept per speaker in a summary.
    pub summary_words: usize,
    /// Words quoted in a simulated feedback message.
    pub quote_words: usize,
}

impl Default for RuleBasedGateway {
    fn default() -> Self {
        Self {
            summary_words: 7,
            quote_words: 5,
        }
    }
}

/// `"X: text"` lines whose speaker token is known.
fn speaker_lines<'a>(block: &'a str, speakers: &[String]) -> Vec<(&'a str, &'a str)> {
    block
        .lines()
        .filter_map(|l| {
            let (s, t) = l.split_once(':')?;
            let s = s.trim();
            if speakers.is_empty() || speakers.iter().any(|k| k == s) {
                Some((s, t.trim()))
            } else {
                None
            }
        })
        .collect()
}

pub(crate) fn parse_speaker_list(s: &str) -> Vec<String> {
    s.split([',', ' ', '\n'])
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(String::from)
        .collect()
}

fn next_token_after(haystack: &str, marker: &str) -> Option<String> {
    let lower = haystack.to_lowercase();
    let pos = lower.find(marker)?;
    let rest = &haystack[pos + marker.len()..];
    let tok: String = rest
        .trim_start()
        .chars()
        .take_while(|c| c.is_alphanumeric() || *c == '_' || *c == '-')
        .collect();
    (!tok.is_empty()).then_some(tok)
}

fn last_token_after(haystack: &str, marker: &str) -> Option<String> {
    let lower = haystack.to_lowercase();
    let pos = lower.rfind(marker)?;
    next_token_after(&haystack[pos..], marker)
}

/// Pulls (wrong speaker, quoted words, true speaker) out of a feedback message.
pub(crate) fn parse_feedback_text(text: &str) -> Option<(String, String, String)> {
    let wrong = next_token_after(text, "predicted")?;
    let right = last_token_after(text, "actually")?;
    let quote = match (text.find('"'), text.rfind('"')) {
        (Some(a), Some(b)) if b > a => text[a + 1..b].to_string(),
        _ => {
            let lower = text.to_lowercase();
            match (lower.find("saying"), lower.rfind("was actually")) {
                (Some(a), Some(b)) if b > a + 6 => text[a + 6..b].to_string(),
                _ => text.to_string(),
            }
        }
    };
    Some((wrong, quote, right))
}

#[derive(Serialize)]
struct DirectiveJson<'a> {
    original_speaker_id: &'a str,
    original_sentence: &'a str,
    corrected_speaker_id: &'a str,
    corrected_sentence: &'a str,
}

impl RuleBasedGateway {
    fn summarize(&self, transcript: &str) -> String {
        let mut order: Vec<&str> = Vec::new();
        let mut words: BTreeMap<&str, Vec<String>> = BTreeMap::new();
        for (s, t) in speaker_lines(transcript, &[]) {
            if !words.contains_key(s) {
                order.push(s);
            }
            words.entry(s).or_default().extend(tokens(t));
        }
        let mut out = String::new();
        for s in order {
            let w = &words[s];
            let kept: Vec<&str> = w.iter().take(self.summary_words).map(String::as_str).collect();
            if !out.is_empty() {
                out.push('\n');
            }
            let _ = write!(out, "{s}: mentions {}", kept.join(" "));
            if w.len() > self.summary_words {
                out.push_str(" ...");
            }
        }
        out
    }

    fn correct(&self, conversation: &str, feedback: &str, speakers: &str) -> String {
        let speakers = parse_speaker_list(speakers);
        let Some((wrong, quote, right)) = parse_feedback_text(feedback) else {
            return "Sorry, I could not identify the correction.".to_string();
        };
        let mut best: Option<(&str, f64)> = None;
        for (s, line) in speaker_lines(conversation, &speakers) {
            if s != wrong {
                continue;
            }
            let qt = tokens(&quote);
            let lt = tokens(line);
            let contained = !qt.is_empty() && lt.windows(qt.len()).any(|w| w == qt.as_slice());
            let score = if contained { 2.0 } else { token_f1(&quote, line) };
            // `>=` keeps the most recent line on ties.
            if score > 0.0 && best.map_or(true, |(_, b)| score >= b) {
                best = Some((line, score));
            }
        }
        let Some((line, _)) = best else {
            return "Sorry, I could not find that line.".to_string();
        };
        serde_json::to_string(&DirectiveJson {
            original_speaker_id: &wrong,
            original_sentence: line,
            corrected_speaker_id: &right,
            corrected_sentence: line,
        })
        .unwrap_or_default()
    }

    fn simulate(&self, truth: &str, predicted: &str, speakers: &str) -> String {
        let speakers = parse_speaker_list(speakers);
        let gt = speaker_lines(truth, &speakers);
        // (weight, shown speaker, true speaker, predicted line, ground-truth line)
        let mut best: Option<(f64, &str, &str, &str, &str)> = None;
        for (shown, line) in speaker_lines(predicted, &speakers) {
            let mut m: Option<(&str, &str, f64)> = None;
            for (s, t) in &gt {
                let f = token_f1(line, t);
                if m.map_or(true, |(_, _, b)| f > b) {
                    m = Some((s, t, f));
                }
            }
            if let Some((true_s, gt_line, f)) = m {
                let weight = f * tokens(line).len() as f64;
                if true_s != shown && f > 0.0 && best.map_or(true, |(b, ..)| weight > b) {
                    best = Some((weight, shown, true_s, line, gt_line));
                }
            }
        }
        let Some((_, shown, true_s, line, gt_line)) = best else {
            return String::new();
        };
        let gt_tokens = tokens(gt_line);
        let quote: Vec<String> = tokens(line)
            .into_iter()
            .filter(|t| gt_tokens.contains(t))
            .take(self.quote_words)
            .collect();
        format!(
            "Hey COBI: Predicted {shown}, saying \"{}\", was actually {true_s}.",
            quote.join(" ")
        )
    }
}

impl TextGateway for RuleBasedGateway {
    fn complete(&mut self, request: &GatewayRequest) -> Result<GatewayResponse> {
        let fields = extract_fields(request.prompt_name, &request.filled_template)
            .ok_or_else(|| Error::Gateway("request does not match its template".to_string()))?;
        let text = match request.prompt_name {
            PromptName::Summarization => self.summarize(&fields[0]),
            PromptName::Correction => self.correct(&fields[0], &fields[1], &fields[2]),
            PromptName::FeedbackSimulation => self.simulate(&fields[0], &fields[1], &fields[2]),
        };
        Ok(GatewayResponse { text })
    }
}
