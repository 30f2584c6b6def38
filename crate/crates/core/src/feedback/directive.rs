use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::gateway::{GatewayRequest, TextGateway};
use super::prompts::{fill, PromptName};
use crate::error::{Error, Result};
use crate::model::SpeakerId;
use crate::text::normalize_text;

pub const WAKE_WORD: &str = "hey cobi";

/// A user message that passed the wake-word gate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedbackMessage {
    pub raw_text: String,
    pub normalized: String,
}

impl FeedbackMessage {
    pub fn new(raw: impl Into<String>) -> Result<Self> {
        let raw_text = raw.into();
        let trimmed = raw_text.trim_start();
        let head: String = trimmed.chars().take(WAKE_WORD.chars().count()).collect();
        if !head.eq_ignore_ascii_case(WAKE_WORD) {
            return Err(Error::WakeWordMissing);
        }
        let rest = &trimmed[head.len()..];
        // A longer word such as "Hey Cobiz" is not the wake word.
        if rest.chars().next().is_some_and(|c| c.is_alphanumeric()) {
            return Err(Error::WakeWordMissing);
        }
        let normalized = rest
            .trim_start_matches(|c: char| c.is_whitespace() || matches!(c, ':' | ',' | '.' | '!' | '-'))
            .trim_end()
            .to_string();
        Ok(Self {
            raw_text,
            normalized,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionDirective {
    pub original_speaker_id: SpeakerId,
    pub original_sentence: String,
    pub corrected_speaker_id: SpeakerId,
    pub corrected_sentence: String,
}

#[derive(Deserialize)]
struct RawDirective {
    original_speaker_id: String,
    original_sentence: String,
    corrected_speaker_id: String,
    #[serde(default)]
    corrected_sentence: Option<String>,
}

/// The first balanced `{...}` span, skipping braces inside JSON strings.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, ch) in text[start..].char_indices() {
        if in_string {
            match ch {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match ch {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

/// Parses gateway output into a directive and validates it against the
/// session's speakers.
pub fn parse_directive(output: &str, speakers: &[SpeakerId]) -> Result<CorrectionDirective> {
    let obj = extract_json_object(output)
        .ok_or_else(|| Error::ParseFailure("no JSON object in output".to_string()))?;
    let raw: RawDirective =
        serde_json::from_str(obj).map_err(|e| Error::ParseFailure(e.to_string()))?;
    let known = |s: &str| -> Result<SpeakerId> {
        let id = SpeakerId::new(s).map_err(|_| Error::InvalidDirective("empty speaker id".to_string()))?;
        if speakers.contains(&id) {
            Ok(id)
        } else {
            Err(Error::UnknownSpeaker(id.to_string()))
        }
    };
    let original = known(&raw.original_speaker_id)?;
    let corrected = known(&raw.corrected_speaker_id)?;
    if original == corrected {
        return Err(Error::InvalidDirective(
            "original and corrected speaker are the same".to_string(),
        ));
    }
    if normalize_text(&raw.original_sentence).is_empty() {
        return Err(Error::InvalidDirective("empty target sentence".to_string()));
    }
    let corrected_sentence = raw
        .corrected_sentence
        .unwrap_or_else(|| raw.original_sentence.clone());
    if normalize_text(&corrected_sentence) != normalize_text(&raw.original_sentence) {
        return Err(Error::InvalidDirective(
            "corrected sentence differs from the original sentence".to_string(),
        ));
    }
    Ok(CorrectionDirective {
        original_speaker_id: original,
        original_sentence: raw.original_sentence,
        corrected_speaker_id: corrected,
        corrected_sentence,
    })
}

pub fn speaker_list(speakers: &[SpeakerId]) -> String {
    speakers
        .iter()
        .map(SpeakerId::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Runs the correction prompt and parses its output, retrying once when the
/// output is malformed or the gateway call fails.
pub fn parse_feedback(
    msg: &FeedbackMessage,
    context: &[String],
    speakers: &[SpeakerId],
    llm: &mut dyn TextGateway,
) -> Result<CorrectionDirective> {
    if context.is_empty() {
        return Err(Error::InvalidDirective("empty correction context".to_string()));
    }
    let conversation = context.join("\n");
    let request = GatewayRequest {
        prompt_name: PromptName::Correction,
        filled_template: fill(
            PromptName::Correction,
            &[&conversation, &msg.raw_text, &speaker_list(speakers)],
        ),
    };
    let mut last_err = Error::ParseFailure("no attempt made".to_string());
    for _ in 0..2 {
        match llm.complete(&request) {
            Ok(resp) => match parse_directive(&resp.text, speakers) {
                Ok(d) => return Ok(d),
                Err(e @ Error::ParseFailure(_)) => last_err = e,
                Err(e) => return Err(e),
            },
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feedback::gateway::{GatewayResponse, RuleBasedGateway};
    use alloc::vec;

    fn speakers() -> Vec<SpeakerId> {
        ["A", "B", "C", "D"].iter().map(|s| SpeakerId::from(*s)).collect()
    }

    struct Fixed(Vec<&'static str>, usize);
    impl TextGateway for Fixed {
        fn complete(&mut self, _: &GatewayRequest) -> Result<GatewayResponse> {
            let t = self.0[self.1.min(self.0.len() - 1)];
            self.1 += 1;
            Ok(GatewayResponse { text: t.to_string() })
        }
    }

    #[test]
    fn wake_word_gate() {
        let m = FeedbackMessage::new("  hey cobi: Predicted A was B").unwrap();
        assert_eq!(m.normalized, "Predicted A was B");
        assert!(FeedbackMessage::new("Hey COBI, fix it").is_ok());
        assert_eq!(FeedbackMessage::new("Predicted A"), Err(Error::WakeWordMissing));
        assert_eq!(FeedbackMessage::new("Hey Cobiz fix"), Err(Error::WakeWordMissing));
        assert_eq!(FeedbackMessage::new("hey"), Err(Error::WakeWordMissing));
    }

    #[test]
    fn extraction_from_wrapped_output() {
        let body = r#"{"a": "has } brace", "b": {"c": 1}}"#;
        let wrapped = alloc::format!("Sure! Here it is:\n{body}\nHope this helps {{");
        assert_eq!(extract_json_object(&wrapped), Some(body));
        assert_eq!(extract_json_object("no braces"), None);
        assert_eq!(extract_json_object("{ unbalanced"), None);
        let escaped = r#"x {"q": "say \"}\" now"} y"#;
        assert_eq!(extract_json_object(escaped), Some(r#"{"q": "say \"}\" now"}"#));
    }

    #[test]
    fn fixed_mock_directive() {
        let out = r#"{"original_speaker_id":"A","original_sentence":"hello there","corrected_speaker_id":"B","corrected_sentence":"hello there"}"#;
        let msg = FeedbackMessage::new("Hey COBI that was B").unwrap();
        let d = parse_feedback(&msg, &["A: hello there".into()], &speakers(), &mut Fixed(vec![out], 0)).unwrap();
        assert_eq!(d.original_speaker_id, SpeakerId::from("A"));
        assert_eq!(d.corrected_speaker_id, SpeakerId::from("B"));
        assert_eq!(d.original_sentence, "hello there");
    }

    #[test]
    fn retry_once_then_fail() {
        let good = r#"noise {"original_speaker_id":"A","original_sentence":"x","corrected_speaker_id":"B","corrected_sentence":"x"} noise"#;
        let msg = FeedbackMessage::new("Hey COBI x").unwrap();
        let ctx = vec!["A: x".to_string()];
        let mut g = Fixed(vec!["garbage", good], 0);
        assert!(parse_feedback(&msg, &ctx, &speakers(), &mut g).is_ok());
        let mut g = Fixed(vec!["garbage", "still garbage", good], 0);
        assert!(matches!(
            parse_feedback(&msg, &ctx, &speakers(), &mut g),
            Err(Error::ParseFailure(_))
        ));
        assert_eq!(g.1, 2);
    }

    #[test]
    fn validation_errors() {
        let unknown = r#"{"original_speaker_id":"A","original_sentence":"x","corrected_speaker_id":"Z","corrected_sentence":"x"}"#;
        assert!(matches!(parse_directive(unknown, &speakers()), Err(Error::UnknownSpeaker(_))));
        let same = r#"{"original_speaker_id":"A","original_sentence":"x","corrected_speaker_id":"A","corrected_sentence":"x"}"#;
        assert!(matches!(parse_directive(same, &speakers()), Err(Error::InvalidDirective(_))));
        let missing = r#"{"original_speaker_id":"A"}"#;
        assert!(matches!(parse_directive(missing, &speakers()), Err(Error::ParseFailure(_))));
    }

    #[test]
    fn figure_four_message() {
        let ctx = vec![
            "A: you can stay below 1250, so i think it's difficult as well. basically".to_string(),
            "D: become a choice between like".to_string(),
        ];
        let msg = FeedbackMessage::new("Hey COBI: Predicted A, saying to keep the price under 1250, was actually B.").unwrap();
        let d = parse_feedback(&msg, &ctx, &speakers(), &mut RuleBasedGateway::default()).unwrap();
        assert_eq!(d.original_speaker_id, SpeakerId::from("A"));
        assert_eq!(d.corrected_speaker_id, SpeakerId::from("B"));
        assert!(d.original_sentence.starts_with("you can stay below 1250"));
    }
}
