use std::collections::BTreeMap;

use spkfix_core::engine::{replay, Engine, EngineToggles, EventBody, SessionEvent};
use spkfix_core::feedback::{EchoGateway, GatewayRequest, GatewayResponse, RuleBasedGateway, TextGateway};
use spkfix_core::model::{Embedding, RevisionSource, Segment, SessionConfig, SpeakerId, Word};
use spkfix_core::Error;

fn emb(v: &[f64]) -> Embedding {
    Embedding::new(v.to_vec())
}

fn seeds() -> BTreeMap<SpeakerId, Vec<Embedding>> {
    [("A", [1.0, 0.0, 0.0]), ("B", [0.0, 1.0, 0.0]), ("D", [0.0, 0.0, 1.0])]
        .into_iter()
        .map(|(s, e)| (SpeakerId::from(s), vec![emb(&e)]))
        .collect()
}

fn seg(id: &str, start: f64, text: &str, e: &[f64]) -> Segment {
    let words: Vec<Word> = text
        .split_whitespace()
        .enumerate()
        .map(|(k, w)| Word::new(w, start + 0.4 * k as f64, start + 0.4 * (k + 1) as f64))
        .collect();
    let end = words.last().map_or(start, |w| w.end);
    Segment::new(id, start, end, words).with_embedding(emb(e))
}

fn engine(interval: usize, limit: usize, toggles: EngineToggles) -> Engine {
    let mut cfg = SessionConfig::defaults_for(toggles.swm).with_interval(interval);
    cfg.correction_limit = limit;
    Engine::open(cfg, toggles, seeds()).unwrap()
}

fn kinds(events: &[SessionEvent]) -> Vec<&'static str> {
    events.iter().map(|e| e.kind()).collect()
}

fn error_stage(events: &[SessionEvent]) -> &str {
    match events {
        [SessionEvent { body: EventBody::Error(e), .. }] => &e.stage,
        _ => panic!("expected one error event, got {:?}", kinds(events)),
    }
}

fn fed(limit: usize, toggles: EngineToggles) -> Engine {
    let mut e = engine(100, limit, toggles);
    let llm = &mut RuleBasedGateway::default();
    e.push_segment(seg("s1", 0.0, "we should keep the price under twelve fifty", &[0.9, 0.3, 0.0]), llm);
    e.push_segment(seg("s2", 5.0, "that sounds fine to me honestly", &[0.0, 0.2, 0.9]), llm);
    e.push_segment(seg("s3", 9.0, "then it is settled for now", &[0.1, 0.0, 0.95]), llm);
    e
}

const GOOD: &str = "Hey COBI: Predicted A, saying keep the price under twelve, was actually B.";

#[test]
fn ticks_cover_entries_since_previous_tick() {
    let mut e = engine(2, 30, EngineToggles::default());
    let llm = &mut RuleBasedGateway::default();
    let mut summaries = Vec::new();
    for k in 0..5 {
        let evs = e.push_segment(seg(&format!("s{k}"), 2.0 * k as f64, "a few words here", &[1.0, 0.0, 0.0]), llm);
        for ev in evs {
            if let EventBody::Summary(d) = ev.body {
                summaries.push(d.segment_ids.iter().map(|s| s.as_str().to_string()).collect::<Vec<_>>());
            }
        }
    }
    assert_eq!(summaries, [vec!["s0", "s1"], vec!["s2", "s3"]]);
    assert_eq!(e.last_display().unwrap().segment_ids.len(), 2);
}

#[test]
fn indices_and_stamps_agree() {
    let mut e = fed(30, EngineToggles::default());
    e.push_feedback(GOOD, RevisionSource::User, &mut RuleBasedGateway::default());
    let log = e.events();
    assert!(log.windows(2).all(|w| w[0].logical_index < w[1].logical_index));
    for (entry, ev) in e.transcript().entries().iter().zip(log.iter().filter(|e| e.kind() == "segment")) {
        assert_eq!(entry.assigned_at, ev.logical_index);
    }
    let rev = &e.transcript().revisions()[0];
    let ev = log.iter().find(|e| e.kind() == "revision").unwrap();
    assert_eq!(rev.applied_at, ev.logical_index);
}

#[test]
fn correction_relabels_and_enrolls() {
    let mut e = fed(30, EngineToggles::default());
    let evs = e.push_feedback(GOOD, RevisionSource::User, &mut RuleBasedGateway::default());
    assert_eq!(kinds(&evs), ["revision", "enrollment"]);
    assert_eq!(e.transcript().entries()[0].segment.label, Some(SpeakerId::from("B")));
    assert_eq!(e.snapshot().pool[&SpeakerId::from("B")], (1, 1));
    assert_eq!(e.loop_state().corrections_used, 1);
}

#[test]
fn disabled_enrollment_still_relabels() {
    let mut e = fed(30, EngineToggles { swm: true, online_enrollment: false });
    let evs = e.push_feedback(GOOD, RevisionSource::User, &mut RuleBasedGateway::default());
    assert_eq!(kinds(&evs), ["revision"]);
    assert_eq!(e.snapshot().pool[&SpeakerId::from("B")], (1, 0));
}

/// Always answers with one fixed directive.
struct Fixed(&'static str);

impl TextGateway for Fixed {
    fn complete(&mut self, _: &GatewayRequest) -> spkfix_core::Result<GatewayResponse> {
        Ok(GatewayResponse { text: self.0.to_string() })
    }
}

const ABSENT: &str = r#"{"original_speaker_id": "A", "original_sentence": "purple elephants dance quietly",
    "corrected_speaker_id": "B", "corrected_sentence": "purple elephants dance quietly"}"#;

#[test]
fn each_failing_stage_reports_itself_and_mutates_nothing() {
    let cases: [(&str, Box<dyn Fn() -> Box<dyn TextGateway>>, &str); 3] = [
        ("Predicted A, saying keep the price, was actually B.", Box::new(|| Box::new(RuleBasedGateway::default())), "gate"),
        (GOOD, Box::new(|| Box::new(EchoGateway)), "parse"),
        (
            "Hey COBI: Predicted A, saying purple elephants dance quietly, was actually B.",
            Box::new(|| Box::new(Fixed(ABSENT))),
            "locate",
        ),
    ];
    for (text, llm, stage) in cases {
        let mut e = fed(30, EngineToggles::default());
        let before = e.snapshot();
        let evs = e.push_feedback(text, RevisionSource::User, llm().as_mut());
        assert_eq!(error_stage(&evs), stage, "{text}");
        let after = e.snapshot();
        assert_eq!(before.transcript, after.transcript);
        assert_eq!(before.pool, after.pool);
        assert_eq!(after.corrections_used, 0);
    }
}

#[test]
fn limit_is_announced_once_and_then_enforced() {
    let mut e = fed(1, EngineToggles::default());
    let llm = &mut RuleBasedGateway::default();
    assert_eq!(kinds(&e.push_feedback(GOOD, RevisionSource::User, llm)), ["revision", "enrollment", "limit-reached"]);
    let before = e.snapshot();
    let again = e.push_feedback("Hey COBI: Predicted D, saying that sounds fine, was actually A.", RevisionSource::User, llm);
    assert_eq!(error_stage(&again), "budget");
    assert_eq!(before.transcript, e.snapshot().transcript);
    assert_eq!(e.events().iter().filter(|e| e.kind() == "limit-reached").count(), 1);
}

#[test]
fn stream_contract_violations_are_rejected() {
    let mut e = fed(30, EngineToggles::default());
    let llm = &mut RuleBasedGateway::default();
    let before = e.snapshot();
    assert_eq!(error_stage(&e.push_segment(seg("s0", 1.0, "too early", &[1.0, 0.0, 0.0]), llm)), "segment");
    assert_eq!(error_stage(&e.push_segment(seg("s1", 20.0, "same id again", &[1.0, 0.0, 0.0]), llm)), "segment");
    assert_eq!(error_stage(&e.push_segment(seg("s9", 20.0, "wrong dimension", &[1.0, 0.0]), llm)), "segment");
    let mut no_emb = seg("s8", 20.0, "nothing to embed", &[1.0, 0.0, 0.0]);
    no_emb.embedding = None;
    assert_eq!(error_stage(&e.push_segment(no_emb, llm)), "segment");
    let after = e.snapshot();
    assert_eq!(before.transcript, after.transcript);
    // errors still take a place in the total order
    assert_eq!(after.logical_index, before.logical_index + 4);
}

#[test]
fn open_rejects_missing_seeds() {
    let mut s = seeds();
    s.insert(SpeakerId::from("C"), Vec::new());
    assert!(Engine::open(SessionConfig::defaults_for(true), EngineToggles::default(), s).is_err());
}

#[test]
fn replay_reconstructs_and_detects_tampering() {
    let mut e = fed(30, EngineToggles::default());
    e.push_feedback(GOOD, RevisionSource::User, &mut RuleBasedGateway::default());
    let log = e.audit_log();
    let out = replay(&log).unwrap();
    assert_eq!(&out.transcript, e.transcript());
    assert_eq!(out.traces_checked, 3);

    let mut bad = log.clone();
    for ev in bad.events.iter_mut() {
        if let EventBody::Segment(s) = &mut ev.body {
            if let Some(t) = &mut s.trace {
                *t.scores.get_mut(&SpeakerId::from("A")).unwrap() += 1e-9;
                break;
            }
        }
    }
    assert!(matches!(replay(&bad), Err(Error::AuditMismatch { .. })));

    let mut reordered = log.clone();
    reordered.events.swap(0, 1);
    assert!(matches!(replay(&reordered), Err(Error::AuditMismatch { .. })));

    // an enrollment moved ahead of the segments would change their traces
    let mut early = log.clone();
    let pos = early.events.iter().position(|e| e.kind() == "enrollment").unwrap();
    let mut en = early.events.remove(pos);
    en.logical_index = 0;
    for ev in early.events.iter_mut() {
        ev.logical_index += 1;
    }
    early.events.insert(0, en);
    assert!(replay(&early).is_err());
}

#[test]
fn audit_log_serializes_stably() {
    let mut e = fed(30, EngineToggles::default());
    e.push_feedback(GOOD, RevisionSource::User, &mut RuleBasedGateway::default());
    let a = serde_json::to_string(&e.audit_log()).unwrap();
    let back: spkfix_core::engine::AuditLog = serde_json::from_str(&a).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), a);
    assert_eq!(replay(&back).unwrap().transcript, *e.transcript());
}
