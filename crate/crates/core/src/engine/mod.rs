//! The single-writer correction engine shared by the simulator and live
//! sessions. Every state change is recorded as a [`SessionEvent`] with a
//! strictly increasing logical index.

mod events;
mod replay;

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub use events::{
    EnrollmentEvent, ErrorEvent, EventBody, RevisionEvent, SegmentEvent, SessionEvent, SwmAudit,
    SwmOutcome,
};
pub use replay::{replay, AuditLog, ReplayOutcome, AUDIT_VERSION};

use crate::diarization::{assign_speaker, AssignmentTrace, EnrollmentPool, WindowVotes};
use crate::error::{Error, Result};
use crate::feedback::{
    apply_correction, locate_target, parse_feedback, render_display, DisplayWindow, FeedbackMessage,
    LoopState, TextGateway,
};
use crate::model::{Embedding, RevisionSource, Segment, SessionConfig, SpeakerId, Transcript};
use crate::swm::{process_segment, SplitResult};

/// Window boundary slack when deciding whether a window lies inside a sub-span.
const SPAN_EPS: f64 = 1e-6;

/// Pipeline stages that can be switched off for ablations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EngineToggles {
    pub swm: bool,
    pub online_enrollment: bool,
}

impl Default for EngineToggles {
    fn default() -> Self {
        Self { swm: true, online_enrollment: true }
    }
}

/// Read-only view of a session for clients that join late.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub logical_index: u64,
    pub transcript: Transcript,
    /// Per speaker: (seed count, online count).
    pub pool: BTreeMap<SpeakerId, (usize, usize)>,
    pub corrections_used: usize,
    pub correction_limit: usize,
    pub limit_reached: bool,
}

#[derive(Debug, Clone)]
pub struct Engine {
    cfg: SessionConfig,
    toggles: EngineToggles,
    seeds: BTreeMap<SpeakerId, Vec<Embedding>>,
    speakers: Vec<SpeakerId>,
    pool: EnrollmentPool,
    transcript: Transcript,
    state: LoopState,
    log: Vec<SessionEvent>,
    next_index: u64,
    last_input_start: Option<f64>,
    tick_mark: usize,
    limit_announced: bool,
}

impl Engine {
    /// Opens a session: validates the config and builds the enrollment pool.
    pub fn open(
        cfg: SessionConfig,
        toggles: EngineToggles,
        seeds: BTreeMap<SpeakerId, Vec<Embedding>>,
    ) -> Result<Self> {
        cfg.validate()?;
        let capacity = if toggles.online_enrollment { cfg.max_online_enrollments } else { 0 };
        let pool = EnrollmentPool::new(seeds.clone(), capacity)?;
        let speakers = pool.speakers().cloned().collect();
        Ok(Self {
            state: LoopState::new(cfg.correction_limit),
            cfg,
            toggles,
            seeds,
            speakers,
            pool,
            transcript: Transcript::new(),
            log: Vec::new(),
            next_index: 0,
            last_input_start: None,
            tick_mark: 0,
            limit_announced: false,
        })
    }

    pub fn config(&self) -> &SessionConfig {
        &self.cfg
    }

    pub fn toggles(&self) -> EngineToggles {
        self.toggles
    }

    pub fn speakers(&self) -> &[SpeakerId] {
        &self.speakers
    }

    pub fn pool(&self) -> &EnrollmentPool {
        &self.pool
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }

    pub fn loop_state(&self) -> &LoopState {
        &self.state
    }

    pub fn events(&self) -> &[SessionEvent] {
        &self.log
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            logical_index: self.next_index,
            transcript: self.transcript.clone(),
            pool: self.pool.summary(),
            corrections_used: self.state.corrections_used,
            correction_limit: self.state.correction_limit,
            limit_reached: self.state.limit_reached,
        }
    }

    pub fn audit_log(&self) -> AuditLog {
        AuditLog {
            v: AUDIT_VERSION,
            config: self.cfg.clone(),
            toggles: self.toggles,
            seeds: self.seeds.clone(),
            events: self.log.clone(),
        }
    }

    fn emit(&mut self, out: &mut Vec<SessionEvent>, body: EventBody) -> u64 {
        let ev = SessionEvent { logical_index: self.next_index, body };
        self.next_index += 1;
        self.log.push(ev.clone());
        out.push(ev);
        self.next_index - 1
    }

    fn emit_error(&mut self, out: &mut Vec<SessionEvent>, stage: &str, err: &Error, input: Option<String>) {
        let body = EventBody::Error(ErrorEvent {
            stage: stage.to_string(),
            message: err.to_string(),
            input,
        });
        self.emit(out, body);
    }

    /// Assign → optional split → append → summary tick. Failures produce a
    /// single error event and leave the state untouched.
    pub fn push_segment(&mut self, segment: Segment, llm: &mut dyn TextGateway) -> Vec<SessionEvent> {
        let mut out = Vec::new();
        let id = segment.id.to_string();
        match self.prepare(segment) {
            Ok(prepared) => self.commit(prepared, llm, &mut out),
            Err(e) => self.emit_error(&mut out, "segment", &e, Some(id)),
        }
        out
    }

    fn segment_embedding(&self, seg: &Segment) -> Result<Embedding> {
        let e = match &seg.embedding {
            Some(e) => e.clone(),
            None => {
                let windows: Vec<&Embedding> = seg.windows.iter().filter_map(|w| w.embedding.as_ref()).collect();
                if windows.is_empty() {
                    return Err(Error::InvalidSegment {
                        id: seg.id.to_string(),
                        reason: "no embedding".to_string(),
                    });
                }
                Embedding::mean_of(windows)?
            }
        };
        if e.dim() != self.pool.dim() {
            return Err(Error::DimensionMismatch { expected: self.pool.dim(), found: e.dim() });
        }
        Ok(e)
    }

    /// Computes everything a push would append without mutating state.
    fn prepare(&self, segment: Segment) -> Result<(f64, Vec<SegmentEvent>)> {
        let start = segment.t_start;
        Ok((start, self.prepare_events(segment)?))
    }

    fn prepare_events(&self, mut segment: Segment) -> Result<Vec<SegmentEvent>> {
        if let Some(prev) = self.last_input_start {
            if segment.t_start < prev {
                return Err(Error::OutOfOrder {
                    id: segment.id.to_string(),
                    start: segment.t_start,
                    previous: prev,
                });
            }
        }
        if let Some(last) = self.transcript.entries().last() {
            if segment.t_start < last.segment.t_start {
                return Err(Error::OutOfOrder {
                    id: segment.id.to_string(),
                    start: segment.t_start,
                    previous: last.segment.t_start,
                });
            }
        }
        segment.validate()?;
        if self.transcript.get(&segment.id).is_some() {
            return Err(Error::InvalidSegment {
                id: segment.id.to_string(),
                reason: "duplicate segment id".to_string(),
            });
        }
        let embedding = self.segment_embedding(&segment)?;
        for w in &segment.windows {
            if let Some(e) = &w.embedding {
                if e.dim() != self.pool.dim() {
                    return Err(Error::DimensionMismatch { expected: self.pool.dim(), found: e.dim() });
                }
            }
        }
        let trace = assign_speaker(&segment.id, &embedding, &self.pool)?;
        segment.embedding = Some(embedding);
        segment.label = Some(trace.chosen.clone());

        if !self.toggles.swm {
            return Ok(alloc::vec![SegmentEvent { segment, trace: Some(trace), swm: None }]);
        }
        let mut provider = WindowVotes::new(&self.pool);
        let (votes, result) = process_segment(
            &segment,
            &mut provider,
            self.cfg.swm_window,
            self.cfg.swm_stride,
            self.cfg.dominance,
        );
        match result {
            SplitResult::Unsplit { reason } => {
                let swm = SwmAudit {
                    input: segment.id.clone(),
                    votes,
                    outcome: SwmOutcome::Unsplit { reason },
                };
                Ok(alloc::vec![SegmentEvent { segment, trace: Some(trace), swm: Some(swm) }])
            }
            SplitResult::Split { point, left, right } => {
                let swm = SwmAudit {
                    input: segment.id.clone(),
                    votes,
                    outcome: SwmOutcome::Split { point, input_trace: trace },
                };
                let (left, lt) = self.refine_half(&segment, left)?;
                let (right, rt) = self.refine_half(&segment, right)?;
                Ok(alloc::vec![
                    SegmentEvent { segment: left, trace: lt, swm: Some(swm) },
                    SegmentEvent { segment: right, trace: rt, swm: None },
                ])
            }
        }
    }

    /// Re-embeds a split half from the window embeddings that lie fully
    /// inside it and reassigns it; without such windows the vote label stands.
    fn refine_half(&self, parent: &Segment, mut half: Segment) -> Result<(Segment, Option<AssignmentTrace>)> {
        if self.transcript.get(&half.id).is_some() {
            return Err(Error::InvalidSegment {
                id: half.id.to_string(),
                reason: "split id collides with an existing segment".to_string(),
            });
        }
        let w = self.cfg.swm_window;
        half.windows = parent
            .windows
            .iter()
            .filter(|r| r.t - w >= half.t_start - SPAN_EPS && r.t <= half.t_end + SPAN_EPS)
            .cloned()
            .collect();
        let inside: Vec<&Embedding> = half.windows.iter().filter_map(|r| r.embedding.as_ref()).collect();
        if inside.is_empty() {
            return Ok((half, None));
        }
        let e = Embedding::mean_of(inside)?;
        let trace = assign_speaker(&half.id, &e, &self.pool)?;
        half.label = Some(trace.chosen.clone());
        half.embedding = Some(e);
        Ok((half, Some(trace)))
    }

    fn commit(&mut self, prepared: (f64, Vec<SegmentEvent>), llm: &mut dyn TextGateway, out: &mut Vec<SessionEvent>) {
        let (input_start, prepared) = prepared;
        self.last_input_start = Some(input_start);
        for ev in prepared {
            let idx = self.next_index;
            self.transcript
                .append(ev.segment.clone(), idx)
                .expect("prepare checked ordering and ids");
            self.emit(out, EventBody::Segment(ev));
            self.state.segments_since_summary += 1;
        }
        if self.state.segments_since_summary >= self.cfg.summary_interval {
            let window: Vec<&Segment> = self.transcript.entries()[self.tick_mark..]
                .iter()
                .map(|e| &e.segment)
                .collect();
            let display = render_display(window, self.cfg.display_mode, llm);
            self.tick_mark = self.transcript.len();
            self.state.segments_since_summary = 0;
            self.emit(out, EventBody::Summary(display));
        }
    }

    /// The most recent summary event's display, if any tick happened.
    pub fn last_display(&self) -> Option<&DisplayWindow> {
        self.log.iter().rev().find_map(|e| match &e.body {
            EventBody::Summary(d) => Some(d),
            _ => None,
        })
    }

    /// Gate → budget → parse → locate → apply. Any failure yields one error
    /// event naming the stage and leaves the state untouched.
    pub fn push_feedback(
        &mut self,
        raw_text: &str,
        source: RevisionSource,
        llm: &mut dyn TextGateway,
    ) -> Vec<SessionEvent> {
        let mut out = Vec::new();
        let input = Some(raw_text.to_string());
        let msg = match FeedbackMessage::new(raw_text) {
            Ok(m) => m,
            Err(e) => {
                self.emit_error(&mut out, "gate", &e, input);
                return out;
            }
        };
        if !self.state.budget_left() {
            self.emit_error(&mut out, "budget", &Error::BudgetExhausted, input);
            return out;
        }
        let k = self.cfg.correction_context_turns;
        let context = self.transcript.tail_lines(k);
        let directive = match parse_feedback(&msg, &context, &self.speakers, llm) {
            Ok(d) => d,
            Err(e) => {
                self.emit_error(&mut out, "parse", &e, input);
                return out;
            }
        };
        let target = match locate_target(&directive, &self.transcript, k, self.cfg.match_threshold) {
            Ok(t) => t,
            Err(e) => {
                self.emit_error(&mut out, "locate", &e, input);
                return out;
            }
        };
        let at = self.next_index;
        let applied = match apply_correction(
            &target,
            &directive,
            &mut self.transcript,
            &mut self.pool,
            &mut self.state,
            self.toggles.online_enrollment,
            source,
            at,
        ) {
            Ok(a) => a,
            Err(e) => {
                self.emit_error(&mut out, "apply", &e, input);
                return out;
            }
        };
        self.emit(
            &mut out,
            EventBody::Revision(RevisionEvent {
                revision: applied.revision,
                directive,
                feedback: msg.raw_text,
            }),
        );
        if let Some((speaker, embedding)) = applied.enrolled {
            self.emit(
                &mut out,
                EventBody::Enrollment(EnrollmentEvent { speaker, segment_id: target, embedding }),
            );
        }
        if self.state.limit_reached && !self.limit_announced {
            self.limit_announced = true;
            let body = EventBody::LimitReached {
                corrections_used: self.state.corrections_used,
                limit: self.state.correction_limit,
            };
            self.emit(&mut out, body);
        }
        out
    }
}
