//! Meeting replay through the full engine, and parameter sweeps.

pub mod synth;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use synth::{synth_meeting, synthetic_suite, SynthParams};

use crate::engine::{AuditLog, Engine, EngineToggles, EventBody};
use crate::error::{Error, Result};
use crate::feedback::{oracle_user, simulate_user, GroundTruthLine, TextGateway};
use crate::metrics::{compute_der, one_sample_t, with_improvements, Mapping, MetricsReport, SignificanceResult, Timeline};
use crate::model::{
    DisplayMode, Embedding, ReferenceAnnotation, RevisionSource, Segment, SessionConfig, SpeakerId, Transcript,
    WindowRecord,
};
use crate::swm::{window_ends, ReferenceVotes, VoteProvider};

/// Words quoted by the oracle user.
pub const ORACLE_QUOTE_WORDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingBundle {
    pub meeting_id: String,
    pub speakers: Vec<SpeakerId>,
    pub dim: usize,
    pub segments: Vec<Segment>,
    pub reference: ReferenceAnnotation,
    pub ground_truth: Vec<GroundTruthLine>,
    pub seeds: BTreeMap<SpeakerId, Vec<Embedding>>,
}

impl MeetingBundle {
    pub fn validate(&self) -> Result<()> {
        let known: BTreeSet<&SpeakerId> = self.speakers.iter().collect();
        if known.len() != self.speakers.len() {
            return Err(Error::InvalidConfig("duplicate speaker ids in bundle".to_string()));
        }
        let check = |s: &SpeakerId, what: &str| -> Result<()> {
            if known.contains(s) {
                Ok(())
            } else {
                Err(Error::UnknownSpeaker(format!("{s} ({what})")))
            }
        };
        for iv in self.reference.intervals() {
            check(&iv.speaker, "reference")?;
        }
        for l in &self.ground_truth {
            check(&l.speaker, "ground truth")?;
        }
        for s in &self.speakers {
            if self.seeds.get(s).is_none_or(|v| v.is_empty()) {
                return Err(Error::NoEnrollments(s.to_string()));
            }
        }
        for s in self.seeds.keys() {
            check(s, "seeds")?;
        }
        let mut prev = f64::NEG_INFINITY;
        for seg in &self.segments {
            seg.validate()?;
            if seg.t_start < prev {
                return Err(Error::OutOfOrder { id: seg.id.to_string(), start: seg.t_start, previous: prev });
            }
            prev = seg.t_start;
            let dims = seg
                .embedding
                .iter()
                .chain(seg.windows.iter().filter_map(|w| w.embedding.as_ref()))
                .map(|e| e.dim());
            for d in dims {
                if d != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, found: d });
                }
            }
            if let Some(l) = &seg.label {
                check(l, "segment label")?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunToggles {
    pub swm: bool,
    pub oe: bool,
    pub corrections: bool,
    /// Deterministic oracle user instead of the gateway-simulated user.
    pub oracle_user: bool,
}

impl RunToggles {
    pub const BASELINE: RunToggles = RunToggles { swm: false, oe: false, corrections: false, oracle_user: true };
    pub const FULL: RunToggles = RunToggles { swm: true, oe: true, corrections: true, oracle_user: true };

    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.swm {
            parts.push("swm");
        }
        if self.oe {
            parts.push("oe");
        }
        if self.corrections {
            parts.push(if self.oracle_user { "oracle" } else { "gateway" });
        }
        if parts.is_empty() {
            "baseline".to_string()
        } else {
            parts.join("+")
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub cfg: SessionConfig,
    pub toggles: RunToggles,
    pub seed: u64,
    #[serde(default = "default_mapping")]
    pub mapping: Mapping,
    /// Label-noise rate for synthetic votes on segments that carry no window
    /// records; `None` leaves such segments without votes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_vote_noise: Option<f64>,
}

fn default_mapping() -> Mapping {
    Mapping::Identity
}

impl RunSpec {
    pub fn new(cfg: SessionConfig, toggles: RunToggles, seed: u64) -> Self {
        Self { cfg, toggles, seed, mapping: Mapping::Identity, synthetic_vote_noise: None }
    }

    pub fn baseline_of(&self) -> Self {
        Self { toggles: RunToggles::BASELINE, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub meeting_id: String,
    pub transcript: Transcript,
    pub report: MetricsReport,
    pub audit: AuditLog,
    pub corrections_applied: usize,
    pub feedback_messages: Vec<String>,
    pub display_word_counts: Vec<usize>,
    pub splits: usize,
    /// Simulated meeting length in minutes (last reference end).
    pub minutes: f64,
}

impl RunOutcome {
    pub fn mean_display_words(&self) -> Option<f64> {
        mean(self.display_word_counts.iter().map(|&w| w as f64))
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (mut s, mut n) = (0.0, 0usize);
    for v in values {
        s += v;
        n += 1;
    }
    (n > 0).then(|| s / n as f64)
}

/// Attaches reference-derived votes to segments lacking window records.
fn with_synthetic_votes(bundle: &MeetingBundle, spec: &RunSpec, noise: f64) -> Vec<Segment> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut provider = ReferenceVotes::new(&bundle.reference, bundle.speakers.clone(), noise, &mut rng);
    let (w, d) = (spec.cfg.swm_window, spec.cfg.swm_stride);
    bundle
        .segments
        .iter()
        .map(|seg| {
            let mut seg = seg.clone();
            if seg.windows.is_empty() {
                seg.windows = window_ends(seg.t_start, seg.t_end, w, d)
                    .into_iter()
                    .map(|t| WindowRecord { t, speaker: provider.vote(&seg, t - w, t), embedding: None })
                    .collect();
            }
            seg
        })
        .collect()
}

/// Runs one meeting through the engine: segments in time order, a simulated
/// user at every summary tick, then scoring against the reference.
pub fn run_meeting(bundle: &MeetingBundle, spec: &RunSpec, llm: &mut dyn TextGateway) -> Result<RunOutcome> {
    bundle.validate()?;
    let toggles = EngineToggles { swm: spec.toggles.swm, online_enrollment: spec.toggles.oe };
    let mut engine = Engine::open(spec.cfg.clone(), toggles, bundle.seeds.clone())?;
    let segments = match spec.synthetic_vote_noise {
        Some(noise) if spec.toggles.swm => with_synthetic_votes(bundle, spec, noise),
        _ => bundle.segments.clone(),
    };
    let mut feedback_messages = Vec::new();
    let mut display_word_counts = Vec::new();
    let mut splits = 0;
    for seg in segments {
        let events = engine.push_segment(seg, llm);
        let mut display = None;
        for ev in &events {
            match &ev.body {
                EventBody::Error(e) => {
                    return Err(Error::InvalidSegment {
                        id: e.input.clone().unwrap_or_default(),
                        reason: e.message.clone(),
                    })
                }
                EventBody::Segment(s) if s.segment.parent.is_some() && s.swm.is_some() => splits += 1,
                EventBody::Summary(d) => display = Some(d.clone()),
                _ => {}
            }
        }
        let Some(display) = display else { continue };
        display_word_counts.push(display.word_count);
        if !spec.toggles.corrections || engine.loop_state().limit_reached {
            continue;
        }
        let window: Vec<&Segment> = display
            .segment_ids
            .iter()
            .filter_map(|id| engine.transcript().get(id))
            .collect();
        let msg = if spec.toggles.oracle_user {
            oracle_user(&bundle.reference, window.iter().copied(), ORACLE_QUOTE_WORDS)
        } else {
            let span = window
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s.t_start), b.max(s.t_end)));
            simulate_user(&bundle.ground_truth, &display, span, engine.speakers(), llm)
        };
        if let Some(msg) = msg {
            engine.push_feedback(&msg.raw_text, RevisionSource::SimulatedUser, llm);
            feedback_messages.push(msg.raw_text);
        }
    }
    let transcript = engine.transcript().clone();
    let report = compute_der(
        &Timeline::from_reference(&bundle.reference),
        &Timeline::from_segments(transcript.segments()),
        spec.cfg.collar,
        spec.mapping,
    )?;
    let minutes = bundle.reference.intervals().iter().map(|iv| iv.end()).fold(0.0, f64::max) / 60.0;
    Ok(RunOutcome {
        meeting_id: bundle.meeting_id.clone(),
        corrections_applied: engine.loop_state().corrections_used,
        transcript,
        report,
        audit: engine.audit_log(),
        feedback_messages,
        display_word_counts,
        splits,
        minutes,
    })
}

/// Axes of a sweep; the grid is their cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub base: SessionConfig,
    #[serde(default)]
    pub display_modes: Vec<DisplayMode>,
    #[serde(default)]
    pub intervals: Vec<usize>,
    #[serde(default)]
    pub correction_limits: Vec<usize>,
    #[serde(default)]
    pub online_enrollments: Vec<usize>,
    #[serde(default)]
    pub toggles: Vec<RunToggles>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_mapping")]
    pub mapping: Mapping,
}

impl SweepGrid {
    pub fn new(base: SessionConfig) -> Self {
        Self {
            base,
            display_modes: Vec::new(),
            intervals: Vec::new(),
            correction_limits: Vec::new(),
            online_enrollments: Vec::new(),
            toggles: Vec::new(),
            seed: 0,
            mapping: Mapping::Identity,
        }
    }

    /// Expands the grid; an empty axis takes the base config's value, except
    /// the online-enrollment cap, which takes the default for each toggle set.
    pub fn points(&self) -> Vec<GridPoint> {
        let b = &self.base;
        let or = |v: &Vec<usize>, d: usize| if v.is_empty() { alloc::vec![d] } else { v.clone() };
        let modes = if self.display_modes.is_empty() { alloc::vec![b.display_mode] } else { self.display_modes.clone() };
        let toggles = if self.toggles.is_empty() { alloc::vec![RunToggles::FULL] } else { self.toggles.clone() };
        let mut out = Vec::new();
        for &display_mode in &modes {
            for interval in or(&self.intervals, b.summary_interval) {
                for correction_limit in or(&self.correction_limits, b.correction_limit) {
                    for &t in &toggles {
                        // Without an explicit axis the cap follows the SWM toggle's default.
                        let caps = or(
                            &self.online_enrollments,
                            SessionConfig::defaults_for(t.swm).max_online_enrollments,
                        );
                        for max_online_enrollments in caps {
                            out.push(GridPoint {
                                display_mode,
                                interval,
                                correction_limit,
                                max_online_enrollments,
                                toggles: t,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPoint {
    pub display_mode: DisplayMode,
    pub interval: usize,
    pub correction_limit: usize,
    pub max_online_enrollments: usize,
    pub toggles: RunToggles,
}

impl GridPoint {
    pub fn config(&self, base: &SessionConfig) -> SessionConfig {
        let mut cfg = base.clone().with_interval(self.interval);
        cfg.display_mode = self.display_mode;
        cfg.correction_limit = self.correction_limit;
        cfg.max_online_enrollments = self.max_online_enrollments;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeetingRow {
    pub meeting_id: String,
    /// System report with improvements over the meeting's baseline run.
    pub report: MetricsReport,
    pub baseline: MetricsReport,
    pub corrections_applied: usize,
    pub splits: usize,
    pub minutes: f64,
    pub mean_display_words: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean_der: f64,
    pub mean_im_der: Option<f64>,
    pub mean_im_serr: Option<f64>,
    pub significance: Option<SignificanceResult>,
    pub mean_corrections: f64,
    /// Applied corrections per simulated minute.
    pub corrections_per_minute: f64,
    pub mean_display_words: Option<f64>,
}

impl Aggregate {
    /// Recomputes the aggregate from per-meeting rows.
    pub fn from_rows(rows: &[MeetingRow]) -> Self {
        let n = rows.len().max(1) as f64;
        let im_der: Vec<f64> = rows.iter().filter_map(|r| r.report.im_der).collect();
        let minutes: f64 = rows.iter().map(|r| r.minutes).sum();
        let corrections: usize = rows.iter().map(|r| r.corrections_applied).sum();
        Self {
            mean_der: rows.iter().map(|r| r.report.der).sum::<f64>() / n,
            mean_im_der: mean(im_der.iter().copied()),
            mean_im_serr: mean(rows.iter().filter_map(|r| r.report.im_serr)),
            significance: one_sample_t(&im_der).ok(),
            mean_corrections: corrections as f64 / n,
            corrections_per_minute: if minutes > 0.0 { corrections as f64 / minutes } else { 0.0 },
            mean_display_words: mean(rows.iter().filter_map(|r| r.mean_display_words)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub point: GridPoint,
    pub meetings: Vec<MeetingRow>,
    pub aggregate: Aggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub points: Vec<PointResult>,
}

/// Improvements of `system` over `baseline`, leaving fields unset when the
/// baseline makes them undefined.
fn improvements(system: &MetricsReport, baseline: &MetricsReport) -> MetricsReport {
    with_improvements(system, baseline).unwrap_or_else(|_| {
        let mut out = system.clone();
        out.im_der = crate::metrics::relative_improvement(baseline.der, system.der).ok();
        out
    })
}

pub fn meeting_row(outcome: &RunOutcome, baseline: &MetricsReport) -> MeetingRow {
    MeetingRow {
        meeting_id: outcome.meeting_id.clone(),
        report: improvements(&outcome.report, baseline),
        baseline: baseline.clone(),
        corrections_applied: outcome.corrections_applied,
        splits: outcome.splits,
        minutes: outcome.minutes,
        mean_display_words: outcome.mean_display_words(),
    }
}

/// Runs every grid point over every bundle with the same seed, scoring each
/// run against that bundle's baseline (no SWM, no OE, no corrections).
pub fn sweep(bundles: &[MeetingBundle], grid: &SweepGrid, llm: &mut dyn TextGateway) -> Result<SweepResult> {
    if bundles.is_empty() {
        return Err(Error::InvalidConfig("sweep needs at least one bundle".to_string()));
    }
    let spec_for = |cfg: SessionConfig, toggles: RunToggles| RunSpec {
        mapping: grid.mapping,
        ..RunSpec::new(cfg, toggles, grid.seed)
    };
    let mut baselines = Vec::with_capacity(bundles.len());
    for b in bundles {
        baselines.push(run_meeting(b, &spec_for(grid.base.clone(), RunToggles::BASELINE), llm)?.report);
    }
    let mut points = Vec::new();
    for point in grid.points() {
        let spec = spec_for(point.config(&grid.base), point.toggles);
        let mut meetings = Vec::with_capacity(bundles.len());
        for (b, base) in bundles.iter().zip(&baselines) {
            meetings.push(meeting_row(&run_meeting(b, &spec, llm)?, base));
        }
        let aggregate = Aggregate::from_rows(&meetings);
        points.push(PointResult { point, meetings, aggregate });
    }
    Ok(SweepResult { points })
}
