//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spkfix::session::Session;
use spkfix_core::engine::{replay, EngineToggles, EventBody};
use spkfix_core::feedback::{oracle_user, RuleBasedGateway};
use spkfix_core::metrics::{
    compute_der, one_sample_t, oracle_relabel, relative_improvement, Mapping, Timeline,
};
use spkfix_core::model::{RefInterval, ReferenceAnnotation, RevisionSource, Segment, SessionConfig, SpeakerId, Word};
use spkfix_core::simulator::{
    run_meeting, sweep, synthetic_suite, MeetingBundle, RunSpec, RunToggles, SweepGrid, SweepResult,
    ORACLE_QUOTE_WORDS,
};
use spkfix_core::swm::{split_when_merged, SplitResult, UnsplitReason, WordLabeling};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Base seed and size of the synthetic evaluation suite.
const SUITE_SEED: u64 = 1000;
const SUITE_MEETINGS: usize = 20;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn spk(k: u8) -> SpeakerId {
    SpeakerId::from(((b'A' + k) as char).to_string().as_str())
}

// ---------------------------------------------------------------- formulas

fn improvement_formulas() -> Outcome {
    // expected values computed independently as 100·(b − s)/b
    let cases = [
        (68.40, 61.62, 9.91, 0.05),
        (15.34, 8.56, 44.20, 0.10),
        (68.40, 67.45, 1.39, 0.05),
        (68.40, 57.82, 15.47, 0.05),
        (15.34, 4.76, 69.00, 0.10),
    ];
    let mut got = Vec::new();
    for (b, s, want, tol) in cases {
        let v = relative_improvement(b, s).map_err(|e| e.to_string())?;
        ensure((v - want).abs() <= tol, || format!("{b}->{s}: {v:.4}, want {want}±{tol}"))?;
        got.push(format!("{v:.2}"));
    }
    ensure(relative_improvement(0.0, 1.0).is_err(), || "zero baseline accepted".into())?;
    Ok(got.join(", "))
}

// --------------------------------------------------------------------- SWM

#[derive(Debug, PartialEq)]
enum Expect {
    Dominance,
    SameMajority,
    Split { index: usize, left: u8, right: u8 },
}

/// Direct enumeration of every split index with explicit tie rules.
fn brute_force(labels: &[u8], theta_tenths: usize) -> Expect {
    let n = labels.len();
    let count = |xs: &[u8], s: u8| xs.iter().filter(|&&x| x == s).count();
    let top = (0..4).map(|s| count(labels, s)).max().unwrap();
    if top * 10 >= theta_tenths * n {
        return Expect::Dominance;
    }
    let argmax = |xs: &[u8]| {
        let mut best = 0u8;
        for s in 1..4 {
            if count(xs, s) > count(xs, best) {
                best = s;
            }
        }
        best
    };
    let mut best: Option<(usize, usize, u8, u8)> = None;
    for i in 1..n {
        let (l, r) = (&labels[..i], &labels[i..]);
        let (sl, sr) = (argmax(l), argmax(r));
        let score = count(l, sl) + count(r, sr);
        if best.is_none_or(|b| score > b.1) {
            best = Some((i, score, sl, sr));
        }
    }
    let (index, _, left, right) = best.expect("n >= 2 when not dominated");
    if left == right {
        Expect::SameMajority
    } else {
        Expect::Split { index, left, right }
    }
}

fn labeled_segment(labels: &[u8]) -> (Segment, WordLabeling) {
    let words: Vec<Word> =
        (0..labels.len()).map(|k| Word::new(format!("w{k}"), 0.3 * k as f64, 0.3 * k as f64 + 0.25)).collect();
    let end = words.last().unwrap().end;
    let seg = Segment::new("x", 0.0, end, words);
    let ids: Vec<SpeakerId> = labels.iter().map(|&l| spk(l)).collect();
    let labeling = WordLabeling { bins: ids.iter().map(|s| vec![s.clone()]).collect(), labels: ids };
    (seg, labeling)
}

fn observed(seg: &Segment, r: &SplitResult) -> Result<Expect, String> {
    Ok(match r {
        SplitResult::Unsplit { reason: UnsplitReason::Dominance } => Expect::Dominance,
        SplitResult::Unsplit { reason: UnsplitReason::SameMajority } => Expect::SameMajority,
        SplitResult::Unsplit { reason } => return Err(format!("unexpected reason {reason:?}")),
        SplitResult::Split { point, left, right } => {
            let mut words = left.words.clone();
            words.extend(right.words.iter().cloned());
            ensure(words == seg.words, || "split does not conserve words".into())?;
            let i = point.index;
            ensure(left.t_end == seg.words[i - 1].end && right.t_start == seg.words[i].start, || {
                "sub-segment times do not follow word boundaries".into()
            })?;
            let code = |s: &SpeakerId| s.as_str().as_bytes()[0] - b'A';
            Expect::Split { index: i, left: code(&point.left), right: code(&point.right) }
        }
    })
}

fn swm_exhaustive() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (cases, mut splits) = (20_000, 0);
    for c in 0..cases {
        let n = rng.random_range(1..=20usize);
        let k = rng.random_range(1..=4u8);
        let labels: Vec<u8> = if c % 2 == 0 {
            (0..n).map(|_| rng.random_range(0..k)).collect()
        } else {
            // two noisy runs, the shape a merged segment produces
            let cut = rng.random_range(0..=n);
            let (a, b) = (rng.random_range(0..k), rng.random_range(0..k));
            (0..n)
                .map(|j| if rng.random_bool(0.15) { rng.random_range(0..k) } else if j < cut { a } else { b })
                .collect()
        };
        let theta_tenths = rng.random_range(5..=9usize);
        let (seg, lab) = labeled_segment(&labels);
        let got = observed(&seg, &split_when_merged(&seg, &lab, theta_tenths as f64 / 10.0))?;
        let want = brute_force(&labels, theta_tenths);
        ensure(got == want, || format!("labels {labels:?} θ=0.{theta_tenths}: got {got:?}, want {want:?}"))?;
        splits += matches!(want, Expect::Split { .. }) as usize;
    }
    Ok(format!("{cases}/{cases} sequences agree ({splits} splits)"))
}

fn dominance_boundary() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    for _ in 0..400 {
        let theta_tenths = rng.random_range(5..=9usize);
        let n = 10 * rng.random_range(1..=2usize);
        let theta = theta_tenths as f64 / 10.0;
        let at = theta_tenths * n / 10;
        for (a_count, must_dominate) in [(at, true), (at - 1, false)] {
            // the rest spread over B, C, D so no other speaker reaches A's share
            let mut labels: Vec<u8> = (0..n).map(|j| if j < a_count { 0 } else { 1 + (j % 3) as u8 }).collect();
            labels.shuffle(&mut rng);
            let (seg, lab) = labeled_segment(&labels);
            let r = split_when_merged(&seg, &lab, theta);
            let dominated = r.reason() == Some(UnsplitReason::Dominance);
            ensure(dominated == must_dominate, || {
                format!("{a_count}/{n} at θ={theta}: outcome {:?}", r.reason())
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} boundary cases"))
}

// --------------------------------------------------------------------- DER

const FRAME: f64 = 0.01;

/// Per-speaker frame ranges `[a, b)`.
type FrameSpans = BTreeMap<u8, Vec<(u32, u32)>>;

fn random_spans(rng: &mut ChaCha8Rng, speakers: &[u8], horizon: u32) -> FrameSpans {
    let mut out = FrameSpans::new();
    for &s in speakers {
        let spans = (0..rng.random_range(1..=4))
            .map(|_| {
                let a = rng.random_range(0..horizon - 1);
                (a, rng.random_range(a + 1..=horizon.min(a + 200)))
            })
            .collect();
        out.insert(s, spans);
    }
    out
}

fn as_reference(spans: &FrameSpans, scale: impl Fn(u32) -> f64) -> ReferenceAnnotation {
    let intervals = spans
        .iter()
        .flat_map(|(&s, v)| {
            v.iter().map(move |&(a, b)| (s, a, b))
        })
        .map(|(s, a, b)| RefInterval { onset: scale(a), duration: scale(b) - scale(a), speaker: spk(s) })
        .collect();
    ReferenceAnnotation::new(intervals).unwrap()
}

fn active(spans: &FrameSpans, f: u32) -> Vec<u8> {
    spans.iter().filter(|(_, v)| v.iter().any(|&(a, b)| a <= f && f < b)).map(|(&s, _)| s).collect()
}

/// Frame-count oracle: (miss, fa, conf, total) in frames. With `optimal`, the
/// best injective hyp→ref map is found by enumeration; otherwise ids match.
fn frame_oracle(r: &FrameSpans, h: &FrameSpans, horizon: u32, optimal: bool) -> (u64, u64, u64, u64) {
    let frames: Vec<(Vec<u8>, Vec<u8>)> = (0..horizon).map(|f| (active(r, f), active(h, f))).collect();
    let (mut miss, mut fa, mut both, mut total) = (0u64, 0u64, 0u64, 0u64);
    for (rs, hs) in &frames {
        miss += rs.len().saturating_sub(hs.len()) as u64;
        fa += hs.len().saturating_sub(rs.len()) as u64;
        both += rs.len().min(hs.len()) as u64;
        total += rs.len() as u64;
    }
    let matched_under = |map: &dyn Fn(u8) -> Option<u8>| -> u64 {
        frames.iter().map(|(rs, hs)| hs.iter().filter(|&&x| map(x).is_some_and(|m| rs.contains(&m))).count() as u64).sum()
    };
    let matched = if optimal {
        let hyp: Vec<u8> = h.keys().copied().collect();
        let refs: Vec<u8> = r.keys().copied().collect();
        let mut best = 0;
        // every partial injection hyp → ref, by recursion
        fn go(k: usize, hyp: &[u8], refs: &[u8], used: &mut Vec<bool>, map: &mut Vec<Option<u8>>, f: &mut dyn FnMut(&[Option<u8>])) {
            if k == hyp.len() {
                f(map);
                return;
            }
            map.push(None);
            go(k + 1, hyp, refs, used, map, f);
            map.pop();
            for j in 0..refs.len() {
                if !used[j] {
                    used[j] = true;
                    map.push(Some(refs[j]));
                    go(k + 1, hyp, refs, used, map, f);
                    map.pop();
                    used[j] = false;
                }
            }
        }
        go(0, &hyp, &refs, &mut vec![false; refs.len()], &mut Vec::new(), &mut |m| {
            let lookup = |x: u8| hyp.iter().position(|&y| y == x).and_then(|p| m[p]);
            best = best.max(matched_under(&lookup));
        });
        best
    } else {
        matched_under(&|x| Some(x))
    };
    (miss, fa, both - matched, total)
}

fn der_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (mut cases, mut worst) = (0, 0.0f64);
    while cases < 1200 {
        let horizon = rng.random_range(50..=600u32);
        let nr = rng.random_range(1..=3u8);
        let rs: Vec<u8> = (0..nr).collect();
        let hs: Vec<u8> = (0..rng.random_range(1..=4u8)).map(|k| (k + rng.random_range(0..2)) % 5).collect();
        let mut hs = hs;
        hs.sort();
        hs.dedup();
        let r = random_spans(&mut rng, &rs, horizon);
        let h = random_spans(&mut rng, &hs, horizon);
        let optimal = cases % 3 == 2;
        let mapping = if optimal { Mapping::Optimal } else { Mapping::Identity };
        let (m, f, c, t) = frame_oracle(&r, &h, horizon, optimal);

        // on-grid boundaries: frames agree exactly with the sweep
        let grid = |x: u32| x as f64 * FRAME;
        let rep = compute_der(&Timeline::from_reference(&as_reference(&r, grid)), &Timeline::from_reference(&as_reference(&h, grid)), 0.0, mapping)
            .map_err(|e| e.to_string())?;
        let tol = 1e-9;
        let close = |a: f64, frames: u64| (a - frames as f64 * FRAME).abs() <= tol;
        ensure(close(rep.t_miss, m) && close(rep.t_fa, f) && close(rep.t_conf, c) && close(rep.t_total, t), || {
            format!("case {cases}: sweep ({}, {}, {}, {}) vs frames ({m}, {f}, {c}, {t})", rep.t_miss, rep.t_fa, rep.t_conf, rep.t_total)
        })?;
        ensure(rep.miss + rep.fa + rep.conf == rep.der, || format!("case {cases}: decomposition does not sum"))?;
        ensure(((rep.t_miss + rep.t_fa + rep.t_conf) / rep.t_total - rep.der).abs() < 1e-12, || {
            format!("case {cases}: times and rates disagree")
        })?;

        // jittered boundaries: within one frame per boundary
        let jitter: Vec<f64> = (0..=horizon).map(|_| rng.random_range(-0.45..0.45) * FRAME).collect();
        let off = |x: u32| x as f64 * FRAME + jitter[x as usize];
        let rep = compute_der(&Timeline::from_reference(&as_reference(&r, off)), &Timeline::from_reference(&as_reference(&h, off)), 0.0, mapping)
            .map_err(|e| e.to_string())?;
        let edges = r.values().chain(h.values()).map(|v| 2 * v.len()).sum::<usize>() as f64;
        let bound = edges * FRAME;
        let err = (rep.t_miss - m as f64 * FRAME).abs()
            .max((rep.t_fa - f as f64 * FRAME).abs())
            .max((rep.t_conf - c as f64 * FRAME).abs());
        ensure(err <= bound, || format!("case {cases}: jittered error {err} > {bound}"))?;
        worst = worst.max(err / bound);
        cases += 1;
    }
    Ok(format!("{cases} timelines, exact on grid, jittered error ≤ {:.2} of bound", worst))
}

fn relabel_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let instances = 120;
    let mut labelings = 0usize;
    for inst in 0..instances {
        let nr = rng.random_range(1..=4u8);
        let intervals = (0..rng.random_range(1..=8))
            .map(|_| {
                let a = rng.random_range(0.0..20.0);
                RefInterval { onset: a, duration: rng.random_range(0.2..6.0), speaker: spk(rng.random_range(0..nr)) }
            })
            .collect();
        let reference = ReferenceAnnotation::new(intervals).unwrap();
        let m = if inst % 4 == 0 { rng.random_range(1..=5) } else { 6 };
        let mut t = rng.random_range(0.0..2.0);
        let segments: Vec<Segment> = (0..m)
            .map(|k| {
                let a = t;
                t += rng.random_range(0.3..5.0);
                let s = Segment::new(format!("s{k}"), a, t, Vec::new()).with_label(spk(0));
                t += if rng.random_bool(0.3) { 0.0 } else { rng.random_range(0.05..1.5) };
                s
            })
            .collect();
        let ref_tl = Timeline::from_reference(&reference);
        let conf_of = |segs: &[Segment]| {
            compute_der(&ref_tl, &Timeline::from_segments(segs), 0.0, Mapping::Identity).map(|r| r.t_conf)
        };
        let oracle = conf_of(&oracle_relabel(&segments, &reference)).map_err(|e| e.to_string())?;
        let mut alt = segments.clone();
        for code in 0..4usize.pow(m as u32) {
            let mut c = code;
            for s in alt.iter_mut() {
                s.label = Some(spk((c % 4) as u8));
                c /= 4;
            }
            let conf = conf_of(&alt).map_err(|e| e.to_string())?;
            ensure(oracle <= conf + 1e-9, || format!("instance {inst}: labeling {code} has conf {conf} < oracle {oracle}"))?;
            labelings += 1;
        }
    }
    Ok(format!("{instances} instances, {labelings} labelings"))
}

// ------------------------------------------------------------- end to end

fn toggles(swm: bool, oe: bool) -> RunToggles {
    RunToggles { swm, oe, corrections: true, oracle_user: true }
}

fn run_grid(suite: &[MeetingBundle], f: impl FnOnce(&mut SweepGrid)) -> Result<SweepResult, String> {
    let mut grid = SweepGrid::new(SessionConfig::defaults_for(true));
    f(&mut grid);
    sweep(suite, &grid, &mut RuleBasedGateway::default()).map_err(|e| e.to_string())
}

fn end_to_end(suite: &[MeetingBundle]) -> Outcome {
    let r = run_grid(suite, |g| {
        g.toggles = vec![toggles(false, false), toggles(true, false), toggles(false, true), toggles(true, true)];
    })?;
    let im = |k: usize| r.points[k].aggregate.mean_im_der.unwrap_or(f64::NAN);
    let (none, swm, oe, both) = (im(0), im(1), im(2), im(3));
    let full = &r.points[3].aggregate;
    let serr = full.mean_im_serr.unwrap_or(f64::NAN);
    let p = full.significance.as_ref().map_or(1.0, |s| s.p_one_sided);
    let detail = format!(
        "ImSErr {serr:.1}%, ImDER none {none:.1} < single max({swm:.1}, {oe:.1}) < both {both:.1}, p = {p:.2e}"
    );
    ensure(serr >= 30.0, || format!("ImSErr below 30%: {detail}"))?;
    ensure(both > swm.max(oe) && swm.max(oe) > none, || format!("ordering violated: {detail}"))?;
    ensure(p < 0.05, || format!("not significant: {detail}"))?;
    Ok(detail)
}

fn oe_plateau(suite: &[MeetingBundle]) -> Outcome {
    let r = run_grid(suite, |g| {
        g.toggles = vec![RunToggles::FULL];
        g.online_enrollments = vec![0, 1, 2, 3];
    })?;
    let im: Vec<f64> = r.points.iter().map(|p| p.aggregate.mean_im_der.unwrap_or(f64::NAN)).collect();
    let detail = format!("ImDER by cap 0..3: {:.2}, {:.2}, {:.2}, {:.2}", im[0], im[1], im[2], im[3]);
    ensure(im[1] > im[0], || format!("no gain from one enrollment: {detail}"))?;
    ensure((im[3] - im[2]).abs() < (im[1] - im[0]).abs(), || format!("no plateau: {detail}"))?;
    Ok(detail)
}

fn causality_and_determinism(suite: &[MeetingBundle]) -> Outcome {
    let spec = RunSpec::new(SessionConfig::defaults_for(true), RunToggles::FULL, 0);
    let quiet = RunSpec { toggles: RunToggles { corrections: false, ..RunToggles::FULL }, ..spec.clone() };
    let (mut traces, mut revisions) = (0, 0);
    for b in suite {
        let a = run_meeting(b, &spec, &mut RuleBasedGateway::default()).map_err(|e| e.to_string())?;
        let again = run_meeting(b, &spec, &mut RuleBasedGateway::default()).map_err(|e| e.to_string())?;
        let ser = |o: &spkfix_core::simulator::RunOutcome| serde_json::to_string(o).unwrap();
        ensure(ser(&a) == ser(&again), || format!("{}: repeated run differs", b.meeting_id))?;

        let log_text = serde_json::to_string(&a.audit).unwrap();
        let log = serde_json::from_str(&log_text).map_err(|e| e.to_string())?;
        let back = replay(&log).map_err(|e| format!("{}: {e}", b.meeting_id))?;
        ensure(back.transcript == a.transcript, || format!("{}: replay differs", b.meeting_id))?;
        ensure(serde_json::to_string(&back.transcript).unwrap() == serde_json::to_string(&a.transcript).unwrap(), || {
            format!("{}: replayed transcript is not byte-identical", b.meeting_id)
        })?;
        traces += back.traces_checked;

        // everything before the first correction matches a run that never corrects
        let first = a
            .audit
            .events
            .iter()
            .find(|e| matches!(e.body, EventBody::Revision(_) | EventBody::Enrollment(_)))
            .map(|e| e.logical_index);
        let Some(first) = first else { continue };
        let q = run_meeting(b, &quiet, &mut RuleBasedGateway::default()).map_err(|e| e.to_string())?;
        let before = |events: &[spkfix_core::engine::SessionEvent]| {
            events.iter().filter(|e| e.logical_index < first).cloned().collect::<Vec<_>>()
        };
        ensure(before(&a.audit.events) == before(&q.audit.events), || {
            format!("{}: a correction changed an earlier event", b.meeting_id)
        })?;
        for r in a.transcript.revisions() {
            let e = a.transcript.entries().iter().find(|e| e.segment.id == r.segment_id).unwrap();
            ensure(e.assigned_at < r.applied_at, || format!("{}: revision precedes its segment", b.meeting_id))?;
            revisions += 1;
        }
    }
    Ok(format!("{} meetings replayed, {traces} traces verified, {revisions} revisions causal", suite.len()))
}

fn t_statistic() -> Outcome {
    let r = one_sample_t(&[1.0, 2.0, 3.0, 4.0, 5.0]).map_err(|e| e.to_string())?;
    let reference = StudentsT::new(0.0, 1.0, 4.0).unwrap().sf(r.t_stat);
    ensure((r.t_stat - 4.2426).abs() <= 1e-3, || format!("t = {}", r.t_stat))?;
    ensure((r.p_one_sided - 0.0066).abs() <= 5e-4, || format!("p = {}", r.p_one_sided))?;
    ensure((r.p_one_sided - reference).abs() <= 1e-9, || format!("p = {} vs reference {reference}", r.p_one_sided))?;
    Ok(format!("t = {:.4}, p = {:.5} (reference {:.5})", r.t_stat, r.p_one_sided, reference))
}

fn engine_equivalence(suite: &[MeetingBundle]) -> Outcome {
    let cfg = SessionConfig::defaults_for(true);
    let spec = RunSpec::new(cfg.clone(), RunToggles::FULL, 0);
    let mut messages = 0;
    for b in suite {
        let expected = run_meeting(b, &spec, &mut RuleBasedGateway::default()).map_err(|e| e.to_string())?;
        let s = Session::open(cfg.clone(), EngineToggles::default(), b.seeds.clone(), Box::new(RuleBasedGateway::default()))
            .map_err(|e| e.to_string())?;
        for segment in &b.segments {
            let events = s.push_segment(segment.clone());
            let Some(display) = events.iter().find_map(|e| match &e.body {
                EventBody::Summary(d) => Some(d.clone()),
                _ => None,
            }) else {
                continue;
            };
            let snap = s.snapshot();
            if snap.limit_reached {
                continue;
            }
            let window: Vec<&Segment> = display.segment_ids.iter().filter_map(|id| snap.transcript.get(id)).collect();
            if let Some(msg) = oracle_user(&b.reference, window.iter().copied(), ORACLE_QUOTE_WORDS) {
                s.push_feedback_from(&msg.raw_text, RevisionSource::SimulatedUser);
                messages += 1;
            }
        }
        ensure(s.snapshot().transcript == expected.transcript, || format!("{}: transcripts differ", b.meeting_id))?;
        ensure(s.audit_log() == expected.audit, || format!("{}: event logs differ", b.meeting_id))?;
    }
    Ok(format!("{} meetings identical, {messages} feedback messages", suite.len()))
}

fn main() {
    let mut failed = 0;
    let mut check = |name: &str, budget: Option<Duration>, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let mut out = f();
        let dt = t0.elapsed();
        if let (Ok(detail), Some(b)) = (&out, budget) {
            if dt > b {
                out = Err(format!("{detail}; took {dt:.2?}, budget {b:?}"));
            }
        }
        match out {
            Ok(d) => println!("PASS {name}: {d} [{dt:.2?}]"),
            Err(d) => {
                failed += 1;
                println!("FAIL {name}: {d} [{dt:.2?}]");
            }
        }
    };
    let secs = |s| Some(Duration::from_secs(s));
    check("improvement-formulas", secs(1), &mut improvement_formulas);
    check("swm-exhaustive-equivalence", secs(10), &mut swm_exhaustive);
    check("dominance-boundary", None, &mut dominance_boundary);
    check("der-frame-oracle", None, &mut der_oracle);
    check("oracle-relabel-optimality", secs(30), &mut relabel_optimality);

    let t0 = Instant::now();
    let suite = synthetic_suite(SUITE_SEED, SUITE_MEETINGS).expect("suite generates");
    let gen = t0.elapsed();
    check("end-to-end-ordering", Some(Duration::from_secs(120).saturating_sub(gen)), &mut || end_to_end(&suite));
    check("oe-sensitivity-plateau", None, &mut || oe_plateau(&suite));
    check("causality-and-determinism", None, &mut || causality_and_determinism(&suite));
    check("t-statistic", None, &mut t_statistic);
    check("engine-equivalence", None, &mut || engine_equivalence(&suite));

    println!("{} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
