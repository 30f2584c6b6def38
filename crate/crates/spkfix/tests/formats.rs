use proptest::prelude::*;
use spkfix::bundle::{load_bundle, write_bundle, MANIFEST};
use spkfix::formats::{
    parse_ground_truth, parse_rttm, parse_seeds, parse_segments, write_ground_truth, write_rttm, write_seeds,
    write_segments,
};
use spkfix_core::model::{Embedding, RefInterval, ReferenceAnnotation, Segment, SpeakerId, Word};
use spkfix_core::simulator::{synth_meeting, SynthParams};

fn small_params(seed: u64) -> SynthParams {
    SynthParams { duration: 60.0, speakers: 3, dim: 4, seed, ..SynthParams::default() }
}

#[test]
fn bundle_round_trip_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = synth_meeting(&small_params(3)).unwrap();
    write_bundle(dir.path(), &bundle).unwrap();
    let loaded = load_bundle(dir.path()).unwrap();
    assert_eq!(loaded.bundle, bundle);
    assert!(loaded.warnings.is_empty());
}

#[test]
fn serialization_is_a_fixed_point() {
    let bundle = synth_meeting(&small_params(4)).unwrap();
    let seg_text = write_segments(&bundle.segments);
    let again = write_segments(&parse_segments(&seg_text, "s", Some(bundle.dim)).unwrap().segments);
    assert_eq!(seg_text, again);
    let rttm = write_rttm("m", &bundle.reference);
    assert_eq!(rttm, write_rttm("m", &parse_rttm(&rttm, "r").unwrap()));
    let seeds = write_seeds(&bundle.seeds);
    assert_eq!(seeds, write_seeds(&parse_seeds(&seeds, "e", Some(bundle.dim)).unwrap()));
    let gt = write_ground_truth(&bundle.ground_truth);
    assert_eq!(gt, write_ground_truth(&parse_ground_truth(&gt, "g").unwrap()));
}

#[test]
fn tampered_member_fails_checksum() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path(), &synth_meeting(&small_params(5)).unwrap()).unwrap();
    let p = dir.path().join("reference.rttm");
    let mut text = std::fs::read_to_string(&p).unwrap();
    text.push_str("SPEAKER x 1 0.0 1.0 <NA> <NA> S0 <NA> <NA>\n");
    std::fs::write(&p, text).unwrap();
    let err = load_bundle(dir.path()).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().contains("checksum"));
}

#[test]
fn missing_manifest_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let err = load_bundle(dir.path()).unwrap_err();
    assert!(err.to_string().contains(MANIFEST));
}

#[test]
fn manifest_dimension_is_enforced() {
    let dir = tempfile::tempdir().unwrap();
    let mut bundle = synth_meeting(&small_params(6)).unwrap();
    bundle.dim = 5;
    // the writer does not validate; the loader must
    write_bundle(dir.path(), &bundle).unwrap();
    assert!(load_bundle(dir.path()).is_err());
}

fn arb_segment(k: usize) -> impl Strategy<Value = Segment> {
    (0.0f64..100.0, prop::collection::vec((0.01f64..2.0, "[a-z]{1,8}"), 1..6), prop::collection::vec(-1.0f64..1.0, 3))
        .prop_map(move |(start, words, e)| {
            let mut t = start;
            let words: Vec<Word> = words
                .into_iter()
                .map(|(d, w)| {
                    let word = Word::new(w, t, t + d);
                    t += d;
                    word
                })
                .collect();
            Segment::new(format!("g{k}"), start, t, words).with_embedding(Embedding::new(e))
        })
}

proptest! {
    #[test]
    fn segments_round_trip(mut segs in prop::collection::vec(arb_segment(0), 1..8)) {
        for (k, s) in segs.iter_mut().enumerate() {
            s.id = spkfix_core::model::SegmentId::new(format!("g{k}"));
        }
        segs.sort_by(|a, b| a.t_start.total_cmp(&b.t_start));
        let parsed = parse_segments(&write_segments(&segs), "p", Some(3)).unwrap();
        prop_assert_eq!(parsed.segments, segs);
    }

    #[test]
    fn rttm_round_trip(spans in prop::collection::vec((0u8..3, 0.0f64..50.0, 0.001f64..5.0), 1..12)) {
        let intervals = spans
            .into_iter()
            .map(|(s, onset, duration)| RefInterval { onset, duration, speaker: SpeakerId::from(format!("S{s}").as_str()) })
            .collect();
        let reference = ReferenceAnnotation::new(intervals).unwrap();
        let parsed = parse_rttm(&write_rttm("m", &reference), "r").unwrap();
        prop_assert_eq!(parsed, reference);
    }
}
