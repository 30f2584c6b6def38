use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{merge_spans, ReferenceAnnotation, Segment, SpeakerId};

/// Same-speaker hypothesis segments separated by less than this are merged.
pub const SEGMENT_MERGE_GAP: f64 = 0.01;

/// Largest speaker count accepted on either side (bitmask width).
const MAX_SPEAKERS: usize = 64;
/// Largest reference speaker count for the exact optimal mapping search.
const MAX_MAPPING_SPEAKERS: usize = 16;

/// Canonical per-speaker speech intervals: sorted and disjoint within a speaker.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timeline {
    speakers: BTreeMap<SpeakerId, Vec<(f64, f64)>>,
}

impl Timeline {
    pub fn new(raw: BTreeMap<SpeakerId, Vec<(f64, f64)>>) -> Self {
        Self::with_gap(raw, 0.0)
    }

    fn with_gap(raw: BTreeMap<SpeakerId, Vec<(f64, f64)>>, gap: f64) -> Self {
        let speakers = raw
            .into_iter()
            .map(|(s, spans)| (s, merge_spans(spans, gap)))
            .filter(|(_, spans)| !spans.is_empty())
            .collect();
        Self { speakers }
    }

    pub fn from_reference(r: &ReferenceAnnotation) -> Self {
        let mut raw: BTreeMap<SpeakerId, Vec<(f64, f64)>> = BTreeMap::new();
        for iv in r.intervals() {
            raw.entry(iv.speaker.clone()).or_default().push((iv.onset, iv.end()));
        }
        Self::new(raw)
    }

    /// Labeled segments as a timeline; unlabeled segments are skipped.
    pub fn from_segments<'a>(segments: impl IntoIterator<Item = &'a Segment>) -> Self {
        let mut raw: BTreeMap<SpeakerId, Vec<(f64, f64)>> = BTreeMap::new();
        for s in segments {
            if let Some(l) = &s.label {
                raw.entry(l.clone()).or_default().push((s.t_start, s.t_end));
            }
        }
        Self::with_gap(raw, SEGMENT_MERGE_GAP)
    }

    pub fn speakers(&self) -> impl Iterator<Item = (&SpeakerId, &[(f64, f64)])> {
        self.speakers.iter().map(|(s, v)| (s, v.as_slice()))
    }

    pub fn get(&self, s: &SpeakerId) -> Option<&[(f64, f64)]> {
        self.speakers.get(s).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.speakers.is_empty()
    }

    /// Total speech time summed over speakers.
    pub fn total(&self) -> f64 {
        self.speakers
            .values()
            .flat_map(|v| v.iter())
            .map(|(a, b)| b - a)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mapping {
    /// Hypothesis speaker ids are compared to reference ids directly.
    Identity,
    /// One-to-one map maximizing matched time (minimizing confusion).
    Optimal,
}

impl Mapping {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mapping::Identity => "identity",
            Mapping::Optimal => "optimal",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "identity" => Some(Mapping::Identity),
            "optimal" => Some(Mapping::Optimal),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub t_total: f64,
    pub t_miss: f64,
    pub t_fa: f64,
    pub t_conf: f64,
    pub der: f64,
    pub miss: f64,
    pub fa: f64,
    pub conf: f64,
    pub collar: f64,
    pub mapping: Mapping,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im_der: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im_serr: Option<f64>,
}

/// Elementary sweep pieces aggregated by (reference set, hypothesis set).
struct Sweep {
    pieces: BTreeMap<(u64, u64), f64>,
}

fn collect_events(tl: &Timeline, side: usize, ids: &[&SpeakerId], events: &mut Vec<(f64, usize, usize, i32)>) {
    for (k, s) in ids.iter().enumerate() {
        for &(a, b) in tl.get(s).unwrap_or(&[]) {
            events.push((a, side, k, 1));
            events.push((b, side, k, -1));
        }
    }
}

fn sweep(reference: &Timeline, hyp: &Timeline, ref_ids: &[&SpeakerId], hyp_ids: &[&SpeakerId], collar: f64) -> Sweep {
    let mut events = Vec::new();
    collect_events(reference, 0, ref_ids, &mut events);
    collect_events(hyp, 1, hyp_ids, &mut events);

    let zones: Vec<(f64, f64)> = if collar > 0.0 {
        let mut z = Vec::new();
        for (_, spans) in reference.speakers() {
            for &(a, b) in spans {
                z.push((a - collar, a + collar));
                z.push((b - collar, b + collar));
            }
        }
        merge_spans(z, 0.0)
    } else {
        Vec::new()
    };
    // Collar edges as zero-delta events so pieces never straddle a zone boundary.
    for &(a, b) in &zones {
        events.push((a, 2, 0, 0));
        events.push((b, 2, 0, 0));
    }
    events.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut counts = [alloc::vec![0i32; ref_ids.len()], alloc::vec![0i32; hyp_ids.len()]];
    let mut masks = [0u64, 0u64];
    let mut pieces = BTreeMap::new();
    let mut zone_i = 0usize;
    let mut prev: Option<f64> = None;
    let mut i = 0;
    while i < events.len() {
        let t = events[i].0;
        if let Some(p) = prev {
            let len = t - p;
            if len > 0.0 && (masks[0] | masks[1]) != 0 {
                let mid = 0.5 * (p + t);
                while zone_i < zones.len() && zones[zone_i].1 <= mid {
                    zone_i += 1;
                }
                let excised = zone_i < zones.len() && zones[zone_i].0 <= mid;
                if !excised {
                    *pieces.entry((masks[0], masks[1])).or_insert(0.0) += len;
                }
            }
        }
        while i < events.len() && events[i].0 == t {
            let (_, side, k, d) = events[i];
            if side < 2 {
                counts[side][k] += d;
                if counts[side][k] > 0 {
                    masks[side] |= 1 << k;
                } else {
                    masks[side] &= !(1 << k);
                }
            }
            i += 1;
        }
        prev = Some(t);
    }
    Sweep { pieces }
}

/// Maximum-weight one-to-one assignment of hypothesis to reference speakers
/// by dynamic programming over subsets of reference speakers.
fn optimal_map(weights: &[Vec<f64>], n_ref: usize) -> Result<Vec<Option<usize>>> {
    if n_ref > MAX_MAPPING_SPEAKERS {
        return Err(Error::TooManySpeakers(n_ref));
    }
    let n_hyp = weights.len();
    let full = 1usize << n_ref;
    let neg = f64::NEG_INFINITY;
    let mut dp = alloc::vec![alloc::vec![neg; full]; n_hyp + 1];
    let mut choice = alloc::vec![alloc::vec![None; full]; n_hyp + 1];
    dp[0][0] = 0.0;
    for h in 0..n_hyp {
        for mask in 0..full {
            let cur = dp[h][mask];
            if cur == neg {
                continue;
            }
            if cur > dp[h + 1][mask] {
                dp[h + 1][mask] = cur;
                choice[h + 1][mask] = Some((mask, None));
            }
            for r in 0..n_ref {
                if mask & (1 << r) != 0 || weights[h][r] <= 0.0 {
                    continue;
                }
                let next = mask | (1 << r);
                let v = cur + weights[h][r];
                if v > dp[h + 1][next] {
                    dp[h + 1][next] = v;
                    choice[h + 1][next] = Some((mask, Some(r)));
                }
            }
        }
    }
    let mut best_mask = 0;
    for mask in 0..full {
        if dp[n_hyp][mask] > dp[n_hyp][best_mask] {
            best_mask = mask;
        }
    }
    let mut map = alloc::vec![None; n_hyp];
    let mut mask = best_mask;
    for h in (0..n_hyp).rev() {
        let (prev, r) = choice[h + 1][mask].expect("reachable state");
        map[h] = r;
        mask = prev;
    }
    Ok(map)
}

/// Diarization error rate by interval sweep. At every instant with `nr`
/// reference and `nh` hypothesis speakers: miss = max(0, nr − nh),
/// false alarm = max(0, nh − nr), confusion = min(nr, nh) − matched.
pub fn compute_der(reference: &Timeline, hyp: &Timeline, collar: f64, mapping: Mapping) -> Result<MetricsReport> {
    let ref_ids: Vec<&SpeakerId> = reference.speakers.keys().collect();
    let hyp_ids: Vec<&SpeakerId> = hyp.speakers.keys().collect();
    if ref_ids.len() > MAX_SPEAKERS || hyp_ids.len() > MAX_SPEAKERS {
        return Err(Error::TooManySpeakers(ref_ids.len().max(hyp_ids.len())));
    }
    let sw = sweep(reference, hyp, &ref_ids, &hyp_ids, collar.max(0.0));

    let map: Vec<Option<usize>> = match mapping {
        Mapping::Identity => hyp_ids
            .iter()
            .map(|h| ref_ids.binary_search(h).ok())
            .collect(),
        Mapping::Optimal => {
            let mut w = alloc::vec![alloc::vec![0.0; ref_ids.len()]; hyp_ids.len()];
            for (&(rm, hm), &len) in &sw.pieces {
                for (h, row) in w.iter_mut().enumerate() {
                    if hm & (1 << h) == 0 {
                        continue;
                    }
                    for (r, cell) in row.iter_mut().enumerate() {
                        if rm & (1 << r) != 0 {
                            *cell += len;
                        }
                    }
                }
            }
            optimal_map(&w, ref_ids.len())?
        }
    };

    let (mut total, mut miss, mut fa, mut conf) = (0.0, 0.0, 0.0, 0.0);
    for (&(rm, hm), &len) in &sw.pieces {
        let nr = rm.count_ones() as usize;
        let nh = hm.count_ones() as usize;
        let matched = (0..hyp_ids.len())
            .filter(|&h| hm & (1 << h) != 0)
            .filter(|&h| map[h].is_some_and(|r| rm & (1 << r) != 0))
            .count();
        total += nr as f64 * len;
        miss += nr.saturating_sub(nh) as f64 * len;
        fa += nh.saturating_sub(nr) as f64 * len;
        conf += (nr.min(nh) - matched) as f64 * len;
    }
    if !(total > 0.0) {
        return Err(Error::UndefinedDer);
    }
    let (m, f, c) = (miss / total, fa / total, conf / total);
    Ok(MetricsReport {
        t_total: total,
        t_miss: miss,
        t_fa: fa,
        t_conf: conf,
        der: m + f + c,
        miss: m,
        fa: f,
        conf: c,
        collar,
        mapping,
        im_der: None,
        im_serr: None,
    })
}
