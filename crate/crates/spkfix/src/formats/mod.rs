pub mod jsonl;
pub mod rttm;

pub use jsonl::{
    merge_votes, parse_ground_truth, parse_seeds, parse_segments, write_ground_truth, write_seeds, write_segments,
    ParsedSegments, SegmentRecord,
};
pub use rttm::{parse_rttm, write_rttm, write_timeline_rttm};
