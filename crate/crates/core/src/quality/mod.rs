//! Automated clip checks and opinion-survey bookkeeping.
//!
//! The pipeline knows the landmarks it rendered, so detection-style checks
//! become verification against that ground truth.

mod histogram;
mod identity;
mod mos;
mod report;
mod sanity;
mod sync;

pub use histogram::{frame_histograms, histogram, histogram_distance, ChannelHistograms, FrameHistograms, HistogramSummary};
pub use identity::{identity_descriptor, identity_similarity, IdentityScores, GRID, ORIENTATION_BINS};
pub use mos::{
    aggregate_mos, collect_mos, parse_answer, read_mos, MosResponse, MosSummary, MOS_QUESTIONS, REFERENCE_OVERALL_RATIO,
};
pub use report::{
    evaluate, evaluate_clip, evaluate_dir, HistogramEntry, IdentityEntry, LipSyncEntry, QualityReport, QualityThresholds,
    SanityEntry,
};
pub use sanity::{face_box, landmark_sanity, BoundingBox, SanityReport, Violation, ViolationKind};
pub use sync::{lip_sync_score, pearson};
