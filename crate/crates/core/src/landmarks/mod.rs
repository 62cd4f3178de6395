//! 68-point facial landmark sequences: the canonical template, procedural
//! and learned audio-driven articulation, blinks and head pose.

mod animator;
mod articulate;
mod motion;
mod sequence;
pub mod template;

/// One frame of 68 `[x, y, z]` points.
pub type LandmarkFrame = Vec<[f64; 3]>;

pub use animator::{
    animate, content_features, toy_animator_corpus, train_animator, AnimatorConfig, AnimatorExample, AnimatorModel,
    AnimatorReport, ToyAnimatorCorpus, OUTPUT_DIM,
};
pub use articulate::{articulate_clip, mouth_drive, procedural_articulate, speech_envelope, ArticulationConfig};
pub use motion::{apply_head_pose, blink_onsets, inject_blinks, rotation_matrix, BlinkConfig, DEFAULT_PIVOT};
pub use sequence::{frame_center, frame_count, LandmarkSequence, PoseTrack};
pub use template::{eyelid_gap, mouth_opening, LandmarkTemplate, N_LANDMARKS};
