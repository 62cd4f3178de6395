//! Manifest-driven batch generation: plan jobs, render clips, write the
//! dataset tree and summarise it.

mod manifest;
mod plan;
mod run;
mod summary;

pub use manifest::{
    AnimatorSpec, FaceSource, GenerationManifest, SubjectSpec, VoiceSpec, DEFAULT_FPS, DEFAULT_SAMPLE_RATE,
    DEMO_SUBJECTS, OUTPUT_ROOT_ENV,
};
pub use plan::{derive_seed, plan, Job};
pub use run::{load_seed_face, run, run_job, write_artifacts, ClipArtifacts, JobResult, JobStatus, RunSummary};
pub use summary::{summarize, DatasetSummary, Stats, SummaryRow};
