use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::manifest::{AnimatorSpec, FaceSource, GenerationManifest};
use super::plan::{plan, stage_seed, Job};
use crate::audio::{features, write_wav, AudioClip, FeatureConfig};
use crate::error::{Error, Result};
use crate::landmarks::{
    animate, apply_head_pose, articulate_clip, inject_blinks, AnimatorModel, ArticulationConfig, BlinkConfig,
    LandmarkSequence, LandmarkTemplate, PoseTrack, DEFAULT_PIVOT,
};
use crate::quality::{evaluate_clip, QualityReport};
use crate::render::{generate_test_face, render_clip, FaceParams, SeedFace};
use crate::speaker::EncoderModel;
use crate::tts::{FormantSynthesizer, SpeechSynthesizer};
use crate::voice::childify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JobStatus {
    /// Generated and every quality check passed.
    Passed,
    /// Generated but at least one quality check failed.
    QualityFailed,
    /// Generation itself failed.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub job: Job,
    pub status: JobStatus,
    pub clip_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lip_sync: Option<f64>,
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub results: Vec<JobResult>,
}

impl RunSummary {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.status == JobStatus::Passed)
    }

    pub fn count(&self, status: JobStatus) -> usize {
        self.results.iter().filter(|r| r.status == status).count()
    }
}

/// Everything one job produced, before it is written out.
#[derive(Debug, Clone)]
pub struct ClipArtifacts {
    pub seed_face: SeedFace,
    pub audio: AudioClip,
    pub landmarks: LandmarkSequence,
    pub pose: Option<PoseTrack>,
    pub frames: crate::render::ClipFrames,
    pub quality: QualityReport,
}

/// Models shared read-only by all jobs in learned mode.
struct Models {
    animator: AnimatorModel,
    speaker: Vec<f64>,
    encoder: Option<EncoderModel>,
}

fn load_models(m: &GenerationManifest) -> Result<Option<Models>> {
    let AnimatorSpec::Learned { model, speaker_model } = &m.animator else {
        return Ok(None);
    };
    let animator = AnimatorModel::load(m.resolve(model))?;
    if (animator.config.fps - m.fps).abs() > 1e-9 {
        return Err(Error::invalid(
            "animator",
            format!("model runs at {} fps but the manifest asks for {}", animator.config.fps, m.fps),
        ));
    }
    let encoder = speaker_model.as_ref().map(|p| EncoderModel::load(m.resolve(p))).transpose()?;
    if let Some(e) = &encoder {
        if e.config.embedding_dim != animator.embedding_dim {
            return Err(Error::DimensionMismatch {
                expected: animator.embedding_dim,
                got: e.config.embedding_dim,
            });
        }
    }
    Ok(Some(Models {
        speaker: vec![0.0; animator.embedding_dim],
        animator,
        encoder,
    }))
}

pub fn load_seed_face(m: &GenerationManifest, source: &FaceSource, id: &str) -> Result<SeedFace> {
    match source {
        FaceSource::Generated { seed } => {
            let params = FaceParams {
                width: m.frame_size[0],
                height: m.frame_size[1],
            };
            let mut f = generate_test_face(&params, *seed)?;
            f.id = id.to_string();
            Ok(f)
        }
        FaceSource::Files { image, landmarks } => SeedFace::load(id, m.resolve(image), m.resolve(landmarks)),
    }
}

fn generate(m: &GenerationManifest, job: &Job, models: Option<&Models>) -> Result<ClipArtifacts> {
    let subject = &m.subjects[job.subject_index];
    let text = &m.sentences[job.sentence_index];
    let profile = subject.voice.resolve(&m.base_dir)?;
    let mut audio = FormantSynthesizer.synthesize(text, &profile, m.sample_rate, stage_seed(job.seed, "tts"))?;
    if let Some(c) = &subject.childify {
        audio = childify(&audio, c)?;
    }

    let template = LandmarkTemplate::canonical();
    let mut seq = match models {
        None => articulate_clip(&audio, &template, m.fps, &FeatureConfig::default(), &ArticulationConfig::default())?,
        Some(models) => {
            let speaker = match &models.encoder {
                Some(e) => e.embed_clip(&audio)?.as_slice().to_vec(),
                None => models.speaker.clone(),
            };
            let feats = features(&audio, &models.animator.config.features)?;
            animate(&models.animator, &feats, &speaker, &template, m.fps, audio.duration_seconds())?
        }
    };
    if m.blinks {
        seq = inject_blinks(&seq, stage_seed(job.seed, "blink"), &BlinkConfig::default())?;
    }
    let pose = m.head_pose.then(|| PoseTrack::gentle(seq.len(), m.fps, stage_seed(job.seed, "pose")));
    if let Some(p) = &pose {
        seq = apply_head_pose(&seq, p, DEFAULT_PIVOT)?;
    }

    let seed_face = load_seed_face(m, &subject.face, &subject.id)?;
    let frames = render_clip(&seed_face, &seq, &audio)?;
    let quality = evaluate_clip(&seed_face, &frames, &seq, &m.thresholds)?;
    Ok(ClipArtifacts {
        seed_face,
        audio,
        landmarks: seq,
        pose,
        frames,
        quality,
    })
}

pub fn write_artifacts(a: &ClipArtifacts, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_wav(&a.audio, dir.join("audio.wav"))?;
    a.landmarks.write_csv(dir.join("landmarks.csv"))?;
    if let Some(p) = &a.pose {
        p.write_csv(dir.join("pose.csv"))?;
    }
    a.seed_face.save(dir.join("seed.png"), dir.join("seed_landmarks.csv"))?;
    a.frames.write(dir, "audio.wav")?;
    a.quality.write(dir.join("quality.json"))
}

/// Generates and writes one clip under `root/<subject>/<clip>/`.
pub fn run_job(m: &GenerationManifest, job: &Job, root: &Path) -> JobResult {
    run_job_with(m, job, root, None)
}

fn run_job_with(m: &GenerationManifest, job: &Job, root: &Path, models: Option<&Models>) -> JobResult {
    let start = Instant::now();
    let clip_dir = root.join(&job.subject).join(job.clip_name());
    let outcome = generate(m, job, models).and_then(|a| write_artifacts(&a, &clip_dir).map(|()| a.quality));
    let mut result = JobResult {
        job: job.clone(),
        status: JobStatus::Error,
        clip_dir,
        error: None,
        identity_min: None,
        lip_sync: None,
        elapsed_s: 0.0,
    };
    match outcome {
        Ok(q) => {
            result.status = if q.pass { JobStatus::Passed } else { JobStatus::QualityFailed };
            result.identity_min = Some(q.identity.min);
            result.lip_sync = q.lip_sync.r;
        }
        Err(e) => result.error = Some(e.to_string()),
    }
    result.elapsed_s = start.elapsed().as_secs_f64();
    result
}

fn check_writable(root: &Path) -> Result<()> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    let probe = root.join(".forge-write-test");
    std::fs::write(&probe, b"").map_err(|e| Error::io(&probe, e))?;
    std::fs::remove_file(&probe).map_err(|e| Error::io(&probe, e))
}

/// Runs every planned job on up to `workers` threads (all cores when
/// `None`). Job failures are recorded, not propagated; only setup problems
/// such as an unwritable output directory return `Err`.
pub fn run(m: &GenerationManifest, workers: Option<usize>) -> Result<RunSummary> {
    m.validate()?;
    let root = m.output_root();
    check_writable(&root)?;
    let models = load_models(m)?;
    let jobs = plan(m);
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| Error::invalid("workers", e.to_string()))?;
    let results: Vec<JobResult> = pool.install(|| {
        jobs.par_iter()
            .map(|job| run_job_with(m, job, &root, models.as_ref()))
            .collect()
    });
    let summary = RunSummary {
        output_dir: root.clone(),
        results,
    };
    let path = root.join("run_summary.json");
    std::fs::write(&path, serde_json::to_string_pretty(&summary)?).map_err(|e| Error::io(&path, e))?;
    Ok(summary)
}
