use std::path::Path;

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::histogram::{frame_histograms, HistogramSummary};
use super::identity::identity_similarity;
use super::sanity::{face_box, landmark_sanity, Violation};
use super::sync::lip_sync_score;
use crate::audio::{read_wav, AudioClip};
use crate::error::{Error, Result};
use crate::landmarks::LandmarkSequence;
use crate::render::{ClipFrames, ClipMeta, FrameFlag, Point2, SeedFace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QualityThresholds {
    pub identity_min: f64,
    pub lip_sync_min: f64,
    /// Share of consecutive-frame transitions whose histograms must differ.
    pub histogram_nonzero_min: f64,
}

impl Default for QualityThresholds {
    fn default() -> Self {
        Self {
            identity_min: 0.80,
            lip_sync_min: 0.8,
            histogram_nonzero_min: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityEntry {
    pub pass: bool,
    pub violations: usize,
    /// The first few violations, for diagnosis.
    pub examples: Vec<Violation>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityEntry {
    pub min: f64,
    pub mean: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipSyncEntry {
    pub r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramEntry {
    #[serde(flatten)]
    pub summary: HistogramSummary,
    pub nonzero_fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub thresholds: QualityThresholds,
    pub n_frames: usize,
    pub landmark_sanity: SanityEntry,
    pub face_box_contains_landmarks: bool,
    pub identity: IdentityEntry,
    pub lip_sync: LipSyncEntry,
    pub histograms: HistogramEntry,
    /// Frames with collapsed mesh triangles; informational.
    pub flagged_frames: Vec<FrameFlag>,
    pub pass: bool,
}

impl QualityReport {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// All checks on one rendered clip. `seq` is the 3D animation the frames
/// were rendered from and `landmarks2d` its pixel projection.
pub fn evaluate(
    seed: &SeedFace,
    frames: &[RgbImage],
    landmarks2d: &[Vec<Point2>],
    seq: &LandmarkSequence,
    audio: &AudioClip,
    flags: Vec<FrameFlag>,
    thresholds: &QualityThresholds,
) -> Result<QualityReport> {
    if frames.len() != landmarks2d.len() || frames.len() != seq.len() {
        return Err(Error::invalid(
            "clip",
            format!(
                "{} frames, {} projected and {} 3D landmark frames",
                frames.len(),
                landmarks2d.len(),
                seq.len()
            ),
        ));
    }
    let sanity = landmark_sanity(landmarks2d, seed.width(), seed.height());
    let boxed = landmarks2d.iter().all(|pts| {
        let b = face_box(pts, 0.1).clipped(seed.width(), seed.height());
        pts.iter().all(|p| b.contains(*p))
    });
    let id = identity_similarity(frames, seed)?;
    let (r, error) = match lip_sync_score(seq, audio) {
        Ok(r) => (Some(r), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let hist = frame_histograms(frames)?.summary();

    let landmark_sanity = SanityEntry {
        pass: sanity.pass(),
        violations: sanity.violations.len(),
        examples: sanity.violations.into_iter().take(10).collect(),
    };
    let identity = IdentityEntry {
        min: id.min,
        mean: id.mean,
        pass: id.min >= thresholds.identity_min,
    };
    let lip_sync = LipSyncEntry {
        r,
        error,
        pass: r.is_some_and(|r| r >= thresholds.lip_sync_min),
    };
    let histograms = HistogramEntry {
        summary: hist,
        nonzero_fraction: hist.nonzero_fraction(),
        pass: hist.nonzero_fraction() > thresholds.histogram_nonzero_min,
    };
    let pass = landmark_sanity.pass && boxed && identity.pass && lip_sync.pass && histograms.pass;
    Ok(QualityReport {
        thresholds: *thresholds,
        n_frames: frames.len(),
        landmark_sanity,
        face_box_contains_landmarks: boxed,
        identity,
        lip_sync,
        histograms,
        flagged_frames: flags,
        pass,
    })
}

pub fn evaluate_clip(
    seed: &SeedFace,
    clip: &ClipFrames,
    seq: &LandmarkSequence,
    thresholds: &QualityThresholds,
) -> Result<QualityReport> {
    evaluate(
        seed,
        &clip.frames,
        &clip.landmarks2d,
        seq,
        &clip.audio,
        clip.flagged_frames(),
        thresholds,
    )
}

/// Re-evaluates a clip directory as written by the pipeline: `seed.png`,
/// `seed_landmarks.csv`, `audio.wav`, `landmarks.csv`, `frames/` and
/// `meta.json`.
pub fn evaluate_dir(dir: impl AsRef<Path>, thresholds: &QualityThresholds) -> Result<QualityReport> {
    let dir = dir.as_ref();
    let meta_path = dir.join("meta.json");
    let meta: ClipMeta = serde_json::from_str(&std::fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
    let seed = SeedFace::load("seed", dir.join("seed.png"), dir.join("seed_landmarks.csv"))?;
    let audio = read_wav(dir.join(&meta.audio))?;
    let seq = LandmarkSequence::read_csv(dir.join("landmarks.csv"), meta.fps)?;

    let frames_dir = dir.join("frames");
    let mut names: Vec<_> = std::fs::read_dir(&frames_dir)
        .map_err(|e| Error::io(&frames_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "png"))
        .collect();
    names.sort();
    let frames: Vec<RgbImage> = names
        .iter()
        .map(|p| Ok(image::open(p)?.to_rgb8()))
        .collect::<Result<_>>()?;
    let landmarks2d = crate::render::target_landmarks(&seed, &seq);
    evaluate(&seed, &frames, &landmarks2d, &seq, &audio, meta.flags, thresholds)
}
