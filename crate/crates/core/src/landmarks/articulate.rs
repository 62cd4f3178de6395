//! Deterministic audio-to-landmark articulation used as the reference
//! animator and as the training target for the learned one.

use serde::{Deserialize, Serialize};

use super::sequence::{frame_count, LandmarkSequence};
use super::template::{LandmarkTemplate, INNER_LIP_BOTTOM, INNER_LIP_TOP, JAW};
use super::LandmarkFrame;
use crate::audio::{features, rms_envelope, AudioClip, Envelope, FeatureConfig, FeatureSequence};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArticulationConfig {
    /// Extra inner-lip gap at the loudest frame, in head widths.
    pub k_open: f64,
    /// Lip-corner width change per unit of (normalised spectral centroid - 0.5).
    pub k_width: f64,
    /// Time constant of the envelope low-pass.
    pub smoothing_tau_s: f64,
    /// Chin drop as a fraction of the opening.
    pub jaw_ratio: f64,
}

impl Default for ArticulationConfig {
    fn default() -> Self {
        Self {
            k_open: 0.06,
            k_width: 0.02,
            smoothing_tau_s: 0.05,
            jaw_ratio: 0.5,
        }
    }
}

/// RMS envelope of `clip` with 20 ms frames and a 5 ms hop.
pub fn speech_envelope(clip: &AudioClip) -> Result<Envelope> {
    let sr = clip.sample_rate() as usize;
    let frame = (sr / 50).max(1);
    let hop = (sr / 200).max(1);
    if clip.len() < frame {
        return Err(Error::TooShort {
            needed: "20 ms of audio".into(),
            got: format!("{} samples", clip.len()),
        });
    }
    rms_envelope(clip, frame, hop)
}

/// The envelope the mouth follows: low-passed, sampled at frame centres.
/// Lip-sync scoring reads the same series.
pub fn mouth_drive(envelope: &Envelope, fps: f64, n_frames: usize, tau_s: f64) -> Vec<f64> {
    envelope.smoothed(tau_s).at_fps(fps, n_frames)
}

/// Mel-band energy centroid of every row, as a fraction of the band count.
fn normalized_centroids(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter()
        .map(|row| {
            if row.len() < 2 {
                return 0.5;
            }
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let (mut num, mut den) = (0.0, 0.0);
            for (k, v) in row.iter().enumerate() {
                let e = (v - max).exp();
                num += k as f64 * e;
                den += e;
            }
            num / den / (row.len() - 1) as f64
        })
        .collect()
}

/// Per-frame (opening, width) drive pair.
pub(crate) fn articulation_controls(
    features: &FeatureSequence,
    envelope: &Envelope,
    fps: f64,
    n_frames: usize,
    cfg: &ArticulationConfig,
) -> Vec<(f64, f64)> {
    let drive = mouth_drive(envelope, fps, n_frames, cfg.smoothing_tau_s);
    let peak = drive.iter().cloned().fold(0.0, f64::max);
    if peak <= 0.0 {
        return vec![(0.0, 0.0); n_frames];
    }
    let centroids = normalized_centroids(&features.at_fps(fps, n_frames));
    drive
        .iter()
        .zip(centroids)
        .map(|(d, c)| {
            let level = d / peak;
            (cfg.k_open * level, cfg.k_width * (c - 0.5) * level)
        })
        .collect()
}

/// Applies one frame's opening and corner-width change to the template.
pub(crate) fn articulate_frame(template: &LandmarkFrame, opening: f64, width: f64, cfg: &ArticulationConfig) -> LandmarkFrame {
    let mut f = template.clone();
    let mut dy = |i: usize, d: f64| f[i][1] += d;
    // Upper lip rises by a quarter of the opening, lower lip drops by three
    // quarters, so the inner gap grows by exactly `opening`.
    for i in INNER_LIP_TOP.into_iter().chain(49..=53) {
        dy(i, -0.25 * opening);
    }
    for i in INNER_LIP_BOTTOM.into_iter().chain(55..=59) {
        dy(i, 0.75 * opening);
    }
    for i in [48, 54, 60, 64] {
        dy(i, 0.25 * opening);
    }
    for i in JAW {
        let taper = (std::f64::consts::PI * i.min(16 - i) as f64 / 16.0).sin();
        dy(i, cfg.jaw_ratio * opening * taper);
    }
    for (i, sign) in [(48, -1.0), (60, -1.0), (54, 1.0), (64, 1.0)] {
        f[i][0] += sign * width;
    }
    f
}

/// Template animated by the smoothed, peak-normalised envelope: inner-lip gap
/// `rest + k_open * level`, chin drop `jaw_ratio * opening` tapering to zero
/// at the ears, corners pulled by the spectral centroid. Everything else stays
/// at rest. Silence gives the template in every frame.
pub fn procedural_articulate(
    features: &FeatureSequence,
    envelope: &Envelope,
    template: &LandmarkTemplate,
    fps: f64,
    duration_s: f64,
    cfg: &ArticulationConfig,
) -> Result<LandmarkSequence> {
    if envelope.values.is_empty() || features.is_empty() {
        return Err(Error::Empty("audio analysis"));
    }
    if !(fps.is_finite() && fps > 0.0) {
        return Err(Error::invalid("fps", format!("{fps} must be > 0")));
    }
    let n = frame_count(duration_s, fps);
    let frames = articulation_controls(features, envelope, fps, n, cfg)
        .into_iter()
        .map(|(o, w)| articulate_frame(&template.points, o, w, cfg))
        .collect();
    LandmarkSequence::new(frames, fps, duration_s)
}

/// Analyses `clip` with `feature_cfg` and [`speech_envelope`], then runs
/// [`procedural_articulate`] over its full duration.
pub fn articulate_clip(
    clip: &AudioClip,
    template: &LandmarkTemplate,
    fps: f64,
    feature_cfg: &FeatureConfig,
    cfg: &ArticulationConfig,
) -> Result<LandmarkSequence> {
    if clip.is_empty() {
        return Err(Error::Empty("audio"));
    }
    let feats = features(clip, feature_cfg)?;
    let env = speech_envelope(clip)?;
    procedural_articulate(&feats, &env, template, fps, clip.duration_seconds(), cfg)
}
