//! Eye blinks and rigid head motion.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sequence::{frame_center, LandmarkSequence, PoseTrack};
use super::template::EYELIDS;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlinkConfig {
    pub min_gap_s: f64,
    pub max_gap_s: f64,
    pub blink_dur_s: f64,
    /// Fraction of the lid gap removed at the deepest point of a blink.
    pub closure: f64,
}

impl Default for BlinkConfig {
    fn default() -> Self {
        Self {
            min_gap_s: 2.0,
            max_gap_s: 6.0,
            blink_dur_s: 0.3,
            closure: 0.97,
        }
    }
}

impl BlinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.blink_dur_s > 0.0 && self.blink_dur_s < self.min_gap_s && self.min_gap_s <= self.max_gap_s) {
            return Err(Error::invalid(
                "blinks",
                "need 0 < blink_dur_s < min_gap_s <= max_gap_s",
            ));
        }
        if !(0.9..=1.0).contains(&self.closure) {
            return Err(Error::invalid("blinks", "closure must be in [0.9, 1]"));
        }
        Ok(())
    }
}

/// Seeded blink start times. The first onset is uniform in
/// `[0, max_gap_s)`, later ones follow at gaps uniform in
/// `[min_gap_s, max_gap_s)`. Only blinks that finish before `duration_s`
/// are kept.
pub fn blink_onsets(duration_s: f64, seed: u64, cfg: &BlinkConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut onsets = Vec::new();
    let mut t = rng.random_range(0.0..cfg.max_gap_s);
    while t + cfg.blink_dur_s <= duration_s {
        onsets.push(t);
        t += rng.random_range(cfg.min_gap_s..cfg.max_gap_s);
    }
    Ok(onsets)
}

fn raised_cosine(u: f64) -> f64 {
    if (0.0..=1.0).contains(&u) {
        0.5 * (1.0 - (std::f64::consts::TAU * u).cos())
    } else {
        0.0
    }
}

/// Closes the eyelids along a raised-cosine profile at each onset from
/// [`blink_onsets`]. The profile is rescaled so the frame nearest mid-blink
/// reaches full `closure`; lids move towards the line through the eye
/// corners. Non-eyelid landmarks are not touched.
pub fn inject_blinks(seq: &LandmarkSequence, seed: u64, cfg: &BlinkConfig) -> Result<LandmarkSequence> {
    let onsets = blink_onsets(seq.duration_s(), seed, cfg)?;
    let fps = seq.fps();
    let mut frames = seq.frames().to_vec();
    for onset in onsets {
        let in_blink: Vec<(usize, f64)> = (0..frames.len())
            .filter_map(|f| {
                let u = (frame_center(f, fps) - onset) / cfg.blink_dur_s;
                let c = raised_cosine(u);
                (c > 0.0).then_some((f, c))
            })
            .collect();
        let peak = in_blink.iter().map(|p| p.1).fold(0.0, f64::max);
        if peak <= 0.0 {
            continue;
        }
        for (f, c) in in_blink {
            let scale = 1.0 - cfg.closure * c / peak;
            let frame = &mut frames[f];
            for (upper, lower, corners) in EYELIDS {
                let mid = (frame[corners[0]][1] + frame[corners[1]][1]) / 2.0;
                for i in upper.into_iter().chain(lower) {
                    frame[i][1] = mid + (frame[i][1] - mid) * scale;
                }
            }
        }
    }
    seq.with_frames(frames)
}

/// `R = Rz(roll) * Ry(yaw) * Rx(pitch)`: pitch is applied first, roll last.
pub fn rotation_matrix(yaw: f64, pitch: f64, roll: f64) -> [[f64; 3]; 3] {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    let rz = [[cr, -sr, 0.0], [sr, cr, 0.0], [0.0, 0.0, 1.0]];
    let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
    let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
    matmul(&matmul(&rz, &ry), &rx)
}

fn matmul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut c = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            c[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    c
}

/// Rotation centre roughly at the top of the neck, behind the face plane.
pub const DEFAULT_PIVOT: [f64; 3] = [0.0, 0.1, 0.3];

/// Rotates every frame rigidly about `pivot` by its pose angles.
pub fn apply_head_pose(seq: &LandmarkSequence, pose: &PoseTrack, pivot: [f64; 3]) -> Result<LandmarkSequence> {
    if pose.len() != seq.len() {
        return Err(Error::DimensionMismatch {
            expected: seq.len(),
            got: pose.len(),
        });
    }
    let frames = seq
        .frames()
        .iter()
        .zip(pose.angles())
        .map(|(frame, &[yaw, pitch, roll])| {
            if yaw == 0.0 && pitch == 0.0 && roll == 0.0 {
                return frame.clone();
            }
            let r = rotation_matrix(yaw, pitch, roll);
            frame
                .iter()
                .map(|p| {
                    let d = [p[0] - pivot[0], p[1] - pivot[1], p[2] - pivot[2]];
                    let mut out = pivot;
                    for i in 0..3 {
                        out[i] += r[i][0] * d[0] + r[i][1] * d[1] + r[i][2] * d[2];
                    }
                    out
                })
                .collect()
        })
        .collect();
    seq.with_frames(frames)
}
