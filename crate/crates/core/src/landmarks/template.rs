//! Canonical 68-point face layout (iBUG / dlib ordering).
//!
//! Coordinates are in head widths with the origin at the face centre, x to
//! the image right, y downwards and z away from the camera. Index groups:
//! jaw 0-16, brows 17-26, nose 27-35, eyes 36-47, outer lips 48-59, inner
//! lips 60-67.

use std::f64::consts::PI;
use std::ops::Range;

use super::LandmarkFrame;

pub const N_LANDMARKS: usize = 68;

pub const JAW: Range<usize> = 0..17;
pub const BROWS: Range<usize> = 17..27;
pub const NOSE: Range<usize> = 27..36;
/// Subject's right eye, on the image left.
pub const RIGHT_EYE: Range<usize> = 36..42;
pub const LEFT_EYE: Range<usize> = 42..48;
pub const EYES: Range<usize> = 36..48;
pub const OUTER_LIPS: Range<usize> = 48..60;
pub const INNER_LIPS: Range<usize> = 60..68;
pub const MOUTH: Range<usize> = 48..68;

pub const INNER_LIP_TOP: [usize; 3] = [61, 62, 63];
pub const INNER_LIP_BOTTOM: [usize; 3] = [67, 66, 65];

/// (upper lid pair, lower lid pair, corner pair) per eye.
pub const EYELIDS: [([usize; 2], [usize; 2], [usize; 2]); 2] =
    [([37, 38], [41, 40], [36, 39]), ([43, 44], [47, 46], [42, 45])];

/// Vertical gap between the inner lips at rest.
pub const REST_LIP_GAP: f64 = 0.012;

/// Left/right counterpart of landmark `i` (points on the midline map to themselves).
pub fn mirror_index(i: usize) -> usize {
    match i {
        0..=16 => 16 - i,
        17..=26 => 43 - i,
        27..=30 => i,
        31..=35 => 66 - i,
        36..=39 => 81 - i,
        40 | 41 => 87 - i,
        42..=45 => 81 - i,
        46 | 47 => 87 - i,
        48..=54 => 102 - i,
        55..=59 => 114 - i,
        60..=64 => 124 - i,
        65..=67 => 132 - i,
        _ => i,
    }
}

fn cheek_depth(x: f64) -> f64 {
    0.3 * x * x
}

#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkTemplate {
    pub points: LandmarkFrame,
}

impl Default for LandmarkTemplate {
    fn default() -> Self {
        Self::canonical()
    }
}

impl LandmarkTemplate {
    pub fn canonical() -> Self {
        let mut p: Vec<[f64; 3]> = Vec::with_capacity(N_LANDMARKS);
        let flat = |x: f64, y: f64| [x, y, cheek_depth(x)];

        for i in 0..17 {
            let theta = -PI / 2.0 + PI * i as f64 / 16.0;
            p.push([0.5 * theta.sin(), -0.1 + 0.55 * theta.cos(), 0.15 * (1.0 - theta.cos())]);
        }
        for i in 0..5 {
            let t = i as f64 / 4.0;
            p.push(flat(-0.38 + 0.3 * t, -0.26 - 0.04 * (PI * t).sin()));
        }
        for i in 0..5 {
            let t = i as f64 / 4.0;
            p.push(flat(0.08 + 0.3 * t, -0.26 - 0.04 * (PI * t).sin()));
        }
        for i in 0..4 {
            let t = i as f64 / 3.0;
            p.push([0.0, -0.18 + 0.23 * t, -0.08 * t]);
        }
        for (x, y) in [(-0.08, 0.1), (-0.04, 0.115), (0.0, 0.12), (0.04, 0.115), (0.08, 0.1)] {
            p.push([x, y, -0.04 + 0.1 * x.abs()]);
        }
        // Both eyes run clockwise in the image from their image-left corner.
        for cx in [-0.2, 0.2] {
            let cy = -0.1;
            let ring = [
                (-0.08, 0.0),
                (-0.03, -0.035),
                (0.03, -0.035),
                (0.08, 0.0),
                (0.03, 0.03),
                (-0.03, 0.03),
            ];
            for (dx, dy) in ring {
                p.push(flat(cx + dx, cy + dy));
            }
        }
        let lips_z = |x: f64| -0.03 + cheek_depth(x);
        for (x, y) in [
            (-0.15, 0.25),
            (-0.1, 0.22),
            (-0.04, 0.205),
            (0.0, 0.21),
            (0.04, 0.205),
            (0.1, 0.22),
            (0.15, 0.25),
            (0.1, 0.28),
            (0.05, 0.3),
            (0.0, 0.305),
            (-0.05, 0.3),
            (-0.1, 0.28),
        ] {
            p.push([x, y, lips_z(x)]);
        }
        let h = REST_LIP_GAP / 2.0;
        for (x, y) in [
            (-0.12, 0.25),
            (-0.05, 0.25 - h),
            (0.0, 0.25 - h),
            (0.05, 0.25 - h),
            (0.12, 0.25),
            (0.05, 0.25 + h),
            (0.0, 0.25 + h),
            (-0.05, 0.25 + h),
        ] {
            p.push([x, y, lips_z(x) + 0.005]);
        }
        debug_assert_eq!(p.len(), N_LANDMARKS);
        Self { points: p }
    }
}

/// Distance between the mean upper and mean lower inner-lip points. Unlike
/// a raw y difference it does not change under rigid head motion.
pub fn mouth_opening(frame: &[[f64; 3]]) -> f64 {
    let mean = |idx: &[usize]| {
        let mut m = [0.0; 3];
        for &i in idx {
            for k in 0..3 {
                m[k] += frame[i][k] / idx.len() as f64;
            }
        }
        m
    };
    let (a, b) = (mean(&INNER_LIP_TOP), mean(&INNER_LIP_BOTTOM));
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Mean vertical upper-to-lower lid distance of eye `eye` (0 = right, 1 = left).
pub fn eyelid_gap(frame: &[[f64; 3]], eye: usize) -> f64 {
    let (upper, lower, _) = EYELIDS[eye];
    let up = (frame[upper[0]][1] + frame[upper[1]][1]) / 2.0;
    let low = (frame[lower[0]][1] + frame[lower[1]][1]) / 2.0;
    low - up
}
