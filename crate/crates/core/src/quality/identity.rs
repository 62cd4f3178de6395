//! Hand-crafted appearance descriptor standing in for a face-recognition
//! embedding: a coarse grayscale layout plus gradient orientation statistics.

use image::RgbImage;
use serde::{Deserialize, Serialize};

use super::sanity::{face_box, BoundingBox};
use crate::error::{Error, Result};
use crate::render::SeedFace;

pub const GRID: usize = 16;
pub const ORIENTATION_BINS: usize = 8;

fn luma(img: &RgbImage, x: u32, y: u32) -> f64 {
    let p = img.get_pixel(x, y).0;
    0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2])
}

fn zero_mean_unit(v: &mut [f64]) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= mean);
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1e-12 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

/// `GRID x GRID` box-averaged luma (zero-mean, unit-norm) followed by an
/// `ORIENTATION_BINS` magnitude-weighted histogram of unsigned gradient
/// orientation, all taken inside `bbox`. The histogram is a distribution
/// minus the uniform one, scaled so a single-orientation image has unit
/// norm; isotropic texture therefore contributes almost nothing.
pub fn identity_descriptor(img: &RgbImage, bbox: &BoundingBox) -> Vec<f64> {
    let b = bbox.clipped(img.width(), img.height());
    let (x0, y0) = (b.x0.floor() as u32, b.y0.floor() as u32);
    let (x1, y1) = (b.x1.ceil() as u32, b.y1.ceil() as u32);
    let (bw, bh) = ((x1 - x0 + 1) as f64, (y1 - y0 + 1) as f64);

    let mut grid = vec![0.0; GRID * GRID];
    let mut counts = vec![0usize; GRID * GRID];
    let mut hist = vec![0.0; ORIENTATION_BINS];
    for y in y0..=y1 {
        let gy = (((y - y0) as f64 / bh) * GRID as f64) as usize;
        for x in x0..=x1 {
            let gx = (((x - x0) as f64 / bw) * GRID as f64) as usize;
            let cell = gy.min(GRID - 1) * GRID + gx.min(GRID - 1);
            grid[cell] += luma(img, x, y);
            counts[cell] += 1;
            if x > x0 && x < x1 && y > y0 && y < y1 {
                let dx = luma(img, x + 1, y) - luma(img, x - 1, y);
                let dy = luma(img, x, y + 1) - luma(img, x, y - 1);
                let mag = (dx * dx + dy * dy).sqrt();
                if mag > 0.0 {
                    let theta = dy.atan2(dx).rem_euclid(std::f64::consts::PI);
                    let bin = ((theta / std::f64::consts::PI) * ORIENTATION_BINS as f64) as usize;
                    hist[bin.min(ORIENTATION_BINS - 1)] += mag;
                }
            }
        }
    }
    for (g, c) in grid.iter_mut().zip(&counts) {
        if *c > 0 {
            *g /= *c as f64;
        }
    }
    zero_mean_unit(&mut grid);
    let total: f64 = hist.iter().sum();
    let k = ORIENTATION_BINS as f64;
    let peak_norm = ((k - 1.0) / k).sqrt();
    for h in &mut hist {
        let p = if total > 0.0 { *h / total } else { 1.0 / k };
        *h = (p - 1.0 / k) / peak_norm;
    }
    grid.extend(hist);
    grid
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na < 1e-12 || nb < 1e-12 {
        return 0.0;
    }
    (dot / (na * nb)).clamp(-1.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityScores {
    pub per_frame: Vec<f64>,
    pub min: f64,
    pub mean: f64,
}

/// Descriptor cosine of every frame against the seed image, both read inside
/// the seed's face box (10% margin).
pub fn identity_similarity(frames: &[RgbImage], seed: &SeedFace) -> Result<IdentityScores> {
    if frames.is_empty() {
        return Err(Error::Empty("frames"));
    }
    let bbox = face_box(&seed.landmarks, 0.1);
    let reference = identity_descriptor(&seed.image, &bbox);
    let per_frame: Vec<f64> = frames
        .iter()
        .map(|f| {
            if f.dimensions() != seed.image.dimensions() {
                return Err(Error::invalid("frames", "frame size differs from the seed image"));
            }
            Ok(cosine(&identity_descriptor(f, &bbox), &reference))
        })
        .collect::<Result<_>>()?;
    let min = per_frame.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = per_frame.iter().sum::<f64>() / per_frame.len() as f64;
    Ok(IdentityScores { per_frame, min, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::render::{generate_test_face, FaceParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seed_against_itself_is_one() {
        let f = generate_test_face(&FaceParams::default(), 3).unwrap();
        let s = identity_similarity(&[f.image.clone()], &f).unwrap();
        assert!((s.min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn noise_is_unrelated() {
        let f = generate_test_face(&FaceParams::default(), 3).unwrap();
        let mut total = 0.0;
        for trial in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(trial);
            let noise = RgbImage::from_fn(256, 256, |_, _| image::Rgb([rng.random(), rng.random(), rng.random()]));
            total += identity_similarity(&[noise], &f).unwrap().mean;
        }
        assert!((total / 20.0).abs() < 0.2, "{}", total / 20.0);
    }

    #[test]
    fn different_faces_score_lower_than_the_same_face() {
        let a = generate_test_face(&FaceParams::default(), 1).unwrap();
        let b = generate_test_face(&FaceParams::default(), 2).unwrap();
        let s = identity_similarity(&[b.image.clone()], &a).unwrap();
        assert!(s.min < 0.999);
    }

    #[test]
    fn empty_and_mismatched_inputs() {
        let f = generate_test_face(&FaceParams::default(), 3).unwrap();
        assert!(identity_similarity(&[], &f).is_err());
        assert!(identity_similarity(&[RgbImage::new(10, 10)], &f).is_err());
    }
}
