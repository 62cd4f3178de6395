use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ChannelHistograms = [[u64; 256]; 3];

pub fn histogram(img: &RgbImage) -> ChannelHistograms {
    let mut h = [[0u64; 256]; 3];
    for p in img.pixels() {
        for c in 0..3 {
            h[c][p.0[c] as usize] += 1;
        }
    }
    h
}

/// L1 distance summed over the three channels.
pub fn histogram_distance(a: &ChannelHistograms, b: &ChannelHistograms) -> u64 {
    a.iter()
        .zip(b)
        .flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.abs_diff(*q)))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameHistograms {
    pub per_frame: Vec<ChannelHistograms>,
    /// Distance between frame `i` and `i + 1`.
    pub distances: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub transitions: usize,
    pub nonzero: usize,
    pub mean_distance: f64,
}

impl FrameHistograms {
    pub fn summary(&self) -> HistogramSummary {
        let n = self.distances.len();
        HistogramSummary {
            transitions: n,
            nonzero: self.distances.iter().filter(|&&d| d > 0).count(),
            mean_distance: if n == 0 {
                0.0
            } else {
                self.distances.iter().sum::<u64>() as f64 / n as f64
            },
        }
    }
}

impl HistogramSummary {
    pub fn nonzero_fraction(&self) -> f64 {
        if self.transitions == 0 {
            0.0
        } else {
            self.nonzero as f64 / self.transitions as f64
        }
    }
}

pub fn frame_histograms(frames: &[RgbImage]) -> Result<FrameHistograms> {
    if let Some(first) = frames.first() {
        if frames.iter().any(|f| f.dimensions() != first.dimensions()) {
            return Err(Error::invalid("frames", "frames differ in size"));
        }
    }
    let per_frame: Vec<ChannelHistograms> = frames.iter().map(histogram).collect();
    let distances = per_frame.windows(2).map(|w| histogram_distance(&w[0], &w[1])).collect();
    Ok(FrameHistograms { per_frame, distances })
}
