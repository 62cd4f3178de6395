use std::io::Write;
use std::path::Path;

use super::AudioClip;
use crate::error::{Error, Result};

pub const DEFAULT_PLOT_POINTS: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub time_s: f64,
    pub amplitude: f64,
}

/// Min/max bucket decimation for waveform plots.
///
/// Clips with at most `max_points` samples pass through unchanged. Longer
/// clips are split into `max_points / 2` buckets and each bucket contributes
/// its minimum and maximum sample, in time order.
pub fn plot_decimate(clip: &AudioClip, max_points: usize) -> Vec<PlotPoint> {
    let max_points = max_points.max(2);
    let sr = f64::from(clip.sample_rate());
    let x = clip.samples();
    let point = |i: usize| PlotPoint {
        time_s: i as f64 / sr,
        amplitude: x[i],
    };
    if x.len() <= max_points {
        return (0..x.len()).map(point).collect();
    }
    let buckets = max_points / 2;
    let mut out = Vec::with_capacity(buckets * 2);
    for b in 0..buckets {
        let start = b * x.len() / buckets;
        let end = (b + 1) * x.len() / buckets;
        let (mut lo, mut hi) = (start, start);
        for i in start..end {
            if x[i] < x[lo] {
                lo = i;
            }
            if x[i] > x[hi] {
                hi = i;
            }
        }
        if lo == hi {
            hi = if lo + 1 < end { lo + 1 } else { start };
        }
        let (a, b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        out.push(point(a));
        out.push(point(b));
    }
    out
}

/// Two-column `time_s amplitude` text for external plotting tools.
pub fn write_plot(points: &[PlotPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for p in points {
        writeln!(w, "{:.6} {:.6}", p.time_s, p.amplitude).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
