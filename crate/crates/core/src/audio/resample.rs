//! Band-limited resampling with a Kaiser-windowed sinc kernel.
//!
//! The kernel is tabulated once per call at `PHASES` sub-sample positions per
//! zero crossing and linearly interpolated, i.e. a finely phased polyphase
//! filter that also handles irrational ratios and time-varying ratios.

use super::AudioClip;
use crate::error::{Error, Result};

/// Zero crossings on each side of the kernel centre.
const HALF_WIDTH: usize = 24;
const PHASES: usize = 512;
const KAISER_BETA: f64 = 8.6;
/// Cutoff relative to the lower Nyquist, leaving room for the transition band.
const ROLLOFF: f64 = 0.94;

fn bessel_i0(x: f64) -> f64 {
    let mut sum = 1.0;
    let mut term = 1.0;
    let half = x / 2.0;
    for k in 1..64 {
        term *= (half / k as f64) * (half / k as f64);
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

struct SincTable {
    values: Vec<f64>,
}

impl SincTable {
    fn new() -> Self {
        let n = HALF_WIDTH * PHASES + 2;
        let norm = bessel_i0(KAISER_BETA);
        let values = (0..n)
            .map(|i| {
                let u = i as f64 / PHASES as f64;
                if u >= HALF_WIDTH as f64 {
                    return 0.0;
                }
                let sinc = if u == 0.0 {
                    1.0
                } else {
                    (std::f64::consts::PI * u).sin() / (std::f64::consts::PI * u)
                };
                let r = u / HALF_WIDTH as f64;
                sinc * bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / norm
            })
            .collect();
        Self { values }
    }

    /// Windowed sinc evaluated at `u` zero crossings from the centre.
    #[inline]
    fn at(&self, u: f64) -> f64 {
        let pos = u.abs() * PHASES as f64;
        let i = pos as usize;
        if i + 1 >= self.values.len() {
            return 0.0;
        }
        let frac = pos - i as f64;
        self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
    }
}

/// Interpolates `x` at fractional input position `t` with a low-pass cutoff of
/// `cutoff` (fraction of the input Nyquist, `<= 1`).
fn interpolate(table: &SincTable, x: &[f64], t: f64, cutoff: f64) -> f64 {
    let reach = HALF_WIDTH as f64 / cutoff;
    let lo = (t - reach).ceil().max(0.0) as usize;
    let hi = ((t + reach).floor() as isize).min(x.len() as isize - 1);
    if hi < lo as isize {
        return 0.0;
    }
    let mut acc = 0.0;
    for (k, &xk) in x.iter().enumerate().take(hi as usize + 1).skip(lo) {
        acc += xk * table.at((t - k as f64) * cutoff);
    }
    acc * cutoff
}

/// Resamples to `target_rate`; output length is `round(len * target / source)`.
pub fn resample(clip: &AudioClip, target_rate: u32) -> Result<AudioClip> {
    if target_rate == 0 {
        return Err(Error::invalid("target_rate", "must be positive"));
    }
    if target_rate == clip.sample_rate() {
        return Ok(clip.clone());
    }
    let ratio = f64::from(target_rate) / f64::from(clip.sample_rate());
    let samples = stretch_samples(clip.samples(), ratio);
    AudioClip::new(samples, target_rate)
}

/// Changes the number of samples by `ratio` while keeping the sample rate,
/// which scales every frequency by `1 / ratio` on playback.
pub fn resample_by_ratio(clip: &AudioClip, ratio: f64) -> Result<AudioClip> {
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(Error::invalid("ratio", format!("{ratio} must be positive")));
    }
    if ratio == 1.0 {
        return Ok(clip.clone());
    }
    AudioClip::new(stretch_samples(clip.samples(), ratio), clip.sample_rate())
}

fn stretch_samples(x: &[f64], ratio: f64) -> Vec<f64> {
    let table = SincTable::new();
    let out_len = (x.len() as f64 * ratio).round() as usize;
    let step = 1.0 / ratio;
    let cutoff = ratio.min(1.0) * ROLLOFF;
    (0..out_len)
        .map(|n| interpolate(&table, x, n as f64 * step, cutoff))
        .collect()
}

/// Variable-rate resampling at constant sample rate.
///
/// `read_rate(t)` gives how many input samples are consumed per output sample
/// at input time `t` seconds; a value above 1 raises pitch and shortens the
/// clip locally. Reading stops once the input is exhausted.
pub fn resample_varying(clip: &AudioClip, read_rate: impl Fn(f64) -> f64) -> Result<AudioClip> {
    let table = SincTable::new();
    let x = clip.samples();
    let sr = f64::from(clip.sample_rate());
    let mut out = Vec::with_capacity(x.len());
    let mut t = 0.0;
    while t <= (x.len() as f64 - 1.0).max(0.0) && !x.is_empty() {
        let rate = read_rate(t / sr);
        if !(rate.is_finite() && rate > 0.0) {
            return Err(Error::invalid("read_rate", format!("{rate} at t={}", t / sr)));
        }
        let cutoff = (1.0 / rate).min(1.0) * ROLLOFF;
        out.push(interpolate(&table, x, t, cutoff));
        t += rate;
    }
    AudioClip::new(out, clip.sample_rate())
}
