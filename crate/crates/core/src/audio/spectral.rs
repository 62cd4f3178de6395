use std::f64::consts::TAU;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::AudioClip;
use crate::error::{Error, Result};

/// Tapering function applied to each analysis frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    /// Periodic Hann (DFT-even), the default analysis window.
    #[default]
    Hann,
    Rectangular,
}

impl Window {
    pub fn coefficients(self, len: usize) -> Vec<f64> {
        match self {
            Window::Hann => (0..len)
                .map(|i| 0.5 - 0.5 * (TAU * i as f64 / len as f64).cos())
                .collect(),
            Window::Rectangular => vec![1.0; len],
        }
    }
}

/// Short-time Fourier transform of a clip.
///
/// `frames[t][k]` holds bin `k` (0..=frame_len/2) of frame `t`, whose first
/// sample is `t * hop`.
#[derive(Debug, Clone)]
pub struct Spectrogram {
    pub frames: Vec<Vec<Complex64>>,
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
    pub sample_rate: u32,
    pub signal_len: usize,
}

impl Spectrogram {
    pub fn bins(&self) -> usize {
        self.frame_len / 2 + 1
    }

    pub fn n_frames(&self) -> usize {
        self.frames.len()
    }

    pub fn bin_hz(&self, bin: usize) -> f64 {
        bin as f64 * f64::from(self.sample_rate) / self.frame_len as f64
    }
}

pub(crate) fn check_frame_params(frame_len: usize, hop: usize) -> Result<()> {
    if frame_len < 2 || !frame_len.is_power_of_two() {
        return Err(Error::invalid("frame_len", format!("{frame_len} is not a power of two")));
    }
    if hop == 0 || hop > frame_len {
        return Err(Error::invalid("hop", format!("{hop} must be in 1..={frame_len}")));
    }
    Ok(())
}

/// Frames start at sample 0 with no padding, so a clip of `n` samples yields
/// `1 + (n - frame_len) / hop` frames (none if shorter than one frame).
pub fn stft(clip: &AudioClip, frame_len: usize, hop: usize, window: Window) -> Result<Spectrogram> {
    check_frame_params(frame_len, hop)?;
    let x = clip.samples();
    let n_frames = if x.len() >= frame_len {
        1 + (x.len() - frame_len) / hop
    } else {
        0
    };
    let win = window.coefficients(frame_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(frame_len);
    let bins = frame_len / 2 + 1;
    let mut buf = vec![Complex64::new(0.0, 0.0); frame_len];
    let mut frames = Vec::with_capacity(n_frames);
    for t in 0..n_frames {
        let start = t * hop;
        for (i, b) in buf.iter_mut().enumerate() {
            *b = Complex64::new(x[start + i] * win[i], 0.0);
        }
        fft.process(&mut buf);
        frames.push(buf[..bins].to_vec());
    }
    Ok(Spectrogram {
        frames,
        frame_len,
        hop,
        window,
        sample_rate: clip.sample_rate(),
        signal_len: x.len(),
    })
}

/// Weighted overlap-add inverse of [`stft`].
///
/// Each inverse frame is multiplied by the window again and the sum is
/// normalised by the accumulated squared window, so reconstruction is exact
/// wherever that sum is non-zero. Samples past the last frame are zero.
pub fn istft(spec: &Spectrogram) -> Result<AudioClip> {
    check_frame_params(spec.frame_len, spec.hop)?;
    let n = spec.frame_len;
    let win = spec.window.coefficients(n);
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut out = vec![0.0; spec.signal_len];
    let mut norm = vec![0.0; spec.signal_len];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for (t, frame) in spec.frames.iter().enumerate() {
        if frame.len() != spec.bins() {
            return Err(Error::DimensionMismatch {
                expected: spec.bins(),
                got: frame.len(),
            });
        }
        fill_hermitian(frame, &mut buf);
        ifft.process(&mut buf);
        let start = t * spec.hop;
        for i in 0..n {
            let idx = start + i;
            if idx >= out.len() {
                break;
            }
            out[idx] += buf[i].re / n as f64 * win[i];
            norm[idx] += win[i] * win[i];
        }
    }
    for (o, w) in out.iter_mut().zip(&norm) {
        if *w > 1e-10 {
            *o /= w;
        } else {
            *o = 0.0;
        }
    }
    AudioClip::new(out, spec.sample_rate)
}

/// Expands a half spectrum into a full conjugate-symmetric buffer.
pub(crate) fn fill_hermitian(half: &[Complex64], full: &mut [Complex64]) {
    let n = full.len();
    full[..half.len()].copy_from_slice(half);
    full[0].im = 0.0;
    full[n / 2].im = 0.0;
    for k in 1..n / 2 {
        full[n - k] = half[k].conj();
    }
}

/// Frequency of the strongest spectral peak, refined by parabolic
/// interpolation on the log magnitude of a Hann-windowed, zero-padded FFT.
pub fn fft_peak_hz(clip: &AudioClip) -> Option<f64> {
    let x = clip.samples();
    if x.len() < 4 {
        return None;
    }
    let n = (x.len() * 4).next_power_of_two();
    let win = Window::Hann.coefficients(x.len());
    let mut buf: Vec<Complex64> = x
        .iter()
        .zip(&win)
        .map(|(s, w)| Complex64::new(s * w, 0.0))
        .collect();
    buf.resize(n, Complex64::new(0.0, 0.0));
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut buf);
    let mags: Vec<f64> = buf[..n / 2].iter().map(|c| c.norm()).collect();
    let (k, &peak) = mags
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))?;
    if peak <= 0.0 {
        return None;
    }
    let mut pos = k as f64;
    if k + 1 < mags.len() {
        let (a, b, c) = (mags[k - 1].max(1e-300).ln(), peak.ln(), mags[k + 1].max(1e-300).ln());
        let denom = a - 2.0 * b + c;
        if denom.abs() > 1e-15 {
            pos += 0.5 * (a - c) / denom;
        }
    }
    Some(pos * f64::from(clip.sample_rate()) / n as f64)
}
