//! Audio I/O, resampling, spectral analysis and feature extraction.
//!
//! Everything downstream (voice transforms, speaker embeddings, landmark
//! animation, lip-sync scoring) consumes [`AudioClip`] values and the
//! feature types defined here. All functions are pure.

mod features;
mod plot;
mod resample;
mod spectral;
mod wav;

pub use features::{
    features, hz_to_mel, mel_band_edges, mel_to_hz, rms_envelope, Envelope, FeatureConfig,
    FeatureSequence,
};
pub use plot::{plot_decimate, write_plot, PlotPoint, DEFAULT_PLOT_POINTS};
pub use resample::{resample, resample_by_ratio, resample_varying};
pub use spectral::{fft_peak_hz, istft, stft, Spectrogram, Window};
pub(crate) use spectral::fill_hermitian;
pub use wav::{read_wav, read_wav_from, write_wav, write_wav_to};

use crate::error::{Error, Result};

/// Sample rate used throughout the generated datasets.
pub const DEFAULT_SAMPLE_RATE: u32 = 16_000;

/// Mono audio buffer with its sample rate.
///
/// Samples are nominally in `[-1, 1]` and always finite.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if sample_rate == 0 {
            return Err(Error::invalid("sample_rate", "must be positive"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    pub fn silence(duration_s: f64, sample_rate: u32) -> Result<Self> {
        let n = (duration_s * f64::from(sample_rate)).round().max(0.0) as usize;
        Self::new(vec![0.0; n], sample_rate)
    }

    /// Pure tone `amplitude * sin(2π f t)`.
    pub fn sine(freq_hz: f64, amplitude: f64, duration_s: f64, sample_rate: u32) -> Result<Self> {
        let n = (duration_s * f64::from(sample_rate)).round().max(0.0) as usize;
        let sr = f64::from(sample_rate);
        let samples = (0..n)
            .map(|i| amplitude * (std::f64::consts::TAU * freq_hz * i as f64 / sr).sin())
            .collect();
        Self::new(samples, sample_rate)
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_seconds(&self) -> f64 {
        self.samples.len() as f64 / f64::from(self.sample_rate)
    }

    pub fn rms(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        (self.samples.iter().map(|s| s * s).sum::<f64>() / self.samples.len() as f64).sqrt()
    }

    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Appends `seconds` of silence before and after the clip.
    pub fn padded(&self, before_s: f64, after_s: f64) -> Self {
        let sr = f64::from(self.sample_rate);
        let pre = (before_s * sr).round().max(0.0) as usize;
        let post = (after_s * sr).round().max(0.0) as usize;
        let mut samples = Vec::with_capacity(pre + self.samples.len() + post);
        samples.resize(pre, 0.0);
        samples.extend_from_slice(&self.samples);
        samples.resize(pre + self.samples.len() + post, 0.0);
        Self {
            samples,
            sample_rate: self.sample_rate,
        }
    }

    /// Sub-clip `[start, start + len)` in samples, clamped to the buffer.
    pub fn slice(&self, start: usize, len: usize) -> Self {
        let start = start.min(self.samples.len());
        let end = (start + len).min(self.samples.len());
        Self {
            samples: self.samples[start..end].to_vec(),
            sample_rate: self.sample_rate,
        }
    }
}
