use serde::{Deserialize, Serialize};

use super::spectral::{check_frame_params, stft, Window};
use super::AudioClip;
use crate::error::{Error, Result};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Log-mel (and optional cepstral) analysis settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub frame_len: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub log_floor: f64,
    pub fmin_hz: f64,
    /// `None` means the Nyquist frequency of the analysed clip.
    pub fmax_hz: Option<f64>,
    /// Number of DCT-II cepstral coefficients appended after the log-mel bands.
    pub n_cepstral: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            frame_len: 1024,
            hop: 256,
            n_mels: 26,
            log_floor: 1e-10,
            fmin_hz: 0.0,
            fmax_hz: None,
            n_cepstral: 0,
        }
    }
}

impl FeatureConfig {
    pub fn dim(&self) -> usize {
        self.n_mels + self.n_cepstral
    }
}

/// Per-frame feature rows. Row `t` describes samples `[t*hop, t*hop + frame_len)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSequence {
    pub rows: Vec<Vec<f64>>,
    pub hop_seconds: f64,
    pub frame_seconds: f64,
}

impl FeatureSequence {
    pub fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Time in seconds of the centre of row `t`.
    pub fn center_time(&self, t: usize) -> f64 {
        t as f64 * self.hop_seconds + self.frame_seconds / 2.0
    }

    /// Averages rows whose centres fall in each video frame window
    /// `[f/fps, (f+1)/fps)`; frames without a row take the nearest row.
    pub fn at_fps(&self, fps: f64, n_frames: usize) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut out = vec![vec![0.0; dim]; n_frames];
        let mut counts = vec![0usize; n_frames];
        for (t, row) in self.rows.iter().enumerate() {
            let f = (self.center_time(t) * fps).floor();
            if f < 0.0 || f as usize >= n_frames {
                continue;
            }
            let f = f as usize;
            for (o, v) in out[f].iter_mut().zip(row) {
                *o += v;
            }
            counts[f] += 1;
        }
        for f in 0..n_frames {
            if counts[f] > 0 {
                out[f].iter_mut().for_each(|v| *v /= counts[f] as f64);
            } else if !self.rows.is_empty() {
                let centre = (f as f64 + 0.5) / fps;
                let t = ((centre - self.frame_seconds / 2.0) / self.hop_seconds)
                    .round()
                    .clamp(0.0, (self.rows.len() - 1) as f64) as usize;
                out[f] = self.rows[t].clone();
            }
        }
        out
    }
}

/// Lower, centre and upper edge frequencies (Hz) of each triangular mel band.
pub fn mel_band_edges(n_mels: usize, fmin: f64, fmax: f64) -> Vec<(f64, f64, f64)> {
    let (lo, hi) = (hz_to_mel(fmin), hz_to_mel(fmax));
    let pts: Vec<f64> = (0..n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (n_mels + 1) as f64))
        .collect();
    (0..n_mels).map(|m| (pts[m], pts[m + 1], pts[m + 2])).collect()
}

fn mel_filterbank(cfg: &FeatureConfig, sample_rate: u32) -> Vec<Vec<(usize, f64)>> {
    let nyquist = f64::from(sample_rate) / 2.0;
    let fmax = cfg.fmax_hz.unwrap_or(nyquist).min(nyquist);
    let bins = cfg.frame_len / 2 + 1;
    let bin_hz = f64::from(sample_rate) / cfg.frame_len as f64;
    mel_band_edges(cfg.n_mels, cfg.fmin_hz, fmax)
        .into_iter()
        .map(|(l, c, u)| {
            (0..bins)
                .filter_map(|k| {
                    let f = k as f64 * bin_hz;
                    let w = if f > l && f <= c {
                        (f - l) / (c - l)
                    } else if f > c && f < u {
                        (u - f) / (u - c)
                    } else {
                        0.0
                    };
                    (w > 0.0).then_some((k, w))
                })
                .collect()
        })
        .collect()
}

/// Log-mel filterbank energies (natural log, floored), optionally followed by
/// DCT-II cepstral coefficients of those log energies.
pub fn features(clip: &AudioClip, cfg: &FeatureConfig) -> Result<FeatureSequence> {
    check_frame_params(cfg.frame_len, cfg.hop)?;
    if cfg.n_mels == 0 {
        return Err(Error::invalid("n_mels", "must be positive"));
    }
    if clip.len() < cfg.frame_len {
        return Err(Error::TooShort {
            needed: format!("{} samples", cfg.frame_len),
            got: format!("{} samples", clip.len()),
        });
    }
    let spec = stft(clip, cfg.frame_len, cfg.hop, Window::Hann)?;
    let bank = mel_filterbank(cfg, clip.sample_rate());
    let win_sum: f64 = Window::Hann.coefficients(cfg.frame_len).iter().sum();
    let power_norm = 1.0 / (win_sum * win_sum);
    let floor_ln = cfg.log_floor.ln();
    let rows = spec
        .frames
        .iter()
        .map(|frame| {
            let mut row: Vec<f64> = bank
                .iter()
                .map(|band| {
                    let e: f64 = band
                        .iter()
                        .map(|&(k, w)| w * frame[k].norm_sqr() * power_norm)
                        .sum();
                    if e > cfg.log_floor {
                        e.ln()
                    } else {
                        floor_ln
                    }
                })
                .collect();
            if cfg.n_cepstral > 0 {
                let ceps = dct2(&row, cfg.n_cepstral);
                row.extend(ceps);
            }
            row
        })
        .collect();
    let sr = f64::from(clip.sample_rate());
    Ok(FeatureSequence {
        rows,
        hop_seconds: cfg.hop as f64 / sr,
        frame_seconds: cfg.frame_len as f64 / sr,
    })
}

fn dct2(x: &[f64], n_out: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..n_out)
        .map(|k| {
            let scale = if k == 0 { (1.0 / n).sqrt() } else { (2.0 / n).sqrt() };
            scale
                * x.iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v * (std::f64::consts::PI * k as f64 * (i as f64 + 0.5) / n).cos()
                    })
                    .sum::<f64>()
        })
        .collect()
}

/// Frame-wise RMS amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub values: Vec<f64>,
    pub hop_seconds: f64,
    /// Length of each RMS frame; value `i` is centred at
    /// `i * hop_seconds + frame_seconds / 2`.
    pub frame_seconds: f64,
}

impl Envelope {
    pub fn center_time(&self, i: usize) -> f64 {
        i as f64 * self.hop_seconds + self.frame_seconds / 2.0
    }

    /// Linear interpolation at time `t`, holding the end values outside the
    /// covered range.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.values.len() {
            0 => 0.0,
            1 => self.values[0],
            n => {
                let pos = ((t - self.frame_seconds / 2.0) / self.hop_seconds).clamp(0.0, (n - 1) as f64);
                let i = (pos.floor() as usize).min(n - 2);
                let frac = pos - i as f64;
                self.values[i] * (1.0 - frac) + self.values[i + 1] * frac
            }
        }
    }

    /// Single-pole low-pass with time constant `tau_s`, run causally at the
    /// envelope rate and starting from rest.
    pub fn smoothed(&self, tau_s: f64) -> Envelope {
        let alpha = if tau_s > 0.0 {
            1.0 - (-self.hop_seconds / tau_s).exp()
        } else {
            1.0
        };
        let mut y = 0.0;
        let values = self
            .values
            .iter()
            .map(|&v| {
                y += alpha * (v - y);
                y
            })
            .collect();
        Envelope {
            values,
            hop_seconds: self.hop_seconds,
            frame_seconds: self.frame_seconds,
        }
    }

    /// Samples the envelope at the centre of each video frame.
    pub fn at_fps(&self, fps: f64, n_frames: usize) -> Vec<f64> {
        (0..n_frames)
            .map(|f| self.value_at((f as f64 + 0.5) / fps))
            .collect()
    }
}

/// `values[i] = sqrt(mean(x^2))` over samples `[i*hop, i*hop + frame_len)`.
pub fn rms_envelope(clip: &AudioClip, frame_len: usize, hop: usize) -> Result<Envelope> {
    if frame_len == 0 || hop == 0 {
        return Err(Error::invalid("frame_len/hop", "must be positive"));
    }
    if clip.len() < frame_len {
        return Err(Error::TooShort {
            needed: format!("{frame_len} samples"),
            got: format!("{} samples", clip.len()),
        });
    }
    let x = clip.samples();
    let n = 1 + (x.len() - frame_len) / hop;
    let values = (0..n)
        .map(|i| {
            let frame = &x[i * hop..i * hop + frame_len];
            (frame.iter().map(|s| s * s).sum::<f64>() / frame_len as f64).sqrt()
        })
        .collect();
    let sr = f64::from(clip.sample_rate());
    Ok(Envelope {
        values,
        hop_seconds: hop as f64 / sr,
        frame_seconds: frame_len as f64 / sr,
    })
}
