//! Time-stretch, pitch-shift and the composite `childify` voice transform.
//!
//! Both transforms accept either a constant factor or a
//! [`BreakpointFunction`] evaluated at each analysis frame. Pitch shifting is
//! realised as resampling by `2^(-s/12)` followed by a time-stretch by
//! `2^(s/12)`, which restores the original duration. Formants move with the
//! pitch; no formant preservation is attempted.

mod bpf;
mod vocoder;

pub use bpf::BreakpointFunction;
pub use vocoder::{FRAME_LEN, SYNTH_HOP};

use serde::{Deserialize, Serialize};

use crate::audio::{resample_by_ratio, resample_varying, AudioClip};
use crate::error::{Error, Result};

pub fn semitones_to_ratio(semitones: f64) -> f64 {
    2f64.powf(semitones / 12.0)
}

fn check_factor(factor: f64) -> Result<()> {
    if factor.is_finite() && factor > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("factor", format!("{factor} must be finite and > 0")))
    }
}

fn fit_length(mut x: Vec<f64>, len: usize) -> Vec<f64> {
    x.resize(len, 0.0);
    x
}

/// Changes duration by `factor` (output = input x factor) keeping pitch.
pub fn time_stretch(clip: &AudioClip, factor: f64) -> Result<AudioClip> {
    check_factor(factor)?;
    if factor == 1.0 || clip.is_empty() {
        return Ok(clip.clone());
    }
    let out_len = (clip.len() as f64 * factor).round() as usize;
    let y = vocoder::vocode(clip.samples(), clip.sample_rate(), |_| factor, out_len);
    AudioClip::new(y, clip.sample_rate())
}

/// Time-varying stretch. The output lasts `integral of factor(t) dt` over the clip.
pub fn time_stretch_bpf(clip: &AudioClip, bpf: &BreakpointFunction) -> Result<AudioClip> {
    bpf.check_within(clip.duration_seconds())?;
    if bpf.is_identity() || clip.is_empty() {
        return Ok(clip.clone());
    }
    let sr = f64::from(clip.sample_rate());
    let out_len = (bpf.integral(clip.duration_seconds()) * sr).round() as usize;
    let y = vocoder::vocode(clip.samples(), clip.sample_rate(), |t| bpf.eval(t), out_len);
    AudioClip::new(y, clip.sample_rate())
}

/// Scales every frequency by `2^(semitones/12)`; duration is unchanged.
pub fn pitch_shift(clip: &AudioClip, semitones: f64) -> Result<AudioClip> {
    if !semitones.is_finite() {
        return Err(Error::invalid("semitones", "must be finite"));
    }
    if semitones == 0.0 || clip.is_empty() {
        return Ok(clip.clone());
    }
    let ratio = semitones_to_ratio(semitones);
    let squeezed = resample_by_ratio(clip, 1.0 / ratio)?;
    let y = vocoder::vocode(
        squeezed.samples(),
        clip.sample_rate(),
        |_| ratio,
        clip.len(),
    );
    AudioClip::new(fit_length(y, clip.len()), clip.sample_rate())
}

/// Time-varying pitch shift; `ratios` gives the frequency ratio over input time.
pub fn pitch_shift_bpf(clip: &AudioClip, ratios: &BreakpointFunction) -> Result<AudioClip> {
    ratios.check_within(clip.duration_seconds())?;
    if ratios.is_identity() || clip.is_empty() {
        return Ok(clip.clone());
    }
    let squeezed = resample_varying(clip, |t| ratios.eval(t))?;
    // Map breakpoints onto the squeezed time axis: tau(t) = integral of 1/ratio.
    let inverse = ratios.map_factors(|r| 1.0 / r)?;
    let mapped: Vec<(f64, f64)> = ratios
        .points()
        .iter()
        .map(|&(t, r)| (inverse.integral(t), r))
        .collect();
    let on_squeezed = BreakpointFunction::new(mapped)?;
    let y = vocoder::vocode(
        squeezed.samples(),
        clip.sample_rate(),
        |tau| on_squeezed.eval(tau),
        clip.len(),
    );
    AudioClip::new(fit_length(y, clip.len()), clip.sample_rate())
}

/// Parameters of the adult-to-child voice recipe: raise pitch, slow down.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChildifyParams {
    pub pitch_up_semitones: f64,
    /// Speaking-rate multiplier in (0, 1]; output duration is input / rate.
    pub rate_factor: f64,
    /// Frequency ratio over time; replaces `pitch_up_semitones` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pitch_bpf: Option<BreakpointFunction>,
    /// Rate factor over time; replaces `rate_factor` when set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bpf: Option<BreakpointFunction>,
}

impl Default for ChildifyParams {
    fn default() -> Self {
        Self {
            pitch_up_semitones: 4.0,
            rate_factor: 0.92,
            pitch_bpf: None,
            rate_bpf: None,
        }
    }
}

impl ChildifyParams {
    pub fn new(pitch_up_semitones: f64, rate_factor: f64) -> Result<Self> {
        let p = Self {
            pitch_up_semitones,
            rate_factor,
            pitch_bpf: None,
            rate_bpf: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn identity() -> Self {
        Self {
            pitch_up_semitones: 0.0,
            rate_factor: 1.0,
            pitch_bpf: None,
            rate_bpf: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pitch_up_semitones.is_finite() && self.pitch_up_semitones >= 0.0) {
            return Err(Error::invalid(
                "pitch_up_semitones",
                format!("{} must be >= 0", self.pitch_up_semitones),
            ));
        }
        if !(self.rate_factor > 0.0 && self.rate_factor <= 1.0) {
            return Err(Error::invalid(
                "rate_factor",
                format!("{} must be in (0, 1]", self.rate_factor),
            ));
        }
        if let Some(bpf) = &self.rate_bpf {
            if bpf.points().iter().any(|p| p.1 > 1.0) {
                return Err(Error::invalid("rate_bpf", "rate factors must be in (0, 1]"));
            }
        }
        Ok(())
    }
}

/// Pitch shift followed by time stretch (fixed order).
pub fn childify(clip: &AudioClip, params: &ChildifyParams) -> Result<AudioClip> {
    params.validate()?;
    let raised = match &params.pitch_bpf {
        Some(bpf) => pitch_shift_bpf(clip, bpf)?,
        None => pitch_shift(clip, params.pitch_up_semitones)?,
    };
    match &params.rate_bpf {
        Some(bpf) => time_stretch_bpf(&raised, &bpf.map_factors(|f| 1.0 / f)?),
        None => time_stretch(&raised, 1.0 / params.rate_factor),
    }
}
