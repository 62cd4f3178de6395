//! Synthetic talking-face dataset generation.
//!
//! The crate is organised as the stages of the generation pipeline:
//!
//! - [`audio`]: WAV I/O, resampling, STFT, log-mel features, RMS envelopes.
//! - [`voice`]: phase-vocoder time-stretch, pitch-shift and the `childify` recipe.
//! - [`speaker`]: a small recurrent speaker encoder trained with the GE2E loss.
//! - [`tts`]: a formant synthesizer behind a pluggable text-to-speech trait.
//! - [`landmarks`]: 68-point templates, procedural and learned articulation, blinks, head pose.
//! - [`nn`]: dense and recurrent layers with hand-written gradients, SGD and Adam.
//! - [`render`]: procedural seed faces and piecewise-affine frame warping.
//! - [`quality`]: landmark sanity, identity similarity, lip-sync score, histograms, MOS.
//! - [`pipeline`]: manifests, job planning, batch execution and dataset summaries.

pub mod audio;
pub mod error;
pub mod landmarks;
pub mod nn;
pub mod pipeline;
pub mod quality;
pub mod render;
pub mod speaker;
pub mod tts;
pub mod voice;

pub use error::{Error, Result};
