//! Text-to-speech behind a pluggable trait.
//!
//! [`FormantSynthesizer`] is a deterministic source-filter stand-in for a
//! neural TTS stack: it is not intelligible speech, but it has voicing,
//! formants, pauses and speaker-dependent pitch, which is all the downstream
//! stages need. [`PrerenderedAudio`] plugs externally rendered recordings
//! into the same interface.

mod phones;
mod profile;
mod synth;

use std::collections::BTreeMap;
use std::path::PathBuf;

pub use phones::{text_to_phones, Phone, PhoneClass, PhoneSequence};
pub use profile::{adult_profile, child_profile, ranges, VoiceProfile};
pub use synth::PEAK_LEVEL;

use crate::audio::{read_wav, resample, AudioClip};
use crate::error::{Error, Result};

/// "text + voice -> audio". Implementations must be deterministic in their inputs.
pub trait SpeechSynthesizer: Send + Sync {
    fn synthesize(&self, text: &str, profile: &VoiceProfile, sample_rate: u32, seed: u64) -> Result<AudioClip>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FormantSynthesizer;

impl SpeechSynthesizer for FormantSynthesizer {
    fn synthesize(&self, text: &str, profile: &VoiceProfile, sample_rate: u32, seed: u64) -> Result<AudioClip> {
        synthesize(text, profile, sample_rate, seed)
    }
}

/// Source-filter synthesis of `text`. Output length equals the phone
/// sequence duration and the peak never exceeds [`PEAK_LEVEL`].
pub fn synthesize(text: &str, profile: &VoiceProfile, sample_rate: u32, seed: u64) -> Result<AudioClip> {
    profile.validate()?;
    if sample_rate < 8000 {
        return Err(Error::invalid("sample_rate", format!("{sample_rate} < 8000")));
    }
    let phones = text_to_phones(text, profile.speaking_rate);
    AudioClip::new(synth::render(&phones, profile, sample_rate, seed), sample_rate)
}

/// Looks up externally rendered WAV files by exact sentence text.
#[derive(Debug, Clone, Default)]
pub struct PrerenderedAudio {
    files: BTreeMap<String, PathBuf>,
}

impl PrerenderedAudio {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: impl Into<String>, path: impl Into<PathBuf>) {
        self.files.insert(text.into(), path.into());
    }
}

impl SpeechSynthesizer for PrerenderedAudio {
    fn synthesize(&self, text: &str, _profile: &VoiceProfile, sample_rate: u32, _seed: u64) -> Result<AudioClip> {
        let path = self
            .files
            .get(text)
            .ok_or_else(|| Error::invalid("text", format!("no pre-rendered audio for {text:?}")))?;
        resample(&read_wav(path)?, sample_rate)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn steady(f0: f64) -> VoiceProfile {
        VoiceProfile {
            name: "steady".into(),
            f0_base: f0,
            f0_jitter: 0.0,
            formant_scale: 1.0,
            speaking_rate: 10.0,
        }
    }

    #[test]
    fn deterministic_and_bounded() {
        let p = child_profile(3);
        let a = synthesize("It's raining so we will plan some other day", &p, 16_000, 11).unwrap();
        let b = synthesize("It's raining so we will plan some other day", &p, 16_000, 11).unwrap();
        assert_eq!(a, b);
        assert!(a.peak() <= 0.9);
        let c = synthesize("It's raining so we will plan some other day", &p, 16_000, 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_text_gives_empty_clip() {
        assert!(synthesize("", &adult_profile(1), 16_000, 0).unwrap().is_empty());
    }

    #[test]
    fn invalid_inputs() {
        let mut p = steady(200.0);
        p.f0_base = 0.0;
        assert!(synthesize("a", &p, 16_000, 0).is_err());
        assert!(synthesize("a", &steady(200.0), 4000, 0).is_err());
    }

    #[test]
    fn duration_matches_phone_sequence() {
        let p = adult_profile(2);
        let text = "the quick brown fox";
        let clip = synthesize(text, &p, 16_000, 1).unwrap();
        let expected = text_to_phones(text, p.speaking_rate).total_duration();
        assert!((clip.duration_seconds() - expected).abs() <= 1.0 / 16_000.0);
    }

    #[test]
    fn demo_sentence_lasts_a_few_seconds() {
        for seed in 0..10 {
            for p in [child_profile(seed), adult_profile(seed)] {
                let d = text_to_phones("It's raining so we will plan some other day", p.speaking_rate)
                    .total_duration();
                assert!((2.0..=6.0).contains(&d), "{d}");
            }
        }
    }

    #[test]
    fn prerendered_lookup() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.wav");
        let clip = AudioClip::sine(200.0, 0.5, 0.5, 8000).unwrap();
        crate::audio::write_wav(&clip, &path).unwrap();
        let mut pre = PrerenderedAudio::new();
        pre.insert("hello", &path);
        let out = pre.synthesize("hello", &steady(100.0), 16_000, 0).unwrap();
        assert_eq!(out.len(), 8000);
        assert!(pre.synthesize("other", &steady(100.0), 16_000, 0).is_err());
    }
}
