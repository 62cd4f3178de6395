use crate::audio::AudioClip;
use crate::error::Result;
use crate::tts::{adult_profile, child_profile, synthesize, VoiceProfile};

/// Sentences used for the toy corpus; each is long enough for at least one
/// 1.6 s partial at the fastest toy speaking rate.
pub const SENTENCE_BANK: &[&str] = &[
    "It's raining so we will plan some other day",
    "The little dog ran across the green garden",
    "Please bring me the blue book from the shelf",
    "We made a sandcastle near the water today",
    "My brother likes to paint pictures of trees",
    "The bus was late again this cold morning",
    "Can you help me carry these heavy boxes home",
    "A bird sang outside my window all afternoon",
    "We should bake a cake for grandmother soon",
    "The moon looked very bright over the river",
    "I found a shiny stone under the old bridge",
    "Everyone laughed when the clown dropped his hat",
];

/// All utterances of one speaker.
#[derive(Debug, Clone)]
pub struct SpeakerClips {
    pub name: String,
    pub clips: Vec<AudioClip>,
}

#[derive(Debug, Clone)]
pub struct ToySpeaker {
    pub profile: VoiceProfile,
    pub is_child: bool,
    pub clips: Vec<AudioClip>,
}

impl ToySpeaker {
    pub fn name(&self) -> &str {
        &self.profile.name
    }

    /// The first `n` utterances (or all of them) as training input.
    pub fn head(&self, n: usize) -> SpeakerClips {
        SpeakerClips {
            name: self.profile.name.clone(),
            clips: self.clips.iter().take(n).cloned().collect(),
        }
    }

    /// Utterances from index `n` onwards.
    pub fn tail(&self, n: usize) -> SpeakerClips {
        SpeakerClips {
            name: self.profile.name.clone(),
            clips: self.clips.iter().skip(n).cloned().collect(),
        }
    }
}

/// `n_speakers` synthetic speakers alternating child / adult, each reading
/// `n_utterances` sentences from [`SENTENCE_BANK`].
pub fn toy_corpus(n_speakers: usize, n_utterances: usize, sample_rate: u32, seed: u64) -> Result<Vec<ToySpeaker>> {
    (0..n_speakers)
        .map(|s| {
            let is_child = s % 2 == 0;
            let profile_seed = seed.wrapping_mul(1000).wrapping_add(s as u64);
            let profile = if is_child {
                child_profile(profile_seed)
            } else {
                adult_profile(profile_seed)
            };
            let clips = (0..n_utterances)
                .map(|u| {
                    let text = SENTENCE_BANK[(s + u) % SENTENCE_BANK.len()];
                    let utt_seed = profile_seed.wrapping_mul(7919).wrapping_add(u as u64);
                    synthesize(text, &profile, sample_rate, utt_seed)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ToySpeaker {
                profile,
                is_child,
                clips,
            })
        })
        .collect()
}
