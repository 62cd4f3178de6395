use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Source-filter voice parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiceProfile {
    pub name: String,
    /// Mean fundamental frequency in Hz.
    pub f0_base: f64,
    /// Per-period random f0 deviation as a fraction of `f0_base`.
    pub f0_jitter: f64,
    /// Multiplier applied to every formant frequency.
    pub formant_scale: f64,
    /// Phones per second.
    pub speaking_rate: f64,
}

/// Configuration defaults for the two toy populations. The child ranges sit
/// strictly above the adult ones.
pub mod ranges {
    pub const CHILD_F0: (f64, f64) = (250.0, 320.0);
    pub const ADULT_F0: (f64, f64) = (95.0, 170.0);
    pub const CHILD_FORMANT: (f64, f64) = (1.15, 1.30);
    pub const ADULT_FORMANT: (f64, f64) = (0.88, 1.05);
    pub const CHILD_RATE: (f64, f64) = (10.5, 12.5);
    pub const ADULT_RATE: (f64, f64) = (11.5, 13.5);
    pub const JITTER: (f64, f64) = (0.004, 0.012);
}

impl VoiceProfile {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("f0_base", self.f0_base),
            ("formant_scale", self.formant_scale),
            ("speaking_rate", self.speaking_rate),
        ];
        for (field, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(field, format!("{v} must be > 0")));
            }
        }
        if !(self.f0_jitter.is_finite() && (0.0..0.5).contains(&self.f0_jitter)) {
            return Err(Error::invalid("f0_jitter", format!("{} must be in [0, 0.5)", self.f0_jitter)));
        }
        Ok(())
    }

    /// `key=value` lines, one field per line.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "name={}", self.name);
        let _ = writeln!(s, "f0_base={}", self.f0_base);
        let _ = writeln!(s, "f0_jitter={}", self.f0_jitter);
        let _ = writeln!(s, "formant_scale={}", self.formant_scale);
        let _ = writeln!(s, "speaking_rate={}", self.speaking_rate);
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut name = None;
        let mut nums = [None; 4];
        const KEYS: [&str; 4] = ["f0_base", "f0_jitter", "formant_scale", "speaking_rate"];
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(format!("profile line {}", n + 1), "expected key=value"))?;
            let (k, v) = (k.trim(), v.trim());
            if k == "name" {
                name = Some(v.to_string());
            } else if let Some(i) = KEYS.iter().position(|key| *key == k) {
                nums[i] = Some(v.parse::<f64>().map_err(|e| {
                    Error::parse(format!("profile line {}", n + 1), e.to_string())
                })?);
            } else {
                return Err(Error::parse(format!("profile line {}", n + 1), format!("unknown key {k}")));
            }
        }
        let get = |i: usize| nums[i].ok_or_else(|| Error::parse("profile", format!("missing {}", KEYS[i])));
        let profile = Self {
            name: name.ok_or_else(|| Error::parse("profile", "missing name"))?,
            f0_base: get(0)?,
            f0_jitter: get(1)?,
            formant_scale: get(2)?,
            speaking_rate: get(3)?,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn draw(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    rng.random_range(lo..hi)
}

fn seeded_profile(prefix: &str, seed: u64, f0: (f64, f64), formant: (f64, f64), rate: (f64, f64)) -> VoiceProfile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7e57_u64.rotate_left(prefix.len() as u32));
    VoiceProfile {
        name: format!("{prefix}-{seed}"),
        f0_base: draw(&mut rng, f0),
        f0_jitter: draw(&mut rng, ranges::JITTER),
        formant_scale: draw(&mut rng, formant),
        speaking_rate: draw(&mut rng, rate),
    }
}

pub fn child_profile(seed: u64) -> VoiceProfile {
    seeded_profile("child", seed, ranges::CHILD_F0, ranges::CHILD_FORMANT, ranges::CHILD_RATE)
}

pub fn adult_profile(seed: u64) -> VoiceProfile {
    seeded_profile("adult", seed, ranges::ADULT_F0, ranges::ADULT_FORMANT, ranges::ADULT_RATE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn child_pitch_is_above_adult_pitch() {
        for seed in 0..200 {
            assert!(child_profile(seed).f0_base > adult_profile(seed).f0_base);
        }
    }

    #[test]
    fn same_seed_same_profile() {
        assert_eq!(child_profile(9), child_profile(9));
        assert_ne!(child_profile(9), child_profile(10));
    }

    #[test]
    fn hundred_draws_are_distinct_and_valid() {
        let mut names = HashSet::new();
        for seed in 0..100 {
            for p in [child_profile(seed), adult_profile(seed)] {
                p.validate().unwrap();
                assert!(names.insert(p.name.clone()));
            }
        }
        assert_eq!(names.len(), 200);
    }

    #[test]
    fn text_round_trip() {
        let p = adult_profile(4);
        assert_eq!(VoiceProfile::parse(&p.to_text()).unwrap(), p);
        assert!(VoiceProfile::parse("name=x\nf0_base=100\n").is_err());
        assert!(VoiceProfile::parse("bogus").is_err());
        let bad = p.to_text().replace(&format!("speaking_rate={}", p.speaking_rate), "speaking_rate=0");
        assert!(VoiceProfile::parse(&bad).is_err());
    }
}
