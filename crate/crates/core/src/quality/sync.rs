use crate::audio::AudioClip;
use crate::error::{Error, Result};
use crate::landmarks::{mouth_drive, mouth_opening, speech_envelope, ArticulationConfig, LandmarkSequence};

/// Pearson correlation; errors when either series is (numerically) constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two samples"));
    }
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    let scale = |m: f64| 1e-24 * (1.0 + m * m) * n;
    if saa <= scale(ma) {
        return Err(Error::UndefinedCorrelation("first series is constant"));
    }
    if sbb <= scale(mb) {
        return Err(Error::UndefinedCorrelation("second series is constant"));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// Correlation between per-frame mouth opening and the speech envelope the
/// mouth is meant to follow (RMS, low-passed with the default articulation
/// time constant, sampled at frame centres).
pub fn lip_sync_score(seq: &LandmarkSequence, audio: &AudioClip) -> Result<f64> {
    let opening: Vec<f64> = seq.frames().iter().map(|f| mouth_opening(f)).collect();
    let env = speech_envelope(audio)?;
    let drive = mouth_drive(&env, seq.fps(), seq.len(), ArticulationConfig::default().smoothing_tau_s);
    pearson(&opening, &drive)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::FeatureConfig;
    use crate::landmarks::{articulate_clip, LandmarkTemplate};
    use crate::tts::{child_profile, synthesize};
    use proptest::prelude::*;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn speech() -> AudioClip {
        synthesize("It's raining so we will plan some other day", &child_profile(0), 16_000, 0).unwrap()
    }

    fn procedural(audio: &AudioClip) -> LandmarkSequence {
        articulate_clip(
            audio,
            &LandmarkTemplate::canonical(),
            25.0,
            &FeatureConfig::default(),
            &ArticulationConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn procedural_animation_is_in_sync() {
        let a = speech();
        assert!(lip_sync_score(&procedural(&a), &a).unwrap() >= 0.99);
    }

    #[test]
    fn shuffled_frames_lose_sync() {
        let a = speech();
        let seq = procedural(&a);
        for s in 0..5 {
            let mut frames = seq.frames().to_vec();
            frames.shuffle(&mut ChaCha8Rng::seed_from_u64(s));
            let r = lip_sync_score(&seq.with_frames(frames).unwrap(), &a).unwrap();
            assert!(r.abs() < 0.3, "seed {s}: {r}");
        }
    }

    #[test]
    fn silence_is_undefined() {
        let a = AudioClip::silence(2.0, 16_000).unwrap();
        let seq = procedural(&a);
        assert!(matches!(lip_sync_score(&seq, &a), Err(Error::UndefinedCorrelation(_))));
    }

    proptest! {
        #[test]
        fn pearson_ignores_positive_affine_maps(
            xs in prop::collection::vec(-10.0f64..10.0, 3..40),
            scale in 0.01f64..100.0,
            shift in -50.0f64..50.0,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.sin() + i as f64 * 0.1).collect();
            if let (Ok(r), Ok(r2)) = (pearson(&xs, &ys), pearson(&xs.iter().map(|x| scale * x + shift).collect::<Vec<_>>(), &ys)) {
                prop_assert!((r - r2).abs() < 1e-9);
            }
        }
    }
}
