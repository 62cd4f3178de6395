//! Source-filter synthesis: a band-limited glottal pulse train through two
//! cascaded resonators for voiced phones, filtered noise for unvoiced ones.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::phones::{PhoneClass, PhoneSequence};
use super::profile::VoiceProfile;

/// Output peak after normalisation; stays under the 0.9 clipping guard.
pub const PEAK_LEVEL: f64 = 0.85;

/// (F1, F2, gain) per class in Hz before `formant_scale`. Textbook adult
/// vowel averages; unvoiced phones use a single high band.
fn targets(class: PhoneClass) -> (f64, f64, f64) {
    match class {
        PhoneClass::VowelA => (730.0, 1090.0, 1.0),
        PhoneClass::VowelE => (530.0, 1840.0, 1.0),
        PhoneClass::VowelI => (270.0, 2290.0, 0.9),
        PhoneClass::VowelO => (570.0, 840.0, 1.0),
        PhoneClass::VowelU => (300.0, 870.0, 0.9),
        PhoneClass::Voiced => (250.0, 1200.0, 0.35),
        PhoneClass::Unvoiced => (3800.0, 5200.0, 0.3),
        PhoneClass::Pause => (500.0, 1500.0, 0.0),
    }
}

/// Two-pole resonator normalised to unit gain at its centre frequency.
#[derive(Default)]
struct Resonator {
    y1: f64,
    y2: f64,
}

impl Resonator {
    fn tick(&mut self, x: f64, freq: f64, bandwidth: f64, sr: f64) -> f64 {
        let r = (-PI * bandwidth / sr).exp();
        let theta = TAU * freq / sr;
        let b1 = 2.0 * r * theta.cos();
        let b2 = -r * r;
        let gain = (1.0 - r) * (1.0 - 2.0 * r * (2.0 * theta).cos() + r * r).sqrt();
        let y = gain * x + b1 * self.y1 + b2 * self.y2;
        self.y2 = self.y1;
        self.y1 = y;
        y
    }
}

/// Renders `phones` to samples. Deterministic in (phones, profile, seed).
pub(crate) fn render(phones: &PhoneSequence, profile: &VoiceProfile, sample_rate: u32, seed: u64) -> Vec<f64> {
    let sr = f64::from(sample_rate);
    let nyquist = sr / 2.0;
    let total = (phones.total_duration() * sr).round() as usize;
    if total == 0 {
        return Vec::new();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Per-sample phone index from cumulative boundaries.
    let mut class_at = Vec::with_capacity(total);
    let mut t_end = 0.0;
    for p in &phones.phones {
        t_end += p.duration_s;
        let end = ((t_end * sr).round() as usize).min(total);
        class_at.resize(end.max(class_at.len()), p.class);
    }
    class_at.resize(total, PhoneClass::Pause);

    // Control smoothing: 8 ms for gains, 15 ms for formant glides.
    let a_gain = 1.0 - (-1.0 / (0.008 * sr)).exp();
    let a_formant = 1.0 - (-1.0 / (0.015 * sr)).exp();

    let mut f0 = profile.f0_base;
    let mut phase = 0.0f64;
    let (mut f1, mut f2, _) = targets(class_at[0]);
    f1 *= profile.formant_scale;
    f2 *= profile.formant_scale;
    let (mut voiced_gain, mut noise_gain) = (0.0, 0.0);
    let mut r1 = Resonator::default();
    let mut r2 = Resonator::default();
    let mut rn = Resonator::default();

    let mut out = Vec::with_capacity(total);
    for &class in &class_at {
        let (t1, t2, g) = targets(class);
        let target_voiced = if class.is_voiced() { g } else { 0.0 };
        let target_noise = if class == PhoneClass::Unvoiced { g } else { 0.0 };
        voiced_gain += a_gain * (target_voiced - voiced_gain);
        noise_gain += a_gain * (target_noise - noise_gain);
        if class.is_voiced() || class == PhoneClass::Pause {
            f1 += a_formant * ((t1 * profile.formant_scale).min(nyquist * 0.9) - f1);
            f2 += a_formant * ((t2 * profile.formant_scale).min(nyquist * 0.9) - f2);
        }

        // Band-limited sawtooth-like glottal source with 1/k harmonic rolloff.
        let harmonics = ((nyquist * 0.9) / f0).floor().max(1.0) as usize;
        let mut source = 0.0;
        for k in 1..=harmonics {
            source += (TAU * k as f64 * phase).sin() / k as f64;
        }
        phase += f0 / sr;
        if phase >= 1.0 {
            phase -= 1.0;
            f0 = profile.f0_base * (1.0 + profile.f0_jitter * rng.random_range(-1.0..1.0));
        }
        let noise: f64 = rng.random_range(-1.0..1.0);

        let voiced = r2.tick(r1.tick(source, f1, 80.0, sr), f2, 120.0, sr);
        let hiss_centre = (4500.0 * profile.formant_scale).min(nyquist * 0.85);
        let hiss = rn.tick(noise, hiss_centre, 2500.0, sr);
        out.push(voiced_gain * voiced * 4.0 + noise_gain * hiss * 2.0);
    }

    let peak = out.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = PEAK_LEVEL / peak;
        out.iter_mut().for_each(|v| *v *= scale);
    }
    out
}
