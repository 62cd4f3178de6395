//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code paths it is used to check.

#![allow(dead_code)]

use std::f64::consts::TAU;

/// Magnitude of the Hann-windowed DTFT of `x` at `freq` Hz, by direct summation.
pub fn dtft_mag(x: &[f64], sample_rate: f64, freq: f64) -> f64 {
    let n = x.len() as f64;
    let (mut re, mut im) = (0.0, 0.0);
    for (i, &v) in x.iter().enumerate() {
        let w = 0.5 - 0.5 * (TAU * i as f64 / n).cos();
        let ph = TAU * freq * i as f64 / sample_rate;
        re += v * w * ph.cos();
        im -= v * w * ph.sin();
    }
    (re * re + im * im).sqrt()
}

/// Frequency with the largest DTFT magnitude on a grid over `[lo, hi]`.
pub fn dtft_argmax(x: &[f64], sample_rate: f64, lo: f64, hi: f64, step: f64) -> f64 {
    let mut best = (lo, f64::MIN);
    let mut f = lo;
    while f <= hi {
        let m = dtft_mag(x, sample_rate, f);
        if m > best.1 {
            best = (f, m);
        }
        f += step;
    }
    best.0
}

/// Dominant frequency: coarse grid search followed by a fine search.
pub fn dominant_frequency(x: &[f64], sample_rate: f64, lo: f64, hi: f64) -> f64 {
    // Decimate the coarse scan for speed; the fine scan uses all samples.
    let coarse = dtft_argmax(x, sample_rate, lo, hi, 5.0);
    dtft_argmax(x, sample_rate, (coarse - 6.0).max(lo), (coarse + 6.0).min(hi), 0.05)
}

/// Normalised autocorrelation at `lag`.
pub fn autocorr(x: &[f64], lag: usize) -> f64 {
    if lag >= x.len() {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let d: Vec<f64> = x.iter().map(|v| v - mean).collect();
    let num: f64 = d[..d.len() - lag].iter().zip(&d[lag..]).map(|(a, b)| a * b).sum();
    let den: f64 = d.iter().map(|v| v * v).sum();
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

pub fn sine(freq: f64, seconds: f64, sample_rate: u32) -> Vec<f64> {
    let n = (seconds * sample_rate as f64).round() as usize;
    (0..n)
        .map(|i| 0.5 * (TAU * freq * i as f64 / sample_rate as f64).sin())
        .collect()
}

/// Horizontal shift `d` in `-max..=max` maximising the normalised
/// cross-correlation of `moved(x + d, y)` with `orig(x, y)` over a window.
pub fn best_horizontal_shift(
    orig: &image::RgbImage,
    moved: &image::RgbImage,
    window: (u32, u32, u32, u32),
    max: i64,
) -> i64 {
    let gray = |img: &image::RgbImage, x: i64, y: i64| {
        let p = img.get_pixel(x as u32, y as u32).0;
        p.iter().map(|&c| f64::from(c)).sum::<f64>()
    };
    let (x0, y0, x1, y1) = window;
    let (x0, y0, x1, y1) = (i64::from(x0), i64::from(y0), i64::from(x1), i64::from(y1));
    let mut best = (0, f64::MIN);
    for d in -max..=max {
        let (mut num, mut energy) = (0.0, 0.0);
        for y in y0..=y1 {
            for x in x0..=x1 {
                let m = gray(moved, x + d, y);
                num += m * gray(orig, x, y);
                energy += m * m;
            }
        }
        let score = num / energy.sqrt();
        if score > best.1 {
            best = (d, score);
        }
    }
    best.0
}

/// GE2E loss by direct transcription: softmax variant, leave-one-out
/// centroid for the utterance's own speaker.
pub fn ge2e_reference(batch: &[Vec<Vec<f64>>], w: f64, b: f64) -> f64 {
    let cos = |a: &[f64], c: &[f64]| {
        let dot: f64 = a.iter().zip(c).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nc = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        dot / (na * nc)
    };
    let mean = |vs: Vec<&Vec<f64>>| {
        let mut m = vec![0.0; vs[0].len()];
        for v in &vs {
            for (a, x) in m.iter_mut().zip(v.iter()) {
                *a += x / vs.len() as f64;
            }
        }
        m
    };
    let mut loss = 0.0;
    for (j, spk) in batch.iter().enumerate() {
        for (i, e) in spk.iter().enumerate() {
            let logits: Vec<f64> = batch
                .iter()
                .enumerate()
                .map(|(k, other)| {
                    let c = if k == j {
                        mean(other.iter().enumerate().filter(|(m, _)| *m != i).map(|(_, v)| v).collect())
                    } else {
                        mean(other.iter().collect())
                    };
                    w * cos(e, &c) + b
                })
                .collect();
            let lse = logits.iter().map(|l| l.exp()).sum::<f64>().ln();
            loss += lse - logits[j];
        }
    }
    loss
}
