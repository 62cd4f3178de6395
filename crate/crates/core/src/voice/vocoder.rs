//! Phase vocoder with identity phase locking.
//!
//! Analysis frames are taken at a variable hop `SYNTH_HOP / factor(t)` and
//! resynthesised at the fixed `SYNTH_HOP`. Spectral peaks carry their phase
//! forward from the measured instantaneous frequency; the remaining bins keep
//! their analysis phase offset relative to the peak that owns them.

use std::f64::consts::{PI, TAU};

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::{fill_hermitian, Window};

pub const FRAME_LEN: usize = 1024;
pub const SYNTH_HOP: usize = 256;

fn wrap_phase(p: f64) -> f64 {
    p - TAU * ((p + PI) / TAU).floor()
}

/// Indices of local magnitude maxima (over +/-2 bins) and, for every bin, the
/// peak whose region contains it. Regions split at the minimum between peaks.
fn peak_regions(mag: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let n = mag.len();
    let mut peaks = Vec::new();
    for b in 0..n {
        let lo = b.saturating_sub(2);
        let hi = (b + 2).min(n - 1);
        if (lo..=hi).all(|j| j == b || mag[b] > mag[j]) {
            peaks.push(b);
        }
    }
    if peaks.is_empty() {
        peaks.push(0);
    }
    let mut owner = vec![peaks[0]; n];
    for w in peaks.windows(2) {
        let (p, q) = (w[0], w[1]);
        let split = (p..=q)
            .min_by(|&a, &b| mag[a].total_cmp(&mag[b]))
            .unwrap_or(p);
        owner[p..split].fill(p);
        owner[split..=q].fill(q);
    }
    if let Some(&last) = peaks.last() {
        owner[last..].fill(last);
    }
    (peaks, owner)
}

/// Runs the vocoder with a stretch factor evaluated at each analysis frame
/// centre (input time in seconds) and returns exactly `out_len` samples.
pub(crate) fn vocode(
    x: &[f64],
    sample_rate: u32,
    factor_at: impl Fn(f64) -> f64,
    out_len: usize,
) -> Vec<f64> {
    let n = FRAME_LEN;
    let half = n / 2;
    let bins = half + 1;
    let sr = f64::from(sample_rate);
    let win = Window::Hann.coefficients(n);

    // Pad so that analysis frame k is centred on input sample a_k.
    let mut padded = vec![0.0; half];
    padded.extend_from_slice(x);
    padded.resize(x.len() + half + n, 0.0);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(n);
    let ifft = planner.plan_fft_inverse(n);

    let mut out = vec![0.0; out_len + n + SYNTH_HOP];
    let mut norm = vec![0.0; out.len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut prev_analysis = vec![0.0; bins];
    let mut synth_phase = vec![0.0; bins];
    let mut prev_pos = 0usize;
    let mut pos = 0.0f64;

    let mut k = 0usize;
    loop {
        let synth_start = k * SYNTH_HOP;
        if synth_start >= out_len + half {
            break;
        }
        let a = (pos.round() as usize).min(x.len());
        for i in 0..n {
            buf[i] = Complex64::new(padded[a + i] * win[i], 0.0);
        }
        fft.process(&mut buf);
        let mag: Vec<f64> = buf[..bins].iter().map(|c| c.norm()).collect();
        let phase: Vec<f64> = buf[..bins].iter().map(|c| c.arg()).collect();

        if k == 0 {
            synth_phase.copy_from_slice(&phase);
        } else {
            let da = a.saturating_sub(prev_pos).max(1) as f64;
            let (peaks, owner) = peak_regions(&mag);
            let mut locked = synth_phase.clone();
            for &p in &peaks {
                let omega = TAU * p as f64 / n as f64;
                let dev = wrap_phase(phase[p] - prev_analysis[p] - omega * da);
                let inst = omega + dev / da;
                locked[p] = synth_phase[p] + inst * SYNTH_HOP as f64;
            }
            for b in 0..bins {
                let p = owner[b];
                if p != b {
                    locked[b] = locked[p] + phase[b] - phase[p];
                }
            }
            synth_phase = locked;
        }
        prev_analysis.copy_from_slice(&phase);
        prev_pos = a;

        let half_spec: Vec<Complex64> = (0..bins)
            .map(|b| Complex64::from_polar(mag[b], synth_phase[b]))
            .collect();
        fill_hermitian(&half_spec, &mut buf);
        ifft.process(&mut buf);
        for i in 0..n {
            let idx = synth_start + i;
            if idx >= out.len() {
                break;
            }
            out[idx] += buf[i].re / n as f64 * win[i];
            norm[idx] += win[i] * win[i];
        }

        let factor = factor_at(a as f64 / sr).max(1e-3);
        pos += SYNTH_HOP as f64 / factor;
        if pos.round() as usize > x.len() {
            pos = x.len() as f64;
        }
        k += 1;
    }

    // Floor the normaliser near the zero-overlap edges.
    let steady: f64 = (0..n).step_by(SYNTH_HOP).map(|i| win[i] * win[i]).sum();
    (0..out_len)
        .map(|i| {
            let idx = i + half;
            let w = norm[idx].max(steady * 1e-3);
            out[idx] / w
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_wrap_range() {
        for p in [-10.0, -PI, 0.0, 3.0, PI, 7.5] {
            let w = wrap_phase(p);
            assert!((-PI..PI).contains(&w), "{p} -> {w}");
            assert!(((p - w) / TAU - ((p - w) / TAU).round()).abs() < 1e-12);
        }
    }

    #[test]
    fn every_bin_is_owned_by_a_peak() {
        let mag = vec![0.0, 1.0, 5.0, 1.0, 0.5, 0.2, 3.0, 4.0, 1.0, 0.1];
        let (peaks, owner) = peak_regions(&mag);
        assert_eq!(peaks, vec![2, 7]);
        assert_eq!(owner, vec![2, 2, 2, 2, 2, 7, 7, 7, 7, 7]);
    }
}
