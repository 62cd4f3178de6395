//! Generalized end-to-end (GE2E) softmax loss over an N-speaker x M-utterance batch.
//!
//! `S(j,i,k) = w cos(e_ji, c_k) + b`, where `c_k` is the mean of speaker k's
//! embeddings except that, when `k == j`, `e_ji` itself is left out. Each
//! utterance contributes `-S(j,i,j) + ln sum_k exp S(j,i,k)`.

use serde::{Deserialize, Serialize};

use super::embedding::{norm, SpeakerEmbedding};
use crate::error::{Error, Result};

/// Smallest value the similarity scale may take after an update.
pub const MIN_SCALE: f64 = 1e-2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ge2eParams {
    pub w: f64,
    pub b: f64,
}

impl Default for Ge2eParams {
    fn default() -> Self {
        Self { w: 10.0, b: -5.0 }
    }
}

impl Ge2eParams {
    pub fn clamp_scale(&mut self) {
        if !(self.w >= MIN_SCALE) {
            self.w = MIN_SCALE;
        }
    }
}

/// Speaker-major batch of embedding vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBatch {
    n_speakers: usize,
    n_utterances: usize,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingBatch {
    /// `speakers[j][i]` is utterance `i` of speaker `j`.
    pub fn new(speakers: Vec<Vec<SpeakerEmbedding>>) -> Result<Self> {
        Self::from_vectors(
            speakers
                .into_iter()
                .map(|s| s.into_iter().map(Vec::from).collect())
                .collect(),
        )
    }

    /// Like [`new`](Self::new) but accepts vectors of any nonzero length.
    /// The loss only sees directions through the cosines, but centroids are
    /// plain means, so this is the domain the gradient is taken over.
    pub fn from_vectors(speakers: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let n = speakers.len();
        if n < 2 {
            return Err(Error::invalid("batch", format!("need at least 2 speakers, got {n}")));
        }
        let m = speakers[0].len();
        if m < 2 {
            return Err(Error::invalid(
                "batch",
                format!("need at least 2 utterances per speaker, got {m}"),
            ));
        }
        let dim = speakers[0][0].len();
        let mut vectors = Vec::with_capacity(n * m);
        for s in speakers {
            if s.len() != m {
                return Err(Error::invalid("batch", "speakers have different utterance counts"));
            }
            for v in s {
                if v.len() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: v.len() });
                }
                if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                    return Err(Error::NonFinite(i));
                }
                if norm(&v) == 0.0 {
                    return Err(Error::ZeroVector);
                }
                vectors.push(v);
            }
        }
        Ok(Self {
            n_speakers: n,
            n_utterances: m,
            dim,
            vectors,
        })
    }

    pub fn n_speakers(&self) -> usize {
        self.n_speakers
    }

    pub fn n_utterances(&self) -> usize {
        self.n_utterances
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, speaker: usize, utterance: usize) -> &[f64] {
        &self.vectors[speaker * self.n_utterances + utterance]
    }
}

/// Gradient of the loss. `embeddings` is speaker-major like the batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Ge2eGradient {
    pub embeddings: Vec<Vec<f64>>,
    pub w: f64,
    pub b: f64,
}

pub fn ge2e_loss(batch: &EmbeddingBatch, params: &Ge2eParams) -> Result<f64> {
    ge2e_loss_and_gradient(batch, params).map(|(l, _)| l)
}

struct Unit {
    dir: Vec<f64>,
    norm: f64,
}

fn unit(v: &[f64]) -> Result<Unit> {
    let n = norm(v);
    if n < 1e-12 {
        return Err(Error::ZeroVector);
    }
    Ok(Unit {
        dir: v.iter().map(|x| x / n).collect(),
        norm: n,
    })
}

/// Adds `scale * d cos(a, b) / d a` to `out`.
fn add_cos_grad(a: &Unit, b: &Unit, cos: f64, scale: f64, out: &mut [f64]) {
    let s = scale / a.norm;
    for ((o, bd), ad) in out.iter_mut().zip(&b.dir).zip(&a.dir) {
        *o += s * (bd - cos * ad);
    }
}

pub fn ge2e_loss_and_gradient(batch: &EmbeddingBatch, params: &Ge2eParams) -> Result<(f64, Ge2eGradient)> {
    let (n, m, d) = (batch.n_speakers, batch.n_utterances, batch.dim);
    let sums: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let mut s = vec![0.0; d];
            for i in 0..m {
                s.iter_mut().zip(batch.get(k, i)).for_each(|(a, b)| *a += b);
            }
            s
        })
        .collect();
    let centroids = sums
        .iter()
        .map(|s| unit(&s.iter().map(|x| x / m as f64).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;

    let mut loss = 0.0;
    let mut grad_e = vec![vec![0.0; d]; n * m];
    // dL/dc_k for the all-utterance centroids and, per speaker, the summed
    // gradient reaching the leave-one-out centroids.
    let mut grad_full = vec![vec![0.0; d]; n];
    let mut grad_own_total = vec![vec![0.0; d]; n];
    let mut grad_w = 0.0;
    let mut sims = vec![0.0; n];
    let mut cosines = vec![0.0; n];

    for j in 0..n {
        for i in 0..m {
            let e = unit(batch.get(j, i))?;
            let own: Vec<f64> = sums[j]
                .iter()
                .zip(batch.get(j, i))
                .map(|(s, x)| (s - x) / (m - 1) as f64)
                .collect();
            let own = unit(&own)?;
            for k in 0..n {
                let c = if k == j { &own } else { &centroids[k] };
                cosines[k] = crate::nn::dot(&e.dir, &c.dir);
                sims[k] = params.w * cosines[k] + params.b;
            }
            let max = sims.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = sims.iter().map(|s| (s - max).exp()).sum();
            loss += -sims[j] + max + z.ln();

            let idx = j * m + i;
            for k in 0..n {
                let g = (sims[k] - max).exp() / z - if k == j { 1.0 } else { 0.0 };
                grad_w += g * cosines[k];
                let c = if k == j { &own } else { &centroids[k] };
                let gs = g * params.w;
                add_cos_grad(&e, c, cosines[k], gs, &mut grad_e[idx]);
                let target = if k == j { &mut grad_own_total[k] } else { &mut grad_full[k] };
                add_cos_grad(c, &e, cosines[k], gs, target);
                if k == j {
                    // e_ji is not part of its own leave-one-out centroid: undo
                    // the share the distribution below would give it.
                    let mut tmp = vec![0.0; d];
                    add_cos_grad(c, &e, cosines[k], gs, &mut tmp);
                    grad_e[idx]
                        .iter_mut()
                        .zip(&tmp)
                        .for_each(|(a, t)| *a -= t / (m - 1) as f64);
                }
            }
        }
    }
    for k in 0..n {
        for i in 0..m {
            let g = &mut grad_e[k * m + i];
            for q in 0..d {
                g[q] += grad_full[k][q] / m as f64 + grad_own_total[k][q] / (m - 1) as f64;
            }
        }
    }
    if !loss.is_finite() {
        return Err(Error::Training(format!("non-finite GE2E loss {loss}")));
    }
    Ok((
        loss,
        Ge2eGradient {
            embeddings: grad_e,
            w: grad_w,
            // Every softmax row sums to one, so the bias cancels out of the loss.
            b: 0.0,
        },
    ))
}
