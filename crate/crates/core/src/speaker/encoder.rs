use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::corpus::SpeakerClips;
use super::embedding::{centroid, cosine_similarity, SpeakerEmbedding};
use super::ge2e::{ge2e_loss_and_gradient, EmbeddingBatch, Ge2eParams};
use crate::audio::{features, AudioClip, FeatureConfig, FeatureSequence};
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, sgd_step, Elman, Linear, Parameters, Standardizer};

pub const PARTIAL_WINDOW_S: f64 = 1.6;
pub const PARTIAL_HOP_S: f64 = 0.8;

/// Splits `clip` into overlapping fixed-length windows and extracts features
/// from each. The count is `floor((len - window) / hop) + 1` in samples.
pub fn segment_partials(
    clip: &AudioClip,
    window_s: f64,
    hop_s: f64,
    cfg: &FeatureConfig,
) -> Result<Vec<FeatureSequence>> {
    partial_clips(clip, window_s, hop_s)?
        .iter()
        .map(|p| features(p, cfg))
        .collect()
}

pub fn partial_clips(clip: &AudioClip, window_s: f64, hop_s: f64) -> Result<Vec<AudioClip>> {
    if !(window_s > 0.0 && hop_s > 0.0) {
        return Err(Error::invalid("window", "window and hop must be positive"));
    }
    let sr = f64::from(clip.sample_rate());
    let win = (window_s * sr).round() as usize;
    let hop = ((hop_s * sr).round() as usize).max(1);
    if clip.len() < win {
        return Err(Error::TooShort {
            needed: format!("{window_s} s"),
            got: format!("{:.3} s", clip.duration_seconds()),
        });
    }
    let count = (clip.len() - win) / hop + 1;
    Ok((0..count).map(|k| clip.slice(k * hop, win)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub features: FeatureConfig,
    pub hidden: usize,
    pub embedding_dim: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    pub window_s: f64,
    pub hop_s: f64,
    pub seed: u64,
    pub initial: Ge2eParams,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            hidden: 24,
            embedding_dim: 16,
            epochs: 200,
            learning_rate: 0.05,
            clip_norm: 3.0,
            window_s: PARTIAL_WINDOW_S,
            hop_s: PARTIAL_HOP_S,
            seed: 0,
            initial: Ge2eParams::default(),
        }
    }
}

/// Recurrent speaker encoder: standardised log-mel frames through an Elman
/// layer, mean-pooled over time, projected and L2-normalised.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderModel {
    pub config: EncoderConfig,
    pub standardizer: Standardizer,
    pub rnn: Elman,
    pub projection: Linear,
    pub ge2e: Ge2eParams,
}

impl Parameters for EncoderModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.rnn.tensors();
        v.extend(self.projection.tensors());
        v.push(std::slice::from_ref(&self.ge2e.w));
        v.push(std::slice::from_ref(&self.ge2e.b));
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.rnn.tensors_mut();
        v.extend(self.projection.tensors_mut());
        v.push(std::slice::from_mut(&mut self.ge2e.w));
        v.push(std::slice::from_mut(&mut self.ge2e.b));
        v
    }
}

struct Trace {
    xs: Vec<Vec<f64>>,
    hs: Vec<Vec<f64>>,
    pooled: Vec<f64>,
    z: Vec<f64>,
}

impl EncoderModel {
    pub fn new(config: EncoderConfig, standardizer: Standardizer) -> Result<Self> {
        if standardizer.dim() != config.features.dim() {
            return Err(Error::DimensionMismatch {
                expected: config.features.dim(),
                got: standardizer.dim(),
            });
        }
        if config.hidden == 0 || config.embedding_dim == 0 {
            return Err(Error::invalid("encoder", "hidden and embedding sizes must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let rnn = Elman::new(config.features.dim(), config.hidden, &mut rng);
        let projection = Linear::new(config.hidden, config.embedding_dim, &mut rng);
        Ok(Self {
            ge2e: config.initial,
            config,
            standardizer,
            rnn,
            projection,
        })
    }

    fn zero_grad(&self) -> Self {
        let mut g = self.clone();
        g.fill(0.0);
        g
    }

    fn check_features(&self, f: &FeatureSequence) -> Result<()> {
        if f.is_empty() {
            return Err(Error::Empty("feature sequence"));
        }
        if f.dim() != self.standardizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.standardizer.dim(),
                got: f.dim(),
            });
        }
        Ok(())
    }

    fn trace(&self, f: &FeatureSequence) -> Trace {
        let xs: Vec<Vec<f64>> = f.rows.iter().map(|r| self.standardizer.apply(r)).collect();
        let hs = self.rnn.forward(&xs);
        let mut pooled = vec![0.0; self.rnn.n_hidden];
        for h in &hs {
            pooled.iter_mut().zip(h).for_each(|(p, v)| *p += v);
        }
        pooled.iter_mut().for_each(|p| *p /= hs.len() as f64);
        let z = self.projection.forward(&pooled);
        Trace { xs, hs, pooled, z }
    }

    /// Embedding of one feature sequence (normally a single partial).
    pub fn embed(&self, f: &FeatureSequence) -> Result<SpeakerEmbedding> {
        self.check_features(f)?;
        SpeakerEmbedding::normalize(self.trace(f).z)
    }

    /// Renormalised mean of the embeddings of every partial of `clip`.
    pub fn embed_clip(&self, clip: &AudioClip) -> Result<SpeakerEmbedding> {
        let partials = segment_partials(clip, self.config.window_s, self.config.hop_s, &self.config.features)?;
        let embs = partials.iter().map(|p| self.embed(p)).collect::<Result<Vec<_>>>()?;
        centroid(&embs)
    }

    /// Accumulates into `grad` the parameter gradient given `dL/de` for the
    /// unit embedding of `f`.
    fn backward(&self, t: &Trace, d_embedding: &[f64], grad: &mut EncoderModel) {
        let zn = super::embedding::norm(&t.z);
        let e: Vec<f64> = t.z.iter().map(|v| v / zn).collect();
        let proj: f64 = e.iter().zip(d_embedding).map(|(a, b)| a * b).sum();
        let dz: Vec<f64> = d_embedding
            .iter()
            .zip(&e)
            .map(|(g, ev)| (g - ev * proj) / zn)
            .collect();
        let d_pooled = self.projection.backward(&t.pooled, &dz, &mut grad.projection);
        let scale = 1.0 / t.hs.len() as f64;
        let d_step: Vec<f64> = d_pooled.iter().map(|v| v * scale).collect();
        let dhs = vec![d_step; t.hs.len()];
        self.rnn.backward(&t.xs, &t.hs, &dhs, &mut grad.rnn);
    }

    /// GE2E loss of `batch[j][i]` (speaker j, partial i) and its gradient
    /// with respect to every parameter, including the similarity scale.
    pub fn loss_and_gradient(&self, batch: &[Vec<FeatureSequence>]) -> Result<(f64, EncoderModel)> {
        let flat: Vec<&FeatureSequence> = batch.iter().flatten().collect();
        for f in &flat {
            self.check_features(f)?;
        }
        let traces: Vec<Trace> = flat.par_iter().map(|f| self.trace(f)).collect();
        let m = batch.first().map_or(0, Vec::len);
        let vectors: Vec<Vec<Vec<f64>>> = traces.chunks(m.max(1)).map(|c| c.iter().map(|t| t.z.clone()).collect()).collect();
        // The loss is taken on unit embeddings; normalisation is part of the model.
        let units: Vec<Vec<Vec<f64>>> = vectors
            .into_iter()
            .map(|s| {
                s.into_iter()
                    .map(|z| SpeakerEmbedding::normalize(z).map(Vec::from))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        let eb = EmbeddingBatch::from_vectors(units)?;
        let (loss, g) = ge2e_loss_and_gradient(&eb, &self.ge2e)?;

        let partial_grads: Vec<EncoderModel> = traces
            .par_iter()
            .zip(g.embeddings.par_iter())
            .map(|(t, de)| {
                let mut grad = self.zero_grad();
                self.backward(t, de, &mut grad);
                grad
            })
            .collect();
        let mut grad = self.zero_grad();
        for pg in &partial_grads {
            grad.accumulate(pg);
        }
        grad.ge2e = Ge2eParams { w: g.w, b: g.b };
        Ok((loss, grad))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self)?;
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        if model.rnn.n_in != model.standardizer.dim() || model.projection.n_in != model.rnn.n_hidden {
            return Err(Error::parse(path.display().to_string(), "inconsistent layer sizes"));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingReport {
    /// Loss before each update, followed by the loss after the last one.
    pub losses: Vec<f64>,
    pub partials_per_speaker: usize,
}

impl TrainingReport {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().unwrap()
    }
}

fn partial_features(speaker: &SpeakerClips, cfg: &EncoderConfig) -> Result<Vec<FeatureSequence>> {
    let mut out = Vec::new();
    for clip in &speaker.clips {
        out.extend(segment_partials(clip, cfg.window_s, cfg.hop_s, &cfg.features)?);
    }
    Ok(out)
}

/// Full-batch gradient descent on the GE2E loss. Every speaker contributes
/// the same number of partials `M` (the smallest count over speakers), chosen
/// evenly across its utterances.
pub fn train_encoder(corpus: &[SpeakerClips], config: &EncoderConfig) -> Result<(EncoderModel, TrainingReport)> {
    if corpus.len() < 4 {
        return Err(Error::invalid("corpus", format!("need at least 4 speakers, got {}", corpus.len())));
    }
    if let Some(s) = corpus.iter().find(|s| s.clips.len() < 4) {
        return Err(Error::invalid(
            "corpus",
            format!("speaker {} has {} utterances, need at least 4", s.name, s.clips.len()),
        ));
    }
    let per_speaker = corpus
        .par_iter()
        .map(|s| partial_features(s, config))
        .collect::<Result<Vec<_>>>()?;
    let m = per_speaker.iter().map(Vec::len).min().unwrap_or(0);
    let batch: Vec<Vec<FeatureSequence>> = per_speaker
        .into_iter()
        .map(|all| (0..m).map(|i| all[i * all.len() / m].clone()).collect())
        .collect();
    let standardizer = Standardizer::fit(batch.iter().flatten().flat_map(|f| f.rows.iter()))?;
    let mut model = EncoderModel::new(config.clone(), standardizer)?;

    let mut losses = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let (loss, mut grad) = model.loss_and_gradient(&batch)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("loss diverged at epoch {epoch}")));
        }
        losses.push(loss);
        clip_global_norm(&mut grad, config.clip_norm);
        sgd_step(&mut model, &grad, config.learning_rate);
        model.ge2e.clamp_scale();
    }
    let (loss, _) = model.loss_and_gradient(&batch)?;
    losses.push(loss);
    Ok((
        model,
        TrainingReport {
            losses,
            partials_per_speaker: m,
        },
    ))
}

/// Mean pairwise cosine between partial embeddings of the same speaker and of
/// different speakers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separation {
    pub same_speaker: f64,
    pub cross_speaker: f64,
}

impl Separation {
    pub fn margin(&self) -> f64 {
        self.same_speaker - self.cross_speaker
    }
}

pub fn embedding_separation(model: &EncoderModel, speakers: &[SpeakerClips]) -> Result<Separation> {
    let embs = speakers
        .iter()
        .map(|s| {
            partial_features(s, &model.config)?
                .iter()
                .map(|f| model.embed(f))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut same, mut n_same, mut cross, mut n_cross) = (0.0, 0usize, 0.0, 0usize);
    for (a, ea) in embs.iter().enumerate() {
        for (b, eb) in embs.iter().enumerate().skip(a) {
            for (i, x) in ea.iter().enumerate() {
                for (k, y) in eb.iter().enumerate() {
                    if a == b && k <= i {
                        continue;
                    }
                    let c = cosine_similarity(x.as_slice(), y.as_slice())?;
                    if a == b {
                        same += c;
                        n_same += 1;
                    } else {
                        cross += c;
                        n_cross += 1;
                    }
                }
            }
        }
    }
    if n_same == 0 || n_cross == 0 {
        return Err(Error::invalid("speakers", "need two speakers with at least two partials each"));
    }
    Ok(Separation {
        same_speaker: same / n_same as f64,
        cross_speaker: cross / n_cross as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(dur: f64) -> AudioClip {
        AudioClip::sine(300.0, 0.5, dur, 16_000).unwrap()
    }

    #[test]
    fn partial_counts() {
        let cfg = FeatureConfig::default();
        assert_eq!(segment_partials(&tone(3.5), 1.6, 0.8, &cfg).unwrap().len(), 3);
        assert_eq!(segment_partials(&tone(1.6), 1.6, 0.8, &cfg).unwrap().len(), 1);
        assert!(matches!(segment_partials(&tone(1.0), 1.6, 0.8, &cfg), Err(Error::TooShort { .. })));
        let clips = partial_clips(&tone(3.5), 1.6, 0.8).unwrap();
        assert!(clips.iter().all(|c| c.len() == 25_600));
        assert_eq!(clips[2].samples()[0], tone(3.5).samples()[25_600]);
    }

    fn small_model() -> (EncoderModel, Vec<Vec<FeatureSequence>>) {
        let cfg = EncoderConfig {
            hidden: 5,
            embedding_dim: 3,
            features: FeatureConfig {
                n_mels: 4,
                ..FeatureConfig::default()
            },
            seed: 2,
            ..EncoderConfig::default()
        };
        let batch: Vec<Vec<FeatureSequence>> = [200.0, 900.0]
            .iter()
            .map(|&f| {
                [0.3, 0.7]
                    .iter()
                    .map(|&a| {
                        let c = AudioClip::sine(f, a, 0.15, 16_000).unwrap();
                        features(&c, &cfg.features).unwrap()
                    })
                    .collect()
            })
            .collect();
        let st = Standardizer::fit(batch.iter().flatten().flat_map(|f| f.rows.iter())).unwrap();
        (EncoderModel::new(cfg, st).unwrap(), batch)
    }

    #[test]
    fn encoder_gradient_matches_central_differences() {
        let (model, batch) = small_model();
        let (_, grad) = model.loss_and_gradient(&batch).unwrap();
        let flat = model.to_flat();
        let analytic = grad.to_flat();
        let h = 1e-5;
        let mut worst: f64 = 0.0;
        for k in 0..flat.len() {
            let mut p = model.clone();
            let mut f = flat.clone();
            f[k] += h;
            p.set_flat(&f).unwrap();
            let up = p.loss_and_gradient(&batch).unwrap().0;
            f[k] -= 2.0 * h;
            p.set_flat(&f).unwrap();
            let down = p.loss_and_gradient(&batch).unwrap().0;
            let numeric = (up - down) / (2.0 * h);
            let err = (numeric - analytic[k]).abs() / (numeric.abs() + analytic[k].abs()).max(1e-6);
            worst = worst.max(err);
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn embeddings_are_unit_and_deterministic() {
        let (model, batch) = small_model();
        let a = model.embed(&batch[0][0]).unwrap();
        let b = model.embed(&batch[0][0]).unwrap();
        assert_eq!(a, b);
        let n: f64 = a.as_slice().iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((n - 1.0).abs() < 1e-6);
        let wrong = FeatureSequence {
            rows: vec![vec![0.0; 7]],
            hop_seconds: 0.016,
            frame_seconds: 0.064,
        };
        assert!(matches!(model.embed(&wrong), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn checkpoint_round_trip() {
        let (model, _) = small_model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("enc.json");
        model.save(&path).unwrap();
        assert_eq!(EncoderModel::load(&path).unwrap(), model);
    }

    #[test]
    fn tiny_corpus_is_rejected() {
        let one = vec![SpeakerClips {
            name: "solo".into(),
            clips: vec![tone(2.0); 4],
        }];
        assert!(train_encoder(&one, &EncoderConfig::default()).is_err());
    }
}
