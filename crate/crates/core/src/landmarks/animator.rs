//! Learned audio-to-landmark animator: an Elman RNN over per-frame log-mel
//! content features concatenated with a speaker embedding, predicting a
//! displacement for every landmark coordinate.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::articulate::{articulate_clip, ArticulationConfig};
use super::sequence::{frame_count, LandmarkSequence};
use super::template::{LandmarkTemplate, MOUTH, N_LANDMARKS};
use crate::audio::{features, AudioClip, FeatureConfig, FeatureSequence};
use crate::error::{Error, Result};
use crate::nn::{clip_global_norm, Adam, Elman, Linear, Parameters, Standardizer};
use crate::speaker::SpeakerEmbedding;

pub const OUTPUT_DIM: usize = N_LANDMARKS * 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimatorConfig {
    pub features: FeatureConfig,
    pub articulation: ArticulationConfig,
    pub fps: f64,
    pub hidden: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub clip_norm: f64,
    /// Network outputs are displacements divided by this, keeping targets near unit scale.
    pub out_scale: f64,
    /// Silence added before and after every training clip.
    pub pad_s: f64,
    pub seed: u64,
}

impl Default for AnimatorConfig {
    fn default() -> Self {
        Self {
            features: FeatureConfig::default(),
            articulation: ArticulationConfig::default(),
            fps: 25.0,
            hidden: 32,
            epochs: 300,
            learning_rate: 0.01,
            clip_norm: 5.0,
            out_scale: 0.05,
            pad_s: 0.25,
            seed: 0,
        }
    }
}

/// One training clip: raw per-frame content rows, a speaker vector and the
/// per-frame target displacement from the template (68 x 3, row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct AnimatorExample {
    pub content: Vec<Vec<f64>>,
    pub speaker: Vec<f64>,
    pub target: Vec<Vec<f64>>,
}

/// Per-frame log-mel rows averaged onto the video frame grid.
pub fn content_features(clip: &AudioClip, cfg: &FeatureConfig, fps: f64) -> Result<Vec<Vec<f64>>> {
    let n = frame_count(clip.duration_seconds(), fps);
    Ok(features(clip, cfg)?.at_fps(fps, n))
}

impl AnimatorExample {
    /// Pads `clip` with silence, articulates it procedurally and adds the
    /// speaker's constant `style` shift `(dx, dy)` to every mouth landmark.
    /// A uniform shift leaves the lip gap, and so the opening, unchanged.
    pub fn from_clip(
        clip: &AudioClip,
        speaker: &SpeakerEmbedding,
        style: [f64; 2],
        template: &LandmarkTemplate,
        cfg: &AnimatorConfig,
    ) -> Result<Self> {
        let padded = clip.padded(cfg.pad_s, cfg.pad_s);
        let seq = articulate_clip(&padded, template, cfg.fps, &cfg.features, &cfg.articulation)?;
        let content = content_features(&padded, &cfg.features, cfg.fps)?;
        let target = seq
            .frames()
            .iter()
            .map(|frame| {
                let mut d = Vec::with_capacity(OUTPUT_DIM);
                for (i, (p, t)) in frame.iter().zip(&template.points).enumerate() {
                    let (sx, sy) = if MOUTH.contains(&i) { (style[0], style[1]) } else { (0.0, 0.0) };
                    d.extend([p[0] - t[0] + sx, p[1] - t[1] + sy, p[2] - t[2]]);
                }
                d
            })
            .collect();
        Ok(Self {
            content,
            speaker: speaker.as_slice().to_vec(),
            target,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimatorModel {
    pub config: AnimatorConfig,
    pub embedding_dim: usize,
    pub standardizer: Standardizer,
    pub rnn: Elman,
    pub head: Linear,
}

impl Parameters for AnimatorModel {
    fn tensors(&self) -> Vec<&[f64]> {
        let mut v = self.rnn.tensors();
        v.extend(self.head.tensors());
        v
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = self.rnn.tensors_mut();
        v.extend(self.head.tensors_mut());
        v
    }
}

impl AnimatorModel {
    pub fn new(config: AnimatorConfig, standardizer: Standardizer, embedding_dim: usize) -> Result<Self> {
        if config.hidden == 0 || !(config.out_scale > 0.0) {
            return Err(Error::invalid("animator", "hidden size and out_scale must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let n_in = standardizer.dim() + embedding_dim;
        let rnn = Elman::new(n_in, config.hidden, &mut rng);
        let mut head = Linear::new(config.hidden, OUTPUT_DIM, &mut rng);
        // Start from near-zero displacements.
        head.w.iter_mut().for_each(|w| *w *= 0.1);
        Ok(Self {
            config,
            embedding_dim,
            standardizer,
            rnn,
            head,
        })
    }

    fn inputs(&self, content: &[Vec<f64>], speaker: &[f64]) -> Result<Vec<Vec<f64>>> {
        if speaker.len() != self.embedding_dim {
            return Err(Error::DimensionMismatch {
                expected: self.embedding_dim,
                got: speaker.len(),
            });
        }
        // Unit embeddings have entries near 1/sqrt(D); rescale to unit variance.
        let gain = (self.embedding_dim as f64).sqrt();
        content
            .iter()
            .map(|row| {
                if row.len() != self.standardizer.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.standardizer.dim(),
                        got: row.len(),
                    });
                }
                let mut x = self.standardizer.apply(row);
                x.extend(speaker.iter().map(|s| s * gain));
                Ok(x)
            })
            .collect()
    }

    /// Displacements in head widths, one `68 * 3` row per frame.
    pub fn predict(&self, content: &[Vec<f64>], speaker: &[f64]) -> Result<Vec<Vec<f64>>> {
        let xs = self.inputs(content, speaker)?;
        Ok(self
            .rnn
            .forward(&xs)
            .iter()
            .map(|h| self.head.forward(h).into_iter().map(|y| y * self.config.out_scale).collect())
            .collect())
    }

    fn example_loss_and_gradient(&self, ex: &AnimatorExample, grad: Option<&mut AnimatorModel>) -> Result<f64> {
        if ex.content.len() != ex.target.len() {
            return Err(Error::DimensionMismatch {
                expected: ex.content.len(),
                got: ex.target.len(),
            });
        }
        if ex.content.is_empty() {
            return Err(Error::Empty("animator example"));
        }
        let xs = self.inputs(&ex.content, &ex.speaker)?;
        let hs = self.rnn.forward(&xs);
        let norm = 1.0 / (hs.len() * OUTPUT_DIM) as f64;
        let mut loss = 0.0;
        let mut dys = Vec::with_capacity(hs.len());
        for (h, t) in hs.iter().zip(&ex.target) {
            if t.len() != OUTPUT_DIM {
                return Err(Error::DimensionMismatch {
                    expected: OUTPUT_DIM,
                    got: t.len(),
                });
            }
            let y = self.head.forward(h);
            let dy: Vec<f64> = y
                .iter()
                .zip(t)
                .map(|(y, t)| {
                    let r = y - t / self.config.out_scale;
                    loss += r * r * norm;
                    2.0 * r * norm
                })
                .collect();
            dys.push(dy);
        }
        if let Some(grad) = grad {
            let dhs: Vec<Vec<f64>> = hs
                .iter()
                .zip(&dys)
                .map(|(h, dy)| self.head.backward(h, dy, &mut grad.head))
                .collect();
            self.rnn.backward(&xs, &hs, &dhs, &mut grad.rnn);
        }
        Ok(loss)
    }

    /// Mean over examples of the per-element squared error in output units.
    pub fn loss(&self, batch: &[AnimatorExample]) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::Empty("animator batch"));
        }
        let losses = batch
            .par_iter()
            .map(|ex| self.example_loss_and_gradient(ex, None))
            .collect::<Result<Vec<_>>>()?;
        Ok(losses.iter().sum::<f64>() / batch.len() as f64)
    }

    pub fn loss_and_gradient(&self, batch: &[AnimatorExample]) -> Result<(f64, AnimatorModel)> {
        if batch.is_empty() {
            return Err(Error::Empty("animator batch"));
        }
        let parts = batch
            .par_iter()
            .map(|ex| {
                let mut g = self.clone();
                g.fill(0.0);
                let l = self.example_loss_and_gradient(ex, Some(&mut g))?;
                Ok((l, g))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut grad = self.clone();
        grad.fill(0.0);
        let mut loss = 0.0;
        for (l, g) in &parts {
            loss += l;
            grad.accumulate(g);
        }
        let inv = 1.0 / batch.len() as f64;
        for t in grad.tensors_mut() {
            t.iter_mut().for_each(|v| *v *= inv);
        }
        Ok((loss * inv, grad))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, serde_json::to_string_pretty(self)?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: Self = serde_json::from_str(&text)?;
        if model.rnn.n_in != model.standardizer.dim() + model.embedding_dim
            || model.head.n_in != model.rnn.n_hidden
            || model.head.n_out != OUTPUT_DIM
        {
            return Err(Error::parse(path.display().to_string(), "inconsistent layer sizes"));
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimatorReport {
    /// Training loss before each update, then after the last one.
    pub losses: Vec<f64>,
}

/// Full-batch Adam on the mean squared displacement error.
pub fn train_animator(examples: &[AnimatorExample], config: &AnimatorConfig) -> Result<(AnimatorModel, AnimatorReport)> {
    if examples.len() < 8 {
        return Err(Error::invalid("corpus", format!("need at least 8 clips, got {}", examples.len())));
    }
    let first = &examples[0].speaker;
    if examples.iter().all(|e| e.speaker == *first) {
        return Err(Error::invalid("corpus", "need clips from at least 2 speakers"));
    }
    if let Some(e) = examples.iter().find(|e| e.speaker.len() != first.len()) {
        return Err(Error::DimensionMismatch {
            expected: first.len(),
            got: e.speaker.len(),
        });
    }
    let standardizer = Standardizer::fit(examples.iter().flat_map(|e| e.content.iter()))?;
    let mut model = AnimatorModel::new(config.clone(), standardizer, first.len())?;
    let mut opt = Adam::new(config.learning_rate, model.num_parameters());
    let mut losses = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let (loss, mut grad) = model.loss_and_gradient(examples)?;
        if !loss.is_finite() {
            return Err(Error::Training(format!("animator loss diverged at epoch {epoch}")));
        }
        losses.push(loss);
        clip_global_norm(&mut grad, config.clip_norm);
        opt.step(&mut model, &grad);
    }
    losses.push(model.loss(examples)?);
    Ok((model, AnimatorReport { losses }))
}

/// Landmark sequence for `features` spoken by `speaker`. Frame `f` uses the
/// log-mel rows whose centres fall inside it.
pub fn animate(
    model: &AnimatorModel,
    features: &FeatureSequence,
    speaker: &[f64],
    template: &LandmarkTemplate,
    fps: f64,
    duration_s: f64,
) -> Result<LandmarkSequence> {
    if features.is_empty() {
        return Err(Error::Empty("feature sequence"));
    }
    let n = frame_count(duration_s, fps);
    let content = features.at_fps(fps, n);
    let disp = model.predict(&content, speaker)?;
    let frames = disp
        .iter()
        .map(|d| {
            template
                .points
                .iter()
                .enumerate()
                .map(|(i, p)| [p[0] + d[3 * i], p[1] + d[3 * i + 1], p[2] + d[3 * i + 2]])
                .collect()
        })
        .collect();
    LandmarkSequence::new(frames, fps, duration_s)
}

/// Clips for two or more toy speakers, each with its own seeded embedding
/// and style shift, split into training and held-out examples.
#[derive(Debug, Clone)]
pub struct ToyAnimatorCorpus {
    pub speakers: Vec<SpeakerEmbedding>,
    pub styles: Vec<[f64; 2]>,
    pub train: Vec<AnimatorExample>,
    /// Held-out audio with its speaker index.
    pub held_out: Vec<(AudioClip, usize)>,
}

/// Speaker `s` gets style `(+-0.012, -+0.008)` alternating by parity and a
/// seeded random unit embedding of dimension `embedding_dim`.
pub fn toy_animator_corpus(
    n_speakers: usize,
    train_per_speaker: usize,
    held_out_per_speaker: usize,
    embedding_dim: usize,
    seed: u64,
    cfg: &AnimatorConfig,
) -> Result<ToyAnimatorCorpus> {
    use crate::speaker::SENTENCE_BANK;
    use crate::tts::{adult_profile, child_profile, synthesize};
    use rand::Rng;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let template = LandmarkTemplate::canonical();
    let speakers = (0..n_speakers)
        .map(|_| {
            let v: Vec<f64> = (0..embedding_dim).map(|_| rng.random_range(-1.0..1.0)).collect();
            SpeakerEmbedding::normalize(v)
        })
        .collect::<Result<Vec<_>>>()?;
    let styles: Vec<[f64; 2]> = (0..n_speakers)
        .map(|s| if s % 2 == 0 { [0.012, -0.008] } else { [-0.012, 0.008] })
        .collect();
    let mut train = Vec::new();
    let mut held_out = Vec::new();
    for s in 0..n_speakers {
        let pseed = seed.wrapping_mul(31).wrapping_add(s as u64);
        let profile = if s % 2 == 0 { child_profile(pseed) } else { adult_profile(pseed) };
        for u in 0..train_per_speaker + held_out_per_speaker {
            let text = SENTENCE_BANK[(u + 3 * s) % SENTENCE_BANK.len()];
            let clip = synthesize(text, &profile, 16_000, pseed.wrapping_mul(101).wrapping_add(u as u64))?;
            if u < train_per_speaker {
                train.push(AnimatorExample::from_clip(&clip, &speakers[s], styles[s], &template, cfg)?);
            } else {
                held_out.push((clip, s));
            }
        }
    }
    Ok(ToyAnimatorCorpus {
        speakers,
        styles,
        train,
        held_out,
    })
}
