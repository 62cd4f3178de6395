use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const UNIT_TOLERANCE: f64 = 1e-6;

/// A unit-norm speaker vector (d-vector).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpeakerEmbedding(Vec<f64>);

impl SpeakerEmbedding {
    /// Accepts a vector that is already unit length (within 1e-6).
    pub fn new(v: Vec<f64>) -> Result<Self> {
        check_finite(&v)?;
        let n = norm(&v);
        if (n - 1.0).abs() > UNIT_TOLERANCE {
            return Err(Error::invalid("embedding", format!("norm {n} is not 1")));
        }
        Ok(Self(v))
    }

    /// Scales `v` to unit length.
    pub fn normalize(v: Vec<f64>) -> Result<Self> {
        check_finite(&v)?;
        let n = norm(&v);
        if n < 1e-12 {
            return Err(Error::ZeroVector);
        }
        Ok(Self(v.into_iter().map(|x| x / n).collect()))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn cosine(&self, other: &SpeakerEmbedding) -> Result<f64> {
        cosine_similarity(&self.0, &other.0)
    }
}

impl TryFrom<Vec<f64>> for SpeakerEmbedding {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SpeakerEmbedding> for Vec<f64> {
    fn from(e: SpeakerEmbedding) -> Self {
        e.0
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::Empty("embedding"));
    }
    match v.iter().position(|x| !x.is_finite()) {
        Some(i) => Err(Error::NonFinite(i)),
        None => Ok(()),
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `a.b / (|a| |b|)`, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
        });
    }
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    Ok((d / (na * nb)).clamp(-1.0, 1.0))
}

/// Renormalised arithmetic mean.
pub fn centroid(embeddings: &[SpeakerEmbedding]) -> Result<SpeakerEmbedding> {
    let first = embeddings.first().ok_or(Error::Empty("embeddings"))?;
    let mut sum = vec![0.0; first.dim()];
    for e in embeddings {
        if e.dim() != sum.len() {
            return Err(Error::DimensionMismatch {
                expected: sum.len(),
                got: e.dim(),
            });
        }
        sum.iter_mut().zip(e.as_slice()).for_each(|(s, v)| *s += v);
    }
    let mean: Vec<f64> = sum.iter().map(|s| s / embeddings.len() as f64).collect();
    if norm(&mean) < 1e-9 {
        return Err(Error::ZeroVector);
    }
    SpeakerEmbedding::normalize(mean)
}

/// Adults sorted by descending cosine similarity to `target`; ties keep
/// lexicographic name order.
pub fn rank_adults(
    adults: &BTreeMap<String, SpeakerEmbedding>,
    target: &SpeakerEmbedding,
) -> Result<Vec<(String, f64)>> {
    if adults.is_empty() {
        return Err(Error::Empty("adult embeddings"));
    }
    let mut ranked = adults
        .iter()
        .map(|(name, e)| Ok((name.clone(), e.cosine(target)?)))
        .collect::<Result<Vec<_>>>()?;
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}
