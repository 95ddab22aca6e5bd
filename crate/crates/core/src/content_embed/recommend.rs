use super::{ContentId, EmbedError, EmbeddingModel};
use crate::cost::CostCounter;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct SimilarityThreshold(f64);

impl SimilarityThreshold {
    pub fn new(alpha: f64) -> Result<Self, EmbedError> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(EmbedError::InvalidThreshold(alpha))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for SimilarityThreshold {
    type Error = EmbedError;
    fn try_from(v: f64) -> Result<Self, EmbedError> {
        Self::new(v)
    }
}

impl From<SimilarityThreshold> for f64 {
    fn from(t: SimilarityThreshold) -> f64 {
        t.0
    }
}

/// Embedding rows of the items a vehicle consumed.
#[derive(Debug, Clone, PartialEq)]
pub struct Vehicle2Vec {
    pub vehicle: u32,
    pub rows: Vec<Vec<f64>>,
}

impl Vehicle2Vec {
    /// History entries missing from the model are skipped.
    pub fn from_history(model: &EmbeddingModel, vehicle: u32, history: &[ContentId]) -> Self {
        Self {
            vehicle,
            rows: history
                .iter()
                .filter_map(|&c| model.vector(c).ok().map(<[f64]>::to_vec))
                .collect(),
        }
    }
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> Result<f64, EmbedError> {
    if a.len() != b.len() {
        return Err(EmbedError::LengthMismatch(a.len(), b.len()));
    }
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok((ab / (aa.sqrt() * bb.sqrt())).clamp(-1.0, 1.0))
}

/// Mean cosine similarity between `item` and the rows of `m`. The
/// per-row values are summed in sorted order so the result does not depend on
/// row order. `None` for an empty matrix.
pub fn mean_similarity(m: &Vehicle2Vec, item: &[f64]) -> Result<Option<f64>, EmbedError> {
    if m.rows.is_empty() {
        return Ok(None);
    }
    let mut sims = m
        .rows
        .iter()
        .map(|r| cosine_similarity(r, item))
        .collect::<Result<Vec<_>, _>>()?;
    sims.sort_by(f64::total_cmp);
    Ok(Some(sims.iter().sum::<f64>() / sims.len() as f64))
}

/// Content carried by one provider stopped at the same intersection.
#[derive(Debug, Clone, PartialEq)]
pub struct NearbyCatalog {
    pub provider: u32,
    pub items: Vec<ContentId>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recommendation {
    pub content: ContentId,
    /// Best mean similarity over the expected consumers.
    pub score: f64,
}

/// Items offered by nearby providers that some expected consumer would
/// like: mean similarity to the consumer's history strictly above `alpha`.
/// Items already cached, items without an embedding and consumers with an
/// empty history are skipped. Sorted by descending score, then content id.
pub fn intersection_recommendation(
    model: &EmbeddingModel,
    cached: &BTreeSet<ContentId>,
    nearby: &[NearbyCatalog],
    consumers: &[Vehicle2Vec],
    alpha: SimilarityThreshold,
    cost: &mut CostCounter,
) -> Vec<Recommendation> {
    let candidates: BTreeSet<ContentId> = nearby
        .iter()
        .flat_map(|c| c.items.iter().copied())
        .filter(|c| !cached.contains(c))
        .collect();
    let mut out = Vec::new();
    for c in candidates {
        let Ok(v) = model.vector(c) else { continue };
        let mut best: Option<f64> = None;
        for m in consumers {
            cost.similarity_evals += m.rows.len() as u64;
            if let Ok(Some(s)) = mean_similarity(m, v) {
                if s > alpha.value() && best.is_none_or(|b| s > b) {
                    best = Some(s);
                }
            }
        }
        if let Some(score) = best {
            out.push(Recommendation { content: c, score });
        }
    }
    out.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.content.cmp(&b.content)));
    out
}
