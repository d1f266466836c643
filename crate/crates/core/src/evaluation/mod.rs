//! Ranking metrics, the predicate-frequency baseline and k-fold
//! cross-validation producing `esa-metrics-v1` reports.

mod cv;
mod reference;

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use crate::kg_store::{EntityDescription, GroundTruth, KgError};
use crate::model::ModelError;
use crate::supervision::SupervisionError;

pub use cv::{
    cross_validate, evaluate_models, train_fold, CvConfig, CvOutcome, FoldModel, FoldRecord,
    MetricRow, MetricsReport, METRICS_FORMAT,
};
pub use reference::{render_comparison, ReferenceRow, ReferenceTables, REFERENCE_TABLES_JSON};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("size mismatch: expected {expected}, got {actual}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("gold set is empty")]
    EmptyGold,
    #[error("ranking is not a permutation of the triple indices")]
    NotAPermutation,
    #[error("no gold sets for k = {0}")]
    UnsupportedK(usize),
    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Supervision(#[from] SupervisionError),
    #[error(transparent)]
    Data(#[from] KgError),
}

/// Mean over users of `|selected ∩ G_u| / k`. With `|selected| = |G_u| = k`
/// precision equals recall, so this is the per-user F-measure.
pub fn fmeasure_sets(
    selected: &[usize],
    user_sets: &[Vec<usize>],
    k: usize,
) -> Result<f64, EvalError> {
    if selected.len() != k {
        return Err(EvalError::SizeMismatch {
            expected: k,
            actual: selected.len(),
        });
    }
    if user_sets.is_empty() || k == 0 {
        return Err(EvalError::EmptyGold);
    }
    let chosen: HashSet<usize> = selected.iter().copied().collect();
    if chosen.len() != k {
        return Err(EvalError::SizeMismatch {
            expected: k,
            actual: chosen.len(),
        });
    }
    let mut sum = 0.0;
    for set in user_sets {
        if set.len() != k {
            return Err(EvalError::SizeMismatch {
                expected: k,
                actual: set.len(),
            });
        }
        let hits = set.iter().filter(|i| chosen.contains(i)).count();
        sum += hits as f64 / k as f64;
    }
    Ok(sum / user_sets.len() as f64)
}

pub fn fmeasure_entity(selected: &[usize], gt: &GroundTruth, k: usize) -> Result<f64, EvalError> {
    fmeasure_sets(selected, gt.sets(k).ok_or(EvalError::UnsupportedK(k))?, k)
}

/// `(1/|gold|) Σ precision@i` over the 1-based positions `i` holding a gold item.
pub fn average_precision(ranking: &[usize], gold: &[usize]) -> Result<f64, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut seen = vec![false; ranking.len()];
    for &r in ranking {
        if r >= ranking.len() || std::mem::replace(&mut seen[r], true) {
            return Err(EvalError::NotAPermutation);
        }
    }
    let gold: HashSet<usize> = gold.iter().copied().collect();
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (pos, r) in ranking.iter().enumerate() {
        if gold.contains(r) {
            hits += 1;
            sum += hits as f64 / (pos + 1) as f64;
        }
    }
    Ok(sum / gold.len() as f64)
}

pub fn map_sets(ranking: &[usize], user_sets: &[Vec<usize>]) -> Result<f64, EvalError> {
    if user_sets.is_empty() {
        return Err(EvalError::EmptyGold);
    }
    let mut sum = 0.0;
    for set in user_sets {
        sum += average_precision(ranking, set)?;
    }
    Ok(sum / user_sets.len() as f64)
}

/// Mean AP over users of the full `ranking` against the size-`k` gold sets.
pub fn map_entity(ranking: &[usize], gt: &GroundTruth, k: usize) -> Result<f64, EvalError> {
    map_sets(ranking, gt.sets(k).ok_or(EvalError::UnsupportedK(k))?)
}

/// Orders by descending score, ties by ascending index.
fn rank_by_score(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx
}

/// Global predicate frequencies over a set of training descriptions.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FrequencyBaseline {
    counts: HashMap<String, u64>,
}

impl FrequencyBaseline {
    pub fn fit<'a>(training: impl IntoIterator<Item = &'a EntityDescription>) -> Self {
        let mut counts = HashMap::new();
        for desc in training {
            for t in &desc.triples {
                *counts.entry(t.predicate.lexical.clone()).or_insert(0) += 1;
            }
        }
        Self { counts }
    }

    pub fn count(&self, predicate_iri: &str) -> u64 {
        self.counts.get(predicate_iri).copied().unwrap_or(0)
    }

    /// Ranks the description's triples by descending predicate frequency.
    pub fn rank(&self, description: &EntityDescription) -> Vec<usize> {
        let scores: Vec<f64> = description
            .triples
            .iter()
            .map(|t| self.count(&t.predicate.lexical) as f64)
            .collect();
        rank_by_score(&scores)
    }
}

pub fn frequency_baseline(
    description: &EntityDescription,
    baseline: &FrequencyBaseline,
) -> Vec<usize> {
    baseline.rank(description)
}

/// Upper-bound ranking: triples ordered by how many users picked them.
/// Its top-k maximizes the mean user overlap, so no summarizer can score a
/// higher F-measure on the same entity.
pub fn oracle_ranking(
    gt: &GroundTruth,
    k: usize,
    triple_count: usize,
) -> Result<Vec<usize>, EvalError> {
    let mut counts = vec![0.0; triple_count];
    for set in gt.sets(k).ok_or(EvalError::UnsupportedK(k))? {
        for &i in set {
            counts[i] += 1.0;
        }
    }
    Ok(rank_by_score(&counts))
}
