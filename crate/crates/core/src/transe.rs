//! Translation embeddings (`s + p ≈ o`) trained with a margin ranking loss,
//! and the frozen object lookup table derived from them.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::kg_store::Vocabulary;
use crate::nn::{Rng, Tensor2};

pub const EMBEDDING_FORMAT: &str = "esa-transe-v1";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransEError {
    #[error("dimension mismatch: {0} / {1} / {2}")]
    DimensionMismatch(usize, usize, usize),
    #[error("node {0} has no object vector")]
    MissingNode(usize),
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("embedding file: {0}")]
    BadFile(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransEConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub negative_samples_per_positive: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TransEConfig {
    fn default() -> Self {
        Self {
            dim: 100,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 1000,
            negative_samples_per_positive: 1,
            batch_size: 100,
            seed: 1,
        }
    }
}

impl TransEConfig {
    pub fn validate(&self) -> Result<(), TransEError> {
        let bad = |m: &str| Err(TransEError::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be positive");
        }
        if !(self.margin > 0.0) {
            return bad("margin must be positive");
        }
        if self.epochs == 0 {
            return bad("epochs must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if self.negative_samples_per_positive == 0 || self.batch_size == 0 {
            return bad("negatives per positive and batch size must be positive");
        }
        Ok(())
    }
}

/// `‖s + p − o‖₂²`
pub fn transe_score(s: &[f64], p: &[f64], o: &[f64]) -> Result<f64, TransEError> {
    if s.len() != p.len() || p.len() != o.len() {
        return Err(TransEError::DimensionMismatch(s.len(), p.len(), o.len()));
    }
    Ok(distance(s, p, o))
}

#[inline]
fn distance(s: &[f64], p: &[f64], o: &[f64]) -> f64 {
    s.iter()
        .zip(p)
        .zip(o)
        .map(|((s, p), o)| {
            let d = s + p - o;
            d * d
        })
        .sum()
}

/// Which end of a triple a negative sample replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corrupted {
    Subject,
    Object,
}

/// Uniform head/tail corruption that avoids observed triples.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    node_count: usize,
    observed: HashSet<(usize, usize, usize)>,
}

impl NegativeSampler {
    pub const MAX_TRIES: usize = 100;

    pub fn new(node_count: usize, triples: &[(usize, usize, usize)]) -> Self {
        assert!(node_count >= 2, "corruption needs at least two nodes");
        Self {
            node_count,
            observed: triples.iter().copied().collect(),
        }
    }

    /// Replaces the subject (probability ½) or the object with a different,
    /// uniformly drawn node. Resamples while the result is an observed
    /// triple, accepting the last draw after [`Self::MAX_TRIES`] attempts.
    pub fn corrupt(
        &self,
        (s, p, o): (usize, usize, usize),
        rng: &mut Rng,
    ) -> ((usize, usize, usize), Corrupted) {
        let side = if rng.coin() {
            Corrupted::Subject
        } else {
            Corrupted::Object
        };
        let mut candidate = (s, p, o);
        for _ in 0..Self::MAX_TRIES {
            let keep = if side == Corrupted::Subject { s } else { o };
            // uniform over the other node_count - 1 ids
            let mut r = rng.below(self.node_count - 1);
            if r >= keep {
                r += 1;
            }
            candidate = match side {
                Corrupted::Subject => (r, p, o),
                Corrupted::Object => (s, p, r),
            };
            if !self.observed.contains(&candidate) {
                break;
            }
        }
        (candidate, side)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationEmbeddings {
    pub config: TransEConfig,
    pub nodes: Tensor2,
    pub relations: Tensor2,
    /// Mean margin loss per epoch.
    pub loss_history: Vec<f64>,
}

fn project_to_unit_ball(m: &mut Tensor2) {
    for r in 0..m.rows() {
        let row = m.row_mut(r);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
}

/// Uniform `[−6/√d, 6/√d]` initialization; relation rows are L2-normalized
/// once, node rows are projected onto the unit ball.
pub fn init_embeddings(
    node_count: usize,
    relation_count: usize,
    config: &TransEConfig,
) -> TranslationEmbeddings {
    let bound = 6.0 / (config.dim as f64).sqrt();
    let mut rng = Rng::new(config.seed).derive(0);
    let mut nodes = Tensor2::uniform(node_count, config.dim, bound, &mut rng);
    let mut relations = Tensor2::uniform(relation_count, config.dim, bound, &mut rng);
    for r in 0..relations.rows() {
        let row = relations.row_mut(r);
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|x| *x /= norm);
        }
    }
    project_to_unit_ball(&mut nodes);
    TranslationEmbeddings {
        config: config.clone(),
        nodes,
        relations,
        loss_history: Vec::new(),
    }
}

/// Mini-batch SGD on `Σ max(0, γ + d(pos) − d(neg))`.
pub fn train_transe(
    triples: &[(usize, usize, usize)],
    node_count: usize,
    relation_count: usize,
    config: &TransEConfig,
) -> Result<TranslationEmbeddings, TransEError> {
    config.validate()?;
    let mut emb = init_embeddings(node_count, relation_count, config);
    if triples.is_empty() {
        return Ok(emb);
    }
    let sampler = NegativeSampler::new(node_count, triples);
    let mut rng = Rng::new(config.seed).derive(1);
    let dim = config.dim;
    let mut node_grad = Tensor2::zeros(node_count, dim);
    let mut rel_grad = Tensor2::zeros(relation_count, dim);
    let mut touched_nodes: Vec<usize> = Vec::new();
    let mut touched_rels: Vec<usize> = Vec::new();
    let mut order: Vec<usize> = (0..triples.len()).collect();
    let mut diff_pos = vec![0.0; dim];
    let mut diff_neg = vec![0.0; dim];

    for _epoch in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            for &ti in batch {
                let pos = triples[ti];
                for _ in 0..config.negative_samples_per_positive {
                    let (neg, _) = sampler.corrupt(pos, &mut rng);
                    let d_pos = residual(&emb, pos, &mut diff_pos);
                    let d_neg = residual(&emb, neg, &mut diff_neg);
                    let loss = config.margin + d_pos - d_neg;
                    if loss <= 0.0 {
                        continue;
                    }
                    epoch_loss += loss;
                    // ∂d/∂s = ∂d/∂p = 2r, ∂d/∂o = −2r with r = s + p − o
                    accumulate(&mut node_grad, pos.0, &diff_pos, 2.0, &mut touched_nodes);
                    accumulate(&mut rel_grad, pos.1, &diff_pos, 2.0, &mut touched_rels);
                    accumulate(&mut node_grad, pos.2, &diff_pos, -2.0, &mut touched_nodes);
                    accumulate(&mut node_grad, neg.0, &diff_neg, -2.0, &mut touched_nodes);
                    accumulate(&mut rel_grad, neg.1, &diff_neg, -2.0, &mut touched_rels);
                    accumulate(&mut node_grad, neg.2, &diff_neg, 2.0, &mut touched_nodes);
                }
            }
            apply(
                &mut emb.nodes,
                &mut node_grad,
                &mut touched_nodes,
                config.learning_rate,
            );
            apply(
                &mut emb.relations,
                &mut rel_grad,
                &mut touched_rels,
                config.learning_rate,
            );
        }
        project_to_unit_ball(&mut emb.nodes);
        emb.loss_history
            .push(epoch_loss / (triples.len() * config.negative_samples_per_positive) as f64);
    }
    Ok(emb)
}

fn residual(emb: &TranslationEmbeddings, (s, p, o): (usize, usize, usize), out: &mut [f64]) -> f64 {
    let (sv, pv, ov) = (emb.nodes.row(s), emb.relations.row(p), emb.nodes.row(o));
    let mut d = 0.0;
    for i in 0..out.len() {
        out[i] = sv[i] + pv[i] - ov[i];
        d += out[i] * out[i];
    }
    d
}

fn accumulate(grad: &mut Tensor2, row: usize, v: &[f64], scale: f64, touched: &mut Vec<usize>) {
    touched.push(row);
    for (g, x) in grad.row_mut(row).iter_mut().zip(v) {
        *g += scale * x;
    }
}

fn apply(values: &mut Tensor2, grad: &mut Tensor2, touched: &mut Vec<usize>, lr: f64) {
    touched.sort_unstable();
    touched.dedup();
    for &r in touched.iter() {
        let g = grad.row(r).to_vec();
        for (v, g) in values.row_mut(r).iter_mut().zip(&g) {
            *v -= lr * g;
        }
        grad.row_mut(r).iter_mut().for_each(|x| *x = 0.0);
    }
    touched.clear();
}

impl TranslationEmbeddings {
    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn score(&self, (s, p, o): (usize, usize, usize)) -> f64 {
        distance(self.nodes.row(s), self.relations.row(p), self.nodes.row(o))
    }

    pub fn max_node_norm(&self) -> f64 {
        (0..self.nodes.rows())
            .map(|r| self.nodes.row(r).iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Mean (raw) rank of the true object among all nodes, over `triples`.
    pub fn mean_object_rank(&self, triples: &[(usize, usize, usize)]) -> f64 {
        let n = self.nodes.rows();
        let mut pred = vec![0.0; self.dim()];
        let total: usize = triples
            .iter()
            .map(|&(s, p, o)| {
                for ((x, a), b) in pred
                    .iter_mut()
                    .zip(self.nodes.row(s))
                    .zip(self.relations.row(p))
                {
                    *x = a + b;
                }
                let d = |c: usize| {
                    pred.iter()
                        .zip(self.nodes.row(c))
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                };
                let target = d(o);
                1 + (0..n).filter(|&c| c != o && d(c) < target).count()
            })
            .sum();
        total as f64 / triples.len().max(1) as f64
    }

    pub fn to_json(&self, vocabulary: &Vocabulary) -> String {
        self.to_json_with(vocabulary, None)
    }

    /// Serializes with an optional run configuration echoed into the file.
    pub fn to_json_with(
        &self,
        vocabulary: &Vocabulary,
        run_config: Option<&serde_json::Value>,
    ) -> String {
        let rows = |m: &Tensor2| (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
        let file = EmbeddingFile {
            format: EMBEDDING_FORMAT.to_string(),
            run_config: run_config.cloned(),
            dim: self.dim(),
            node_count: self.nodes.rows(),
            relation_count: self.relations.rows(),
            seed: self.config.seed,
            vocabulary_fingerprint: vocabulary.fingerprint(),
            config: self.config.clone(),
            loss_history: self.loss_history.clone(),
            node_vectors: rows(&self.nodes),
            relation_vectors: rows(&self.relations),
        };
        serde_json::to_string(&file).expect("embeddings serialize") + "\n"
    }

    /// Parses an embedding file and checks it against `vocabulary`.
    pub fn from_json(text: &str, vocabulary: &Vocabulary) -> Result<Self, TransEError> {
        let bad = |m: String| TransEError::BadFile(m);
        let file: EmbeddingFile = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
        if file.format != EMBEDDING_FORMAT {
            return Err(bad(format!(
                "format `{}`, expected `{EMBEDDING_FORMAT}`",
                file.format
            )));
        }
        if file.node_count != vocabulary.node_count()
            || file.relation_count != vocabulary.predicate_count()
        {
            return Err(bad(format!(
                "counts {}/{} do not match vocabulary {}/{}",
                file.node_count,
                file.relation_count,
                vocabulary.node_count(),
                vocabulary.predicate_count()
            )));
        }
        if file.vocabulary_fingerprint != vocabulary.fingerprint() {
            return Err(bad("vocabulary fingerprint mismatch".into()));
        }
        let to_tensor = |rows: Vec<Vec<f64>>, n: usize| -> Result<Tensor2, TransEError> {
            if rows.len() != n || rows.iter().any(|r| r.len() != file.dim) {
                return Err(bad("vector block has wrong shape".into()));
            }
            Tensor2::from_vec(n, file.dim, rows.into_iter().flatten().collect())
                .map_err(|e| bad(e.to_string()))
        };
        let mut config = file.config;
        config.dim = file.dim;
        config.seed = file.seed;
        Ok(Self {
            config,
            nodes: to_tensor(file.node_vectors, file.node_count)?,
            relations: to_tensor(file.relation_vectors, file.relation_count)?,
            loss_history: file.loss_history,
        })
    }

    pub fn read(path: &Path, vocabulary: &Vocabulary) -> Result<Self, TransEError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| TransEError::BadFile(format!("{}: {e}", path.display())))?;
        Self::from_json(&text, vocabulary)
    }
}

#[derive(Serialize, Deserialize)]
struct EmbeddingFile {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run_config: Option<serde_json::Value>,
    dim: usize,
    node_count: usize,
    relation_count: usize,
    seed: u64,
    vocabulary_fingerprint: String,
    config: TransEConfig,
    loss_history: Vec<f64>,
    node_vectors: Vec<Vec<f64>>,
    relation_vectors: Vec<Vec<f64>>,
}

/// Frozen object vectors keyed by node id. No API mutates the vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectLookupTable {
    rows: BTreeMap<usize, usize>,
    vectors: Tensor2,
}

/// Copies the vector of every node in `object_ids` into a frozen table.
pub fn export_object_table(
    embeddings: &TranslationEmbeddings,
    object_ids: impl IntoIterator<Item = usize>,
) -> Result<ObjectLookupTable, TransEError> {
    let ids: std::collections::BTreeSet<usize> = object_ids.into_iter().collect();
    let dim = embeddings.dim();
    let mut data = Vec::with_capacity(ids.len() * dim);
    let mut rows = BTreeMap::new();
    for (r, &id) in ids.iter().enumerate() {
        if id >= embeddings.nodes.rows() {
            return Err(TransEError::MissingNode(id));
        }
        data.extend_from_slice(embeddings.nodes.row(id));
        rows.insert(id, r);
    }
    Ok(ObjectLookupTable {
        rows,
        vectors: Tensor2::from_vec(ids.len(), dim, data)
            .map_err(|e| TransEError::BadFile(e.to_string()))?,
    })
}

impl ObjectLookupTable {
    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, node_id: usize) -> Result<&[f64], TransEError> {
        self.rows
            .get(&node_id)
            .map(|&r| self.vectors.row(r))
            .ok_or(TransEError::MissingNode(node_id))
    }

    /// Rebuilds a table from node ids (ascending) and their vectors, one row each.
    pub fn from_parts(node_ids: Vec<usize>, vectors: Tensor2) -> Result<Self, TransEError> {
        if node_ids.len() != vectors.rows() {
            return Err(TransEError::BadFile(format!(
                "{} node ids for {} vectors",
                node_ids.len(),
                vectors.rows()
            )));
        }
        if node_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(TransEError::BadFile(
                "object node ids must be strictly ascending".into(),
            ));
        }
        vectors
            .check_finite()
            .map_err(|e| TransEError::BadFile(e.to_string()))?;
        let rows = node_ids
            .into_iter()
            .enumerate()
            .map(|(r, id)| (id, r))
            .collect();
        Ok(Self { rows, vectors })
    }

    pub fn node_ids(&self) -> Vec<usize> {
        self.rows.keys().copied().collect()
    }

    pub fn vectors(&self) -> &Tensor2 {
        &self.vectors
    }

    pub fn contains(&self, node_id: usize) -> bool {
        self.rows.contains_key(&node_id)
    }

    /// SHA-256 of node ids and vector bits.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for (&id, &r) in &self.rows {
            h.update((id as u64).to_le_bytes());
            for v in self.vectors.row(r) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn score_examples() {
        assert_eq!(
            transe_score(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 0.0]).unwrap(),
            2.0
        );
        assert_eq!(
            transe_score(&[0.5, 1.0], &[0.5, -1.0], &[1.0, 0.0]).unwrap(),
            0.0
        );
        assert!(matches!(
            transe_score(&[1.0], &[1.0, 2.0], &[0.0]),
            Err(TransEError::DimensionMismatch(..))
        ));
    }

    #[test]
    fn score_matches_loop_oracle_d100() {
        let mut rng = Rng::new(5);
        let v = |rng: &mut Rng| {
            (0..100)
                .map(|_| rng.uniform(-1.0, 1.0))
                .collect::<Vec<f64>>()
        };
        let (s, p, o) = (v(&mut rng), v(&mut rng), v(&mut rng));
        let mut oracle = 0.0;
        for i in 0..100 {
            oracle += (s[i] + p[i] - o[i]).powi(2);
        }
        assert!((transe_score(&s, &p, &o).unwrap() - oracle).abs() < 1e-12);
    }

    #[test]
    fn two_node_corruption_is_forced() {
        let sampler = NegativeSampler::new(2, &[(0, 0, 1)]);
        let mut rng = Rng::new(1);
        for _ in 0..50 {
            let ((s, p, o), side) = sampler.corrupt((0, 0, 1), &mut rng);
            assert_eq!(p, 0);
            match side {
                Corrupted::Subject => assert_eq!((s, o), (1, 1)),
                Corrupted::Object => assert_eq!((s, o), (0, 0)),
            }
        }
    }

    #[test]
    fn corruption_avoids_observed_and_is_seeded() {
        let triples = [(0, 0, 1), (0, 0, 2), (1, 0, 2)];
        let sampler = NegativeSampler::new(4, &triples);
        let run = |seed| {
            let mut rng = Rng::new(seed);
            (0..200)
                .map(|_| sampler.corrupt((0, 0, 1), &mut rng))
                .collect::<Vec<_>>()
        };
        let a = run(3);
        assert_eq!(a, run(3));
        for (t, _) in &a {
            assert!(!triples.contains(t), "{t:?}");
        }
    }

    fn toy_kg() -> (Vec<(usize, usize, usize)>, usize, usize) {
        // chains a→b→c and d→e under `likes`, plus x→y under `knows`
        (vec![(0, 0, 1), (1, 0, 2), (3, 0, 4), (5, 1, 6)], 7, 2)
    }

    #[test]
    fn toy_translation_property() {
        let (triples, n, r) = toy_kg();
        let cfg = TransEConfig {
            dim: 8,
            epochs: 200,
            batch_size: 2,
            learning_rate: 0.05,
            seed: 4,
            ..TransEConfig::default()
        };
        let emb = train_transe(&triples, n, r, &cfg).unwrap();
        assert!(emb.max_node_norm() <= 1.0 + 1e-9);
        assert!(emb.loss_history.last().unwrap() <= emb.loss_history.first().unwrap());
        let known: HashSet<_> = triples.iter().copied().collect();
        for &(s, p, o) in &triples {
            let pos = emb.score((s, p, o));
            for c in 0..n {
                for cand in [(c, p, o), (s, p, c)] {
                    if !known.contains(&cand) {
                        assert!(pos < emb.score(cand), "{:?} vs {:?}", (s, p, o), cand);
                    }
                }
            }
        }
        assert_eq!(emb, train_transe(&triples, n, r, &cfg).unwrap());
    }

    #[test]
    fn object_table_is_a_copy() {
        let (triples, n, r) = toy_kg();
        let emb = train_transe(
            &triples,
            n,
            r,
            &TransEConfig {
                dim: 4,
                epochs: 3,
                ..TransEConfig::default()
            },
        )
        .unwrap();
        let table = export_object_table(&emb, [1, 2, 2, 4, 6]).unwrap();
        assert_eq!(table.len(), 4);
        assert_eq!(table.get(2).unwrap(), emb.nodes.row(2));
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(table.get(6).unwrap()), bits(emb.nodes.row(6)));
        assert_eq!(table.get(0), Err(TransEError::MissingNode(0)));
        assert!(matches!(
            export_object_table(&emb, [99]),
            Err(TransEError::MissingNode(99))
        ));
    }

    #[test]
    fn invalid_configs() {
        for cfg in [
            TransEConfig {
                dim: 0,
                ..TransEConfig::default()
            },
            TransEConfig {
                margin: 0.0,
                ..TransEConfig::default()
            },
            TransEConfig {
                epochs: 0,
                ..TransEConfig::default()
            },
        ] {
            assert!(train_transe(&[(0, 0, 1)], 2, 1, &cfg).is_err());
        }
    }
}
