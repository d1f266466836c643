//! The ESA network: per-triple input `[predicate embedding ; frozen object
//! vector]`, a BiLSTM over the entity's triples, and softmax attention of
//! the summary query `h_s` against every encoded triple.

mod attention;
mod bilstm;
mod checkpoint;
mod lstm;
mod train;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use attention::{attention_forward, rank_topk, ranking, AttentionResult};
pub use bilstm::{bilstm_backward, bilstm_encode, BiLstmTrace, EncodedEntity};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
pub use lstm::{lstm_backward, lstm_cell, lstm_forward, LstmParams, LstmTrace};
pub use train::{
    fit, train_epoch, validation_fmeasure, EarlyStopping, FitReport, TrainConfig, TrainingExample,
};

use crate::nn::{cross_entropy, NnError, Parameter, ParameterSet, Rng, Tensor2};
use crate::transe::ObjectLookupTable;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("unknown predicate id {0}")]
    UnknownPredicate(usize),
    #[error("unknown object node id {0}")]
    UnknownObject(usize),
    #[error("entity has no triples")]
    EmptyEntity,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("k = {k} exceeds the entity's {n} triples")]
    KTooLarge { k: usize, n: usize },
    #[error(transparent)]
    Numeric(#[from] NnError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Predicate embedding width.
    pub d_p: usize,
    /// Hidden size of each LSTM direction.
    pub d_h: usize,
    /// Parameters start uniform in `[-init_range, init_range]`.
    pub init_range: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_p: 100,
            d_h: 100,
            init_range: 0.08,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EsaModel {
    pub config: ModelConfig,
    pub predicate_table: Parameter,
    pub forward: LstmParams,
    pub backward: LstmParams,
    objects: Arc<ObjectLookupTable>,
}

impl PartialEq for EsaModel {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.predicate_table == other.predicate_table
            && self.forward == other.forward
            && self.backward == other.backward
            && self.objects.content_hash() == other.objects.content_hash()
    }
}

/// Cross-entropy of the machine attention against the gold attention:
/// `−Σ gold_i · ln(alpha_i)`.
pub fn esa_loss(alpha: &[f64], gold: &[f64]) -> Result<f64, ModelError> {
    if alpha.len() != gold.len() {
        return Err(ModelError::LengthMismatch {
            left: alpha.len(),
            right: gold.len(),
        });
    }
    Ok(cross_entropy(gold, alpha)?)
}

impl EsaModel {
    pub fn new(
        config: ModelConfig,
        predicate_count: usize,
        objects: Arc<ObjectLookupTable>,
    ) -> Self {
        let mut rng = Rng::new(config.seed);
        let d_in = config.d_p + objects.dim();
        let predicate_table = Parameter::new(
            "predicate_embedding",
            Tensor2::uniform(predicate_count, config.d_p, config.init_range, &mut rng),
        );
        let forward = LstmParams::new(
            "lstm_forward",
            d_in,
            config.d_h,
            config.init_range,
            &mut rng,
        );
        let backward = LstmParams::new(
            "lstm_backward",
            d_in,
            config.d_h,
            config.init_range,
            &mut rng,
        );
        Self {
            config,
            predicate_table,
            forward,
            backward,
            objects,
        }
    }

    pub(crate) fn from_parts(
        config: ModelConfig,
        predicate_table: Parameter,
        forward: LstmParams,
        backward: LstmParams,
        objects: Arc<ObjectLookupTable>,
    ) -> Self {
        Self {
            config,
            predicate_table,
            forward,
            backward,
            objects,
        }
    }

    pub fn objects(&self) -> &ObjectLookupTable {
        &self.objects
    }

    pub fn shared_objects(&self) -> Arc<ObjectLookupTable> {
        Arc::clone(&self.objects)
    }

    pub fn d_o(&self) -> usize {
        self.objects.dim()
    }

    pub fn input_width(&self) -> usize {
        self.config.d_p + self.d_o()
    }

    /// `x = [predicate row ; object vector]`.
    pub fn embed_triple(&self, predicate: usize, object: usize) -> Result<Vec<f64>, ModelError> {
        if predicate >= self.predicate_table.value.rows() {
            return Err(ModelError::UnknownPredicate(predicate));
        }
        let o = self
            .objects
            .get(object)
            .map_err(|_| ModelError::UnknownObject(object))?;
        let mut x = Vec::with_capacity(self.input_width());
        x.extend_from_slice(self.predicate_table.value.row(predicate));
        x.extend_from_slice(o);
        Ok(x)
    }

    /// Input matrix (`n × (d_p + d_o)`) for `(predicate, object)` pairs.
    pub fn embed_entity(&self, pairs: &[(usize, usize)]) -> Result<Tensor2, ModelError> {
        if pairs.is_empty() {
            return Err(ModelError::EmptyEntity);
        }
        let mut xs = Tensor2::zeros(pairs.len(), self.input_width());
        for (i, &(p, o)) in pairs.iter().enumerate() {
            xs.row_mut(i).copy_from_slice(&self.embed_triple(p, o)?);
        }
        Ok(xs)
    }

    pub fn encode(&self, pairs: &[(usize, usize)]) -> Result<EncodedEntity, ModelError> {
        let xs = self.embed_entity(pairs)?;
        Ok(bilstm_encode(&xs, &self.forward, &self.backward)?.0)
    }

    /// Inference only; safe to call concurrently.
    pub fn attention(&self, pairs: &[(usize, usize)]) -> Result<AttentionResult, ModelError> {
        Ok(attention_forward(&self.encode(pairs)?))
    }

    pub fn loss(&self, pairs: &[(usize, usize)], gold: &[f64]) -> Result<f64, ModelError> {
        esa_loss(&self.attention(pairs)?.alpha, gold)
    }

    /// Forward pass plus full backpropagation; gradients are accumulated into
    /// the predicate table and both LSTM directions. Object vectors receive
    /// no gradient.
    pub fn forward_backward(
        &mut self,
        pairs: &[(usize, usize)],
        gold: &[f64],
    ) -> Result<(f64, AttentionResult), ModelError> {
        let xs = self.embed_entity(pairs)?;
        let (enc, trace) = bilstm_encode(&xs, &self.forward, &self.backward)?;
        let att = attention_forward(&enc);
        let loss = esa_loss(&att.alpha, gold)?;

        let n = pairs.len();
        let width = enc.h.cols();
        // dL/ds_i = alpha_i − gold_i (Σ gold = 1)
        let ds: Vec<f64> = att.alpha.iter().zip(gold).map(|(a, g)| a - g).collect();
        let mut dh = Tensor2::zeros(n, width);
        let mut dh_s = vec![0.0; width];
        for i in 0..n {
            for (d, q) in dh.row_mut(i).iter_mut().zip(&enc.h_s) {
                *d = ds[i] * q;
            }
            for (d, h) in dh_s.iter_mut().zip(enc.h.row(i)) {
                *d += ds[i] * h;
            }
        }
        let dx = bilstm_backward(
            &xs,
            &trace,
            &dh,
            &dh_s,
            &mut self.forward,
            &mut self.backward,
        );
        let d_p = self.config.d_p;
        for (i, &(p, _)) in pairs.iter().enumerate() {
            for (g, d) in self
                .predicate_table
                .grad
                .row_mut(p)
                .iter_mut()
                .zip(&dx.row(i)[..d_p])
            {
                *g += d;
            }
        }
        Ok((loss, att))
    }

    pub fn zero_grad(&mut self) {
        for p in self.parameters_mut() {
            p.zero_grad();
        }
    }

    pub fn parameter_count(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }
}

impl ParameterSet for EsaModel {
    fn parameters(&self) -> Vec<&Parameter> {
        let mut v = vec![&self.predicate_table];
        v.extend(self.forward.parameters());
        v.extend(self.backward.parameters());
        v
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut v = vec![&mut self.predicate_table];
        v.extend(self.forward.parameters_mut());
        v.extend(self.backward.parameters_mut());
        v
    }
}
