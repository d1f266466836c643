//! Per-entity training loop with early stopping on validation F-measure.

use serde::{Deserialize, Serialize};

use crate::evaluation::fmeasure_sets;
use crate::nn::{Optimizer, OptimizerKind, ParameterSet, Rng};

use super::{EsaModel, ModelError};

/// One entity prepared for training: encoded triples, its gold attention
/// and the per-user gold sets used for validation F-measure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub entity_id: String,
    pub pairs: Vec<(usize, usize)>,
    pub gold: Vec<f64>,
    pub user_sets: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Size of the summaries scored on the validation slice.
    pub k: usize,
    pub early_stopping: EarlyStopping,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarlyStopping {
    /// Epochs without a validation improvement before stopping; 0 disables.
    pub patience: usize,
    /// Share of the training entities held out for validation.
    pub validation_fraction: f64,
}

impl Default for EarlyStopping {
    fn default() -> Self {
        Self {
            patience: 20,
            validation_fraction: 0.1,
        }
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            optimizer: OptimizerKind::Adam,
            learning_rate: 1e-4,
            epochs: 200,
            k: 5,
            early_stopping: EarlyStopping::default(),
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub epochs_run: usize,
    /// Epoch (1-based) whose parameters were kept; 0 means the initial ones.
    pub best_epoch: usize,
    pub best_validation_f: Option<f64>,
    pub stopped_early: bool,
    pub train_entities: Vec<String>,
    pub validation_entities: Vec<String>,
    pub loss_history: Vec<f64>,
    pub validation_history: Vec<f64>,
}

/// Shuffles `examples` with `rng` and takes one optimizer step per entity.
/// Returns the mean loss over the epoch.
pub fn train_epoch(
    model: &mut EsaModel,
    examples: &[TrainingExample],
    optimizer: &mut Optimizer,
    rng: &mut Rng,
) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    rng.shuffle(&mut order);
    let mut total = 0.0;
    for i in order {
        let ex = &examples[i];
        model.zero_grad();
        let (loss, _) = model.forward_backward(&ex.pairs, &ex.gold)?;
        optimizer.step(&mut model.parameters_mut());
        total += loss;
    }
    Ok(total / examples.len() as f64)
}

/// Mean top-k F-measure of the model over `examples`.
pub fn validation_fmeasure(
    model: &EsaModel,
    examples: &[TrainingExample],
    k: usize,
) -> Result<f64, ModelError> {
    if examples.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for ex in examples {
        let kk = k.min(ex.pairs.len());
        let selected = model.attention(&ex.pairs)?.topk(kk)?;
        sum += fmeasure_sets(&selected, &ex.user_sets, kk)
            .map_err(|e| ModelError::DimensionMismatch(e.to_string()))?;
    }
    Ok(sum / examples.len() as f64)
}

/// Trains `model` on `examples`. A seeded slice is held out for early
/// stopping and the best-scoring parameters are restored at the end.
pub fn fit(
    model: &mut EsaModel,
    examples: &[TrainingExample],
    config: &TrainConfig,
) -> Result<FitReport, ModelError> {
    let root = Rng::new(config.seed);
    let mut split_rng = root.derive(2);
    let mut order_rng = root.derive(3);

    let mut idx: Vec<usize> = (0..examples.len()).collect();
    split_rng.shuffle(&mut idx);
    let es = config.early_stopping;
    let n_val = if es.patience > 0 && es.validation_fraction > 0.0 && examples.len() >= 2 {
        ((examples.len() as f64 * es.validation_fraction).ceil() as usize)
            .clamp(1, examples.len() - 1)
    } else {
        0
    };
    let (val_idx, train_idx) = idx.split_at(n_val);
    let mut val_idx = val_idx.to_vec();
    let mut train_idx = train_idx.to_vec();
    val_idx.sort_unstable();
    train_idx.sort_unstable();
    let train: Vec<TrainingExample> = train_idx.iter().map(|&i| examples[i].clone()).collect();
    let val: Vec<TrainingExample> = val_idx.iter().map(|&i| examples[i].clone()).collect();

    let mut optimizer = Optimizer::new(config.optimizer, config.learning_rate);
    let mut report = FitReport {
        epochs_run: 0,
        best_epoch: 0,
        best_validation_f: None,
        stopped_early: false,
        train_entities: train.iter().map(|e| e.entity_id.clone()).collect(),
        validation_entities: val.iter().map(|e| e.entity_id.clone()).collect(),
        loss_history: Vec::new(),
        validation_history: Vec::new(),
    };
    let mut best: Option<EsaModel> = None;
    if !val.is_empty() {
        report.best_validation_f = Some(validation_fmeasure(model, &val, config.k)?);
        best = Some(model.clone());
    }
    let mut since_best = 0;
    for epoch in 1..=config.epochs {
        let loss = train_epoch(model, &train, &mut optimizer, &mut order_rng)?;
        report.loss_history.push(loss);
        report.epochs_run = epoch;
        log::debug!("epoch {epoch}: loss {loss:.6}");
        if val.is_empty() {
            report.best_epoch = epoch;
            continue;
        }
        let f = validation_fmeasure(model, &val, config.k)?;
        report.validation_history.push(f);
        if f > report.best_validation_f.unwrap_or(f64::NEG_INFINITY) {
            report.best_validation_f = Some(f);
            report.best_epoch = epoch;
            best = Some(model.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= es.patience {
                report.stopped_early = epoch < config.epochs;
                break;
            }
        }
    }
    if let Some(best) = best {
        *model = best;
    }
    Ok(report)
}
