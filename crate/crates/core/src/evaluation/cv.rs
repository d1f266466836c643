use std::collections::BTreeSet;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kg_store::{build_folds, Dataset, FoldSplit, Source};
use crate::model::{fit, EsaModel, FitReport, ModelConfig, TrainConfig, TrainingExample};
use crate::nn::Rng;
use crate::numfmt::sig17;
use crate::supervision::{build_gold_attention, GoldMode};
use crate::transe::ObjectLookupTable;

use super::{fmeasure_entity, map_entity, oracle_ranking, EvalError, FrequencyBaseline};

pub const METRICS_FORMAT: &str = "esa-metrics-v1";

const SYSTEMS: [&str; 3] = ["esa", "frequency", "oracle"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    /// `None` supervises each k with its own gold lists.
    pub gold_mode: Option<GoldMode>,
    pub ks: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            train: TrainConfig::default(),
            gold_mode: None,
            ks: vec![5, 10],
            folds: 5,
            seed: 1,
        }
    }
}

impl CvConfig {
    pub fn gold_mode_for(&self, k: usize) -> Result<GoldMode, EvalError> {
        match self.gold_mode {
            Some(m) => Ok(m),
            None => GoldMode::for_k(k).ok_or(EvalError::UnsupportedK(k)),
        }
    }

    /// Dataset-provided splits win; otherwise a seeded partition.
    pub fn folds_for(&self, dataset: &Dataset) -> Vec<FoldSplit> {
        dataset
            .splits
            .clone()
            .unwrap_or_else(|| build_folds(&dataset.entity_ids(), self.folds, self.seed))
    }

    /// Independent seed for one (k, fold) training run.
    pub fn run_seed(&self, k: usize, fold_id: usize) -> u64 {
        Rng::new(self.seed)
            .derive(((k as u64) << 16) | fold_id as u64)
            .next_u64()
    }
}

#[derive(Debug, Clone)]
pub struct FoldModel {
    pub k: usize,
    pub fold_id: usize,
    pub train_entity_ids: Vec<String>,
    pub test_entity_ids: Vec<String>,
    pub model: EsaModel,
    pub fit: Option<FitReport>,
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: MetricsReport,
    pub models: Vec<FoldModel>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub system: String,
    pub k: usize,
    pub subset: String,
    pub entities: usize,
    pub f_measure: f64,
    pub map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub k: usize,
    pub fold_id: usize,
    pub test_entities: usize,
    pub esa_f_measure: f64,
    pub esa_map: f64,
    pub baseline_f_measure: f64,
    pub baseline_map: f64,
    pub epochs_run: Option<usize>,
    pub best_epoch: Option<usize>,
    pub best_validation_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityRecord {
    pub k: usize,
    pub fold_id: usize,
    pub entity_id: String,
    pub source: Source,
    pub esa_f_measure: f64,
    pub esa_map: f64,
    pub baseline_f_measure: f64,
    pub baseline_map: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub format: String,
    pub seed: u64,
    pub config: serde_json::Value,
    /// Per system, k and subset (`dbpedia`, `lmdb`, `all`). `all` averages
    /// over every entity rather than over the two subset means.
    pub results: Vec<MetricRow>,
    /// ESA minus the frequency baseline for each k and subset.
    pub baseline_delta: Vec<MetricRow>,
    pub folds: Vec<FoldRecord>,
    pub entities: Vec<EntityRecord>,
}

impl MetricsReport {
    pub fn metric(&self, system: &str, k: usize, subset: &str) -> Option<&MetricRow> {
        self.results
            .iter()
            .find(|r| r.system == system && r.k == k && r.subset == subset)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Flat table `system,k,subset,entities,f_measure,map`, deltas included.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,k,subset,entities,f_measure,map\n");
        for r in self.results.iter().chain(&self.baseline_delta) {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.system,
                r.k,
                r.subset,
                r.entities,
                sig17(r.f_measure),
                sig17(r.map)
            ));
        }
        out
    }
}

pub fn training_examples(
    dataset: &Dataset,
    entity_ids: &[String],
    k: usize,
    mode: GoldMode,
) -> Result<Vec<TrainingExample>, EvalError> {
    entity_ids
        .iter()
        .map(|id| {
            let i = dataset
                .position(id)
                .ok_or_else(|| EvalError::UnknownEntity(id.clone()))?;
            let desc = &dataset.descriptions[i];
            let gt = &dataset.ground_truth[i];
            let gold = build_gold_attention(desc, gt, mode)?;
            Ok(TrainingExample {
                entity_id: id.clone(),
                pairs: dataset.encoded_pairs(i),
                gold: gold.alpha_bar,
                user_sets: gt.sets(k).ok_or(EvalError::UnsupportedK(k))?.to_vec(),
            })
        })
        .collect()
}

/// Trains one model for `k` on the fold's training entities.
pub fn train_fold(
    dataset: &Dataset,
    objects: Arc<ObjectLookupTable>,
    fold: &FoldSplit,
    k: usize,
    config: &CvConfig,
) -> Result<FoldModel, EvalError> {
    let seed = config.run_seed(k, fold.fold_id);
    let examples = training_examples(dataset, &fold.train_entity_ids, k, config.gold_mode_for(k)?)?;
    let mut model = EsaModel::new(
        ModelConfig {
            seed,
            ..config.model.clone()
        },
        dataset.vocabulary.predicate_count(),
        objects,
    );
    let train = TrainConfig {
        k,
        seed,
        ..config.train.clone()
    };
    let report = fit(&mut model, &examples, &train)?;
    log::info!(
        "k={k} fold={}: {} epochs, best epoch {}, validation F {:?}",
        fold.fold_id,
        report.epochs_run,
        report.best_epoch,
        report.best_validation_f
    );
    Ok(FoldModel {
        k,
        fold_id: fold.fold_id,
        train_entity_ids: fold.train_entity_ids.clone(),
        test_entity_ids: fold.test_entity_ids.clone(),
        model,
        fit: Some(report),
    })
}

/// Trains a model per k and fold, then evaluates all of them.
pub fn cross_validate(
    dataset: &Dataset,
    objects: Arc<ObjectLookupTable>,
    config: &CvConfig,
    config_echo: serde_json::Value,
) -> Result<CvOutcome, EvalError> {
    let folds = config.folds_for(dataset);
    let mut models = Vec::new();
    for &k in &config.ks {
        for fold in &folds {
            models.push(train_fold(dataset, Arc::clone(&objects), fold, k, config)?);
        }
    }
    let report = evaluate_models(dataset, &models, config.seed, config_echo)?;
    Ok(CvOutcome { report, models })
}

struct Scored {
    source: Source,
    entity_id: String,
    // per system: (F, MAP)
    values: [(f64, f64); 3],
}

fn score_entity(
    dataset: &Dataset,
    i: usize,
    k: usize,
    model: &EsaModel,
    baseline: &FrequencyBaseline,
) -> Result<Scored, EvalError> {
    let desc = &dataset.descriptions[i];
    let gt = &dataset.ground_truth[i];
    let rankings = [
        model.attention(&dataset.encoded_pairs(i))?.ranking(),
        baseline.rank(desc),
        oracle_ranking(gt, k, desc.len())?,
    ];
    let mut values = [(0.0, 0.0); 3];
    for (v, r) in values.iter_mut().zip(&rankings) {
        if r.len() < k {
            return Err(crate::model::ModelError::KTooLarge { k, n: r.len() }.into());
        }
        *v = (fmeasure_entity(&r[..k], gt, k)?, map_entity(r, gt, k)?);
    }
    Ok(Scored {
        source: desc.source,
        entity_id: desc.entity_id.clone(),
        values,
    })
}

fn mean(xs: impl Iterator<Item = f64>) -> (usize, f64) {
    let (n, s) = xs.fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
    (n, if n == 0 { 0.0 } else { s / n as f64 })
}

/// Scores every fold model on its test entities (in parallel across
/// entities) alongside the frequency baseline and the count oracle.
pub fn evaluate_models(
    dataset: &Dataset,
    models: &[FoldModel],
    seed: u64,
    config: serde_json::Value,
) -> Result<MetricsReport, EvalError> {
    let mut report = MetricsReport {
        format: METRICS_FORMAT.to_string(),
        seed,
        config,
        results: Vec::new(),
        baseline_delta: Vec::new(),
        folds: Vec::new(),
        entities: Vec::new(),
    };
    let ks: BTreeSet<usize> = models.iter().map(|m| m.k).collect();
    for k in ks {
        let mut fold_models: Vec<&FoldModel> = models.iter().filter(|m| m.k == k).collect();
        fold_models.sort_by_key(|m| m.fold_id);
        let mut scored: Vec<Scored> = Vec::new();
        for fm in fold_models {
            let train: Vec<_> = fm
                .train_entity_ids
                .iter()
                .map(|id| {
                    dataset
                        .position(id)
                        .map(|i| &dataset.descriptions[i])
                        .ok_or_else(|| EvalError::UnknownEntity(id.clone()))
                })
                .collect::<Result<_, _>>()?;
            let baseline = FrequencyBaseline::fit(train);
            let positions: Vec<usize> = fm
                .test_entity_ids
                .iter()
                .map(|id| {
                    dataset
                        .position(id)
                        .ok_or_else(|| EvalError::UnknownEntity(id.clone()))
                })
                .collect::<Result<_, _>>()?;
            let fold_scores: Vec<Scored> = positions
                .par_iter()
                .map(|&i| score_entity(dataset, i, k, &fm.model, &baseline))
                .collect::<Result<_, _>>()?;

            let (n, esa_f) = mean(fold_scores.iter().map(|s| s.values[0].0));
            report.folds.push(FoldRecord {
                k,
                fold_id: fm.fold_id,
                test_entities: n,
                esa_f_measure: esa_f,
                esa_map: mean(fold_scores.iter().map(|s| s.values[0].1)).1,
                baseline_f_measure: mean(fold_scores.iter().map(|s| s.values[1].0)).1,
                baseline_map: mean(fold_scores.iter().map(|s| s.values[1].1)).1,
                epochs_run: fm.fit.as_ref().map(|f| f.epochs_run),
                best_epoch: fm.fit.as_ref().map(|f| f.best_epoch),
                best_validation_f: fm.fit.as_ref().and_then(|f| f.best_validation_f),
            });
            for s in &fold_scores {
                report.entities.push(EntityRecord {
                    k,
                    fold_id: fm.fold_id,
                    entity_id: s.entity_id.clone(),
                    source: s.source,
                    esa_f_measure: s.values[0].0,
                    esa_map: s.values[0].1,
                    baseline_f_measure: s.values[1].0,
                    baseline_map: s.values[1].1,
                });
            }
            scored.extend(fold_scores);
        }

        let subsets: [(&str, Option<Source>); 3] = [
            ("dbpedia", Some(Source::DBpedia)),
            ("lmdb", Some(Source::LinkedMDB)),
            ("all", None),
        ];
        for (name, filter) in subsets {
            let members: Vec<&Scored> = scored
                .iter()
                .filter(|s| filter.map_or(true, |src| s.source == src))
                .collect();
            if members.is_empty() {
                continue;
            }
            let mut rows = Vec::new();
            for (si, system) in SYSTEMS.iter().enumerate() {
                let (n, f) = mean(members.iter().map(|s| s.values[si].0));
                let (_, m) = mean(members.iter().map(|s| s.values[si].1));
                rows.push(MetricRow {
                    system: system.to_string(),
                    k,
                    subset: name.to_string(),
                    entities: n,
                    f_measure: f,
                    map: m,
                });
            }
            report.baseline_delta.push(MetricRow {
                system: "esa-frequency".into(),
                k,
                subset: name.to_string(),
                entities: rows[0].entities,
                f_measure: rows[0].f_measure - rows[1].f_measure,
                map: rows[0].map - rows[1].map,
            });
            report.results.extend(rows);
        }
    }
    Ok(report)
}
