//! Run configuration: defaults, overlaid by a TOML file, overlaid by flags.

use std::path::Path;

use serde::{Deserialize, Serialize};

use esa_core::evaluation::CvConfig;
use esa_core::model::{EarlyStopping, ModelConfig, TrainConfig};
use esa_core::nn::OptimizerKind;
use esa_core::supervision::GoldMode;
use esa_core::transe::TransEConfig;

use crate::error::{CliError, CliResult};

/// How gold attention is built for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum GoldChoice {
    /// Each k uses its own gold lists.
    PerK,
    K5,
    K10,
    /// Top-5 and top-10 counts summed.
    Both,
}

impl GoldChoice {
    pub fn mode(self) -> Option<GoldMode> {
        match self {
            Self::PerK => None,
            Self::K5 => Some(GoldMode::K5),
            Self::K10 => Some(GoldMode::K10),
            Self::Both => Some(GoldMode::Both),
        }
    }

    pub fn mode_for(self, k: usize) -> Option<GoldMode> {
        self.mode().or_else(|| GoldMode::for_k(k))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransESettings {
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub negatives: usize,
}

impl Default for TransESettings {
    fn default() -> Self {
        let d = TransEConfig::default();
        Self {
            margin: d.margin,
            learning_rate: d.learning_rate,
            epochs: d.epochs,
            batch_size: d.batch_size,
            negatives: d.negative_samples_per_positive,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<String>,
    pub embeddings: Option<String>,
    pub output: Option<String>,
    pub seed: u64,
    pub d_p: usize,
    /// Object vector width, i.e. the TransE dimension.
    pub d_o: usize,
    pub d_h: usize,
    pub init_range: f64,
    pub optimizer: OptimizerKind,
    pub learning_rate: f64,
    pub epochs: usize,
    pub patience: usize,
    pub validation_fraction: f64,
    pub ks: Vec<usize>,
    pub gold_mode: GoldChoice,
    pub folds: usize,
    pub transe: TransESettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        let model = ModelConfig::default();
        let train = TrainConfig::default();
        Self {
            dataset: None,
            embeddings: None,
            output: None,
            seed: 1,
            d_p: model.d_p,
            d_o: TransEConfig::default().dim,
            d_h: model.d_h,
            init_range: model.init_range,
            optimizer: train.optimizer,
            learning_rate: train.learning_rate,
            epochs: train.epochs,
            patience: train.early_stopping.patience,
            validation_fraction: train.early_stopping.validation_fraction,
            ks: vec![5, 10],
            gold_mode: GoldChoice::PerK,
            folds: 5,
            transe: TransESettings::default(),
        }
    }
}

impl RunConfig {
    /// Defaults, then the config file (if any).
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        if !path.is_file() {
            return Err(CliError::missing(path));
        }
        let text =
            std::fs::read_to_string(path).map_err(|e| CliError::new("E_IO", e.to_string()))?;
        toml::from_str(&text)
            .map_err(|e| CliError::new("E_CONFIG", format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> CliResult<()> {
        let usage = |m: &str| Err(CliError::new("E_USAGE", m.to_string()));
        if self.d_p == 0 || self.d_o == 0 || self.d_h == 0 {
            return usage("dimensions must be positive");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return usage("learning rate must be positive");
        }
        if self.epochs == 0 {
            return usage("epochs must be positive");
        }
        if self.folds < 2 {
            return usage("at least 2 folds are needed");
        }
        if self.ks.is_empty() || self.ks.iter().any(|k| *k != 5 && *k != 10) {
            return usage("k must be 5, 10 or both");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return usage("validation fraction must be in [0, 1)");
        }
        Ok(())
    }

    pub fn echo(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn transe_config(&self) -> TransEConfig {
        TransEConfig {
            dim: self.d_o,
            margin: self.transe.margin,
            learning_rate: self.transe.learning_rate,
            epochs: self.transe.epochs,
            negative_samples_per_positive: self.transe.negatives,
            batch_size: self.transe.batch_size,
            seed: self.seed,
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            model: ModelConfig {
                d_p: self.d_p,
                d_h: self.d_h,
                init_range: self.init_range,
                seed: self.seed,
            },
            train: TrainConfig {
                optimizer: self.optimizer,
                learning_rate: self.learning_rate,
                epochs: self.epochs,
                k: self.ks[0],
                early_stopping: EarlyStopping {
                    patience: self.patience,
                    validation_fraction: self.validation_fraction,
                },
                seed: self.seed,
            },
            gold_mode: self.gold_mode.mode(),
            ks: self.ks.clone(),
            folds: self.folds,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library() {
        let c = RunConfig::default();
        assert_eq!((c.d_p, c.d_o, c.d_h), (100, 100, 100));
        assert_eq!(c.learning_rate, 1e-4);
        assert_eq!(c.optimizer, OptimizerKind::Adam);
        assert_eq!(c.ks, vec![5, 10]);
        c.validate().unwrap();
    }

    #[test]
    fn file_overrides_defaults_only_where_given() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "seed = 9\nd_h = 32\ngold_mode = \"both\"\n[transe]\nmargin = 2.0\n",
        )
        .unwrap();
        let c = RunConfig::load(Some(&path)).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.d_h, 32);
        assert_eq!(c.gold_mode, GoldChoice::Both);
        assert_eq!(c.transe.margin, 2.0);
        assert_eq!(c.transe.epochs, 1000);
        assert_eq!(c.d_p, 100);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "sed = 9\n").unwrap();
        assert_eq!(RunConfig::load(Some(&path)).unwrap_err().code, "E_CONFIG");
        assert_eq!(
            RunConfig::load(Some(&dir.path().join("nope.toml")))
                .unwrap_err()
                .code,
            "E_MISSING_INPUT"
        );
    }
}
