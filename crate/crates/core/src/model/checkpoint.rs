//! `esa-model-v1` checkpoints: a JSON header plus parameter blobs in
//! declared order. The frozen object table travels with the model so a
//! checkpoint is usable on its own.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::nn::{Parameter, ParameterSet, Tensor2};
use crate::transe::ObjectLookupTable;

use super::{EsaModel, LstmParams, ModelConfig, ModelError};

pub const CHECKPOINT_FORMAT: &str = "esa-model-v1";

const PARAMETER_ORDER: [&str; 7] = [
    "predicate_embedding",
    "lstm_forward.w",
    "lstm_forward.u",
    "lstm_forward.b",
    "lstm_backward.w",
    "lstm_backward.u",
    "lstm_backward.b",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Blob {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectBlob {
    pub node_ids: Vec<usize>,
    pub dim: usize,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub d_p: usize,
    pub d_o: usize,
    pub d_h: usize,
    pub seed: u64,
    pub epoch: usize,
    pub predicate_count: usize,
    pub vocabulary_fingerprint: String,
    pub object_table_hash: String,
    /// Effective run configuration, echoed verbatim.
    pub config: serde_json::Value,
    /// Training metadata (fold, entities, histories).
    pub training: serde_json::Value,
    pub model: ModelConfig,
    pub parameters: Vec<Blob>,
    pub objects: ObjectBlob,
}

impl Checkpoint {
    pub fn from_model(
        model: &EsaModel,
        epoch: usize,
        vocabulary_fingerprint: &str,
        config: serde_json::Value,
        training: serde_json::Value,
    ) -> Self {
        let parameters = model
            .parameters()
            .into_iter()
            .map(|p| Blob {
                name: p.name.clone(),
                rows: p.value.rows(),
                cols: p.value.cols(),
                data: p.value.as_slice().to_vec(),
            })
            .collect();
        let objects = model.objects();
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            d_p: model.config.d_p,
            d_o: model.d_o(),
            d_h: model.config.d_h,
            seed: model.config.seed,
            epoch,
            predicate_count: model.predicate_table.value.rows(),
            vocabulary_fingerprint: vocabulary_fingerprint.to_string(),
            object_table_hash: objects.content_hash(),
            config,
            training,
            model: model.config.clone(),
            parameters,
            objects: ObjectBlob {
                node_ids: objects.node_ids(),
                dim: objects.dim(),
                data: objects.vectors().as_slice().to_vec(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(ModelError::Checkpoint(format!(
                "format `{}`, expected `{CHECKPOINT_FORMAT}`",
                ck.format
            )));
        }
        Ok(ck)
    }

    pub fn read(path: &Path) -> Result<Self, ModelError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", path.display())))
    }

    /// Rebuilds the model after checking it against the dataset's
    /// vocabulary and, when given, an embedding-derived object table.
    pub fn into_model(
        self,
        vocabulary_fingerprint: &str,
        predicate_count: usize,
        expected_objects: Option<&ObjectLookupTable>,
    ) -> Result<EsaModel, ModelError> {
        let mismatch = |what: String| Err(ModelError::DimensionMismatch(what));
        if self.vocabulary_fingerprint != vocabulary_fingerprint {
            return mismatch("checkpoint was trained on a different vocabulary".into());
        }
        if self.predicate_count != predicate_count {
            return mismatch(format!(
                "checkpoint has {} predicates, dataset has {predicate_count}",
                self.predicate_count
            ));
        }
        if self.model.d_p != self.d_p || self.model.d_h != self.d_h || self.objects.dim != self.d_o
        {
            return mismatch("header dimensions disagree with the model section".into());
        }
        let rows = self.objects.node_ids.len();
        let vectors = Tensor2::from_vec(rows, self.objects.dim, self.objects.data)?;
        let objects = ObjectLookupTable::from_parts(self.objects.node_ids, vectors)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if objects.content_hash() != self.object_table_hash {
            return Err(ModelError::Checkpoint(
                "object table hash does not match its contents".into(),
            ));
        }
        if let Some(expected) = expected_objects {
            if expected.content_hash() != self.object_table_hash {
                return mismatch("object vectors differ from the supplied embeddings".into());
            }
        }

        let d_in = self.d_p + self.d_o;
        let shapes = [
            (predicate_count, self.d_p),
            (4 * self.d_h, d_in),
            (4 * self.d_h, self.d_h),
            (1, 4 * self.d_h),
            (4 * self.d_h, d_in),
            (4 * self.d_h, self.d_h),
            (1, 4 * self.d_h),
        ];
        if self.parameters.len() != PARAMETER_ORDER.len() {
            return mismatch(format!(
                "{} parameter blobs, expected 7",
                self.parameters.len()
            ));
        }
        let mut params = Vec::with_capacity(7);
        for ((blob, name), shape) in self.parameters.into_iter().zip(PARAMETER_ORDER).zip(shapes) {
            if blob.name != name || (blob.rows, blob.cols) != shape {
                return mismatch(format!(
                    "blob `{}` {}x{}, expected `{name}` {}x{}",
                    blob.name, blob.rows, blob.cols, shape.0, shape.1
                ));
            }
            params.push(Parameter::new(
                name,
                Tensor2::from_vec(blob.rows, blob.cols, blob.data)?,
            ));
        }
        let mut it = params.into_iter();
        let mut next = || it.next().expect("seven blobs");
        let predicate_table = next();
        let forward = LstmParams {
            w: next(),
            u: next(),
            b: next(),
        };
        let backward = LstmParams {
            w: next(),
            u: next(),
            b: next(),
        };
        Ok(EsaModel::from_parts(
            self.model,
            predicate_table,
            forward,
            backward,
            Arc::new(objects),
        ))
    }
}
