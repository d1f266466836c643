//! Knowledge-graph ingestion: N-Triples parsing, per-entity descriptions,
//! benchmark ground truth, vocabularies and cross-validation folds.
//!
//! Everything here is built once and read-only afterwards.

mod dataset;
mod esbm;
mod folds;
mod ntriples;
pub mod synthetic;
mod term;
mod vocab;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dataset::{Dataset, DATASET_FORMAT};
pub use esbm::{
    discover_manifest, load_esbm, load_manifest, load_with_manifest, EsbmShape, Manifest,
    ManifestEntry, ESBM_V1_1, MANIFEST_FILE,
};
pub use folds::{build_folds, load_splits, FoldSplit, SplitFile};
pub use ntriples::{parse_line, parse_ntriples, parse_ntriples_str, write_ntriples};
pub use term::{RdfTerm, TermKind, Triple};
pub use vocab::{build_vocabulary, Vocabulary};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KgError {
    #[error("syntax error at line {line}: {reason}")]
    Syntax { line: usize, reason: String },
    #[error("invalid term: {0}")]
    InvalidTerm(String),
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("bad manifest: {0}")]
    BadManifest(String),
    #[error("entity {entity}: gold triple not in description: {triple}")]
    GoldTripleNotInDescription { entity: String, triple: String },
    #[error("entity {entity}: {reason}")]
    BadGroundTruth { entity: String, reason: String },
    #[error("entity {entity}: {reason}")]
    BadDescription { entity: String, reason: String },
    #[error("unexpected benchmark shape: {0}")]
    UnexpectedShape(String),
    #[error("bad split file: {0}")]
    BadSplitFile(String),
    #[error("bad dataset file: {0}")]
    BadDataset(String),
}

/// Which knowledge base an entity was drawn from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "dbpedia")]
    DBpedia,
    #[serde(rename = "lmdb")]
    LinkedMDB,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::DBpedia => "dbpedia",
            Source::LinkedMDB => "lmdb",
        })
    }
}

impl std::str::FromStr for Source {
    type Err = KgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dbpedia" => Ok(Source::DBpedia),
            "lmdb" | "linkedmdb" => Ok(Source::LinkedMDB),
            other => Err(KgError::BadManifest(format!("unknown source `{other}`"))),
        }
    }
}

/// All facts about one subject, in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityDescription {
    pub entity_id: String,
    pub subject: RdfTerm,
    pub triples: Vec<Triple>,
    pub source: Source,
}

impl EntityDescription {
    pub fn new(
        entity_id: impl Into<String>,
        source: Source,
        triples: Vec<Triple>,
    ) -> Result<Self, KgError> {
        let entity_id = entity_id.into();
        let subject = match triples.first() {
            Some(t) => t.subject.clone(),
            None => {
                return Err(KgError::BadDescription {
                    entity: entity_id,
                    reason: "no triples".into(),
                })
            }
        };
        if let Some(t) = triples.iter().find(|t| t.subject != subject) {
            return Err(KgError::BadDescription {
                entity: entity_id,
                reason: format!("triple with foreign subject: {t}"),
            });
        }
        Ok(Self {
            entity_id,
            subject,
            triples,
            source,
        })
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    /// First index whose (predicate, object) equals the given pair.
    pub fn position_of(&self, predicate: &RdfTerm, object: &RdfTerm) -> Option<usize> {
        self.triples
            .iter()
            .position(|t| &t.predicate == predicate && &t.object == object)
    }
}

/// Number of annotators per entity in the benchmark.
pub const USERS_PER_ENTITY: usize = 5;

/// Per-user gold selections, as indices into the entity's triple list.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub entity_id: String,
    pub per_user_top5: Vec<Vec<usize>>,
    pub per_user_top10: Vec<Vec<usize>>,
}

impl GroundTruth {
    pub fn new(
        entity_id: impl Into<String>,
        per_user_top5: Vec<Vec<usize>>,
        per_user_top10: Vec<Vec<usize>>,
        triple_count: usize,
    ) -> Result<Self, KgError> {
        let gt = Self {
            entity_id: entity_id.into(),
            per_user_top5,
            per_user_top10,
        };
        gt.validate(triple_count)?;
        Ok(gt)
    }

    pub fn sets(&self, k: usize) -> Option<&[Vec<usize>]> {
        match k {
            5 => Some(&self.per_user_top5),
            10 => Some(&self.per_user_top10),
            _ => None,
        }
    }

    pub fn validate(&self, triple_count: usize) -> Result<(), KgError> {
        let bad = |reason: String| KgError::BadGroundTruth {
            entity: self.entity_id.clone(),
            reason,
        };
        for (k, sets) in [(5, &self.per_user_top5), (10, &self.per_user_top10)] {
            if sets.len() != USERS_PER_ENTITY {
                return Err(bad(format!(
                    "expected {USERS_PER_ENTITY} top-{k} sets, found {}",
                    sets.len()
                )));
            }
            for (u, set) in sets.iter().enumerate() {
                if set.len() != k {
                    return Err(bad(format!(
                        "user {u} top-{k} set has {} triples",
                        set.len()
                    )));
                }
                if let Some(&i) = set.iter().find(|&&i| i >= triple_count) {
                    return Err(bad(format!(
                        "user {u} top-{k} index {i} out of range {triple_count}"
                    )));
                }
                let mut sorted = set.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != set.len() {
                    return Err(bad(format!("user {u} top-{k} set has duplicate triples")));
                }
            }
        }
        Ok(())
    }

    /// Applies `new_index = mapping[old_index]` to every selection.
    pub fn remapped(&self, mapping: &[usize]) -> Self {
        let map = |sets: &Vec<Vec<usize>>| {
            sets.iter()
                .map(|s| s.iter().map(|&i| mapping[i]).collect())
                .collect()
        };
        Self {
            entity_id: self.entity_id.clone(),
            per_user_top5: map(&self.per_user_top5),
            per_user_top10: map(&self.per_user_top10),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(s: &str, p: &str, o: &str) -> Triple {
        Triple::new(
            RdfTerm::iri(s).unwrap(),
            RdfTerm::iri(p).unwrap(),
            RdfTerm::literal(o),
        )
        .unwrap()
    }

    #[test]
    fn description_invariants() {
        assert!(EntityDescription::new("1", Source::DBpedia, vec![]).is_err());
        let err = EntityDescription::new(
            "1",
            Source::DBpedia,
            vec![t("a:s", "a:p", "x"), t("a:z", "a:p", "y")],
        );
        assert!(matches!(err, Err(KgError::BadDescription { .. })));
        let d = EntityDescription::new(
            "1",
            Source::DBpedia,
            vec![t("a:s", "a:p", "x"), t("a:s", "a:p", "x")],
        )
        .unwrap();
        assert_eq!(
            d.position_of(&RdfTerm::iri("a:p").unwrap(), &RdfTerm::literal("x")),
            Some(0)
        );
    }

    #[test]
    fn ground_truth_validation() {
        let five: Vec<Vec<usize>> = (0..5).map(|_| (0..5).collect()).collect();
        let ten: Vec<Vec<usize>> = (0..5).map(|_| (0..10).collect()).collect();
        assert!(GroundTruth::new("e", five.clone(), ten.clone(), 10).is_ok());
        assert!(GroundTruth::new("e", five.clone(), ten.clone(), 9).is_err());
        assert!(GroundTruth::new("e", five[..4].to_vec(), ten.clone(), 10).is_err());
        let mut dup = five.clone();
        dup[2] = vec![0, 1, 2, 3, 3];
        assert!(GroundTruth::new("e", dup, ten, 10).is_err());
    }
}
