use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::esbm::{load_manifest, load_with_manifest, Manifest};
use super::folds::load_splits;
use super::{
    build_vocabulary, EntityDescription, EsbmShape, FoldSplit, GroundTruth, KgError, RdfTerm,
    Source, Triple, Vocabulary,
};
use crate::nn::Rng;

pub const DATASET_FORMAT: &str = "esa-dataset-v1";

/// A loaded benchmark: descriptions, aligned ground truth, vocabulary and
/// optional predefined splits.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub descriptions: Vec<EntityDescription>,
    pub ground_truth: Vec<GroundTruth>,
    pub vocabulary: Vocabulary,
    pub splits: Option<Vec<FoldSplit>>,
    /// Seed used to permute triples inside each entity, if any.
    pub triple_shuffle_seed: Option<u64>,
    index: HashMap<String, usize>,
}

impl Dataset {
    pub fn new(
        descriptions: Vec<EntityDescription>,
        ground_truth: Vec<GroundTruth>,
        splits: Option<Vec<FoldSplit>>,
    ) -> Result<Self, KgError> {
        if descriptions.is_empty() {
            return Err(KgError::BadDataset("no entities".into()));
        }
        if descriptions.len() != ground_truth.len() {
            return Err(KgError::BadDataset(
                "descriptions and ground truth differ in length".into(),
            ));
        }
        for (d, g) in descriptions.iter().zip(&ground_truth) {
            if d.entity_id != g.entity_id {
                return Err(KgError::BadDataset(format!(
                    "misaligned entity {} / {}",
                    d.entity_id, g.entity_id
                )));
            }
            g.validate(d.len())?;
        }
        let index = descriptions
            .iter()
            .enumerate()
            .map(|(i, d)| (d.entity_id.clone(), i))
            .collect::<HashMap<_, _>>();
        if index.len() != descriptions.len() {
            return Err(KgError::BadDataset("duplicate entity ids".into()));
        }
        let vocabulary = build_vocabulary(&descriptions);
        Ok(Self {
            descriptions,
            ground_truth,
            vocabulary,
            splits,
            triple_shuffle_seed: None,
            index,
        })
    }

    /// Loads a benchmark directory through its manifest. With `shape`, the
    /// entity counts are checked as well.
    pub fn from_benchmark(root: &Path, shape: Option<EsbmShape>) -> Result<Self, KgError> {
        Self::assemble(load_manifest(root)?, shape)
    }

    /// Loads a benchmark directory with an explicit manifest.
    pub fn from_manifest(
        root: &Path,
        manifest: &Manifest,
        shape: Option<EsbmShape>,
    ) -> Result<Self, KgError> {
        if !root.is_dir() {
            return Err(KgError::MissingFile(root.display().to_string()));
        }
        Self::assemble(load_with_manifest(root, manifest)?, shape)
    }

    fn assemble(
        (descriptions, truths, split_path): (
            Vec<EntityDescription>,
            Vec<GroundTruth>,
            Option<std::path::PathBuf>,
        ),
        shape: Option<EsbmShape>,
    ) -> Result<Self, KgError> {
        if let Some(shape) = shape {
            shape.check(&descriptions)?;
        }
        let ids: Vec<String> = descriptions.iter().map(|d| d.entity_id.clone()).collect();
        let splits = split_path.map(|p| load_splits(&p, &ids)).transpose()?;
        Self::new(descriptions, truths, splits)
    }

    pub fn len(&self) -> usize {
        self.descriptions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptions.is_empty()
    }

    pub fn entity_ids(&self) -> Vec<String> {
        self.descriptions
            .iter()
            .map(|d| d.entity_id.clone())
            .collect()
    }

    pub fn position(&self, entity_id: &str) -> Option<usize> {
        self.index.get(entity_id).copied()
    }

    /// Looks an entity up by benchmark id or by subject IRI.
    pub fn find(&self, id_or_iri: &str) -> Option<usize> {
        self.position(id_or_iri).or_else(|| {
            let iri = id_or_iri.trim_start_matches('<').trim_end_matches('>');
            self.descriptions
                .iter()
                .position(|d| d.subject.lexical == iri)
        })
    }

    /// `(predicate id, object node id)` per triple of entity `i`.
    pub fn encoded_pairs(&self, i: usize) -> Vec<(usize, usize)> {
        self.descriptions[i]
            .triples
            .iter()
            .map(|t| {
                (
                    self.vocabulary
                        .predicate_id(&t.predicate)
                        .expect("vocabulary covers dataset"),
                    self.vocabulary
                        .node_id(&t.object)
                        .expect("vocabulary covers dataset"),
                )
            })
            .collect()
    }

    /// Distinct `(subject, predicate, object)` id triples across all entities,
    /// in first-seen order.
    pub fn id_triples(&self) -> Vec<(usize, usize, usize)> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for d in &self.descriptions {
            let s = self
                .vocabulary
                .node_id(&d.subject)
                .expect("subject in vocabulary");
            for t in &d.triples {
                let p = self
                    .vocabulary
                    .predicate_id(&t.predicate)
                    .expect("predicate in vocabulary");
                let o = self
                    .vocabulary
                    .node_id(&t.object)
                    .expect("object in vocabulary");
                if seen.insert((s, p, o)) {
                    out.push((s, p, o));
                }
            }
        }
        out
    }

    /// Sorted ids of every node that occurs in object position.
    pub fn object_node_ids(&self) -> Vec<usize> {
        let set: std::collections::BTreeSet<usize> = self
            .descriptions
            .iter()
            .flat_map(|d| d.triples.iter())
            .map(|t| {
                self.vocabulary
                    .node_id(&t.object)
                    .expect("object in vocabulary")
            })
            .collect();
        set.into_iter().collect()
    }

    /// Permutes the triples of every entity with a seeded shuffle and remaps
    /// the ground truth accordingly.
    pub fn with_shuffled_triples(&self, seed: u64) -> Self {
        let root = Rng::new(seed);
        let mut descriptions = Vec::with_capacity(self.len());
        let mut truths = Vec::with_capacity(self.len());
        for (i, (d, g)) in self.descriptions.iter().zip(&self.ground_truth).enumerate() {
            let mut order: Vec<usize> = (0..d.len()).collect();
            root.derive(i as u64).shuffle(&mut order);
            let mut old_to_new = vec![0; d.len()];
            for (new, &old) in order.iter().enumerate() {
                old_to_new[old] = new;
            }
            descriptions.push(EntityDescription {
                triples: order.iter().map(|&o| d.triples[o].clone()).collect(),
                ..d.clone()
            });
            truths.push(g.remapped(&old_to_new));
        }
        let mut out = Self::new(descriptions, truths, self.splits.clone())
            .expect("permutation preserves validity");
        out.triple_shuffle_seed = Some(seed);
        out
    }

    pub fn to_json(&self) -> String {
        self.to_json_with(None)
    }

    /// Serializes with an optional run configuration echoed into the file.
    pub fn to_json_with(&self, run_config: Option<&serde_json::Value>) -> String {
        let file = DatasetFile {
            format: DATASET_FORMAT.to_string(),
            run_config: run_config.cloned(),
            triple_shuffle_seed: self.triple_shuffle_seed,
            vocabulary: VocabularyFile {
                predicates: self
                    .vocabulary
                    .predicates()
                    .iter()
                    .map(|t| t.to_string())
                    .collect(),
                nodes: self
                    .vocabulary
                    .nodes()
                    .iter()
                    .map(|t| t.to_string())
                    .collect(),
            },
            entities: self
                .descriptions
                .iter()
                .enumerate()
                .map(|(i, d)| EntityFile {
                    id: d.entity_id.clone(),
                    source: d.source,
                    subject: self
                        .vocabulary
                        .node_id(&d.subject)
                        .expect("subject in vocabulary"),
                    triples: self
                        .encoded_pairs(i)
                        .into_iter()
                        .map(|(p, o)| [p, o])
                        .collect(),
                })
                .collect(),
            ground_truth: self.ground_truth.clone(),
            splits: self.splits.clone(),
        };
        serde_json::to_string(&file).expect("dataset serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self, KgError> {
        let file: DatasetFile =
            serde_json::from_str(text).map_err(|e| KgError::BadDataset(e.to_string()))?;
        if file.format != DATASET_FORMAT {
            return Err(KgError::BadDataset(format!(
                "format `{}`, expected `{DATASET_FORMAT}`",
                file.format
            )));
        }
        let parse_all = |v: &[String]| {
            v.iter()
                .map(|s| RdfTerm::parse(s))
                .collect::<Result<Vec<_>, _>>()
        };
        let vocabulary = Vocabulary::from_terms(
            parse_all(&file.vocabulary.predicates)?,
            parse_all(&file.vocabulary.nodes)?,
        )?;
        let node = |id: usize| {
            vocabulary
                .node(id)
                .cloned()
                .ok_or_else(|| KgError::BadDataset(format!("node id {id} out of range")))
        };
        let mut descriptions = Vec::with_capacity(file.entities.len());
        for e in &file.entities {
            let subject = node(e.subject)?;
            let triples = e
                .triples
                .iter()
                .map(|&[p, o]| {
                    let predicate = vocabulary.predicate(p).cloned().ok_or_else(|| {
                        KgError::BadDataset(format!("predicate id {p} out of range"))
                    })?;
                    Triple::new(subject.clone(), predicate, node(o)?)
                })
                .collect::<Result<Vec<_>, _>>()?;
            descriptions.push(EntityDescription::new(e.id.clone(), e.source, triples)?);
        }
        let mut ds = Self::new(descriptions, file.ground_truth, file.splits)?;
        if ds.vocabulary != vocabulary {
            return Err(KgError::BadDataset(
                "stored vocabulary does not match entities".into(),
            ));
        }
        ds.triple_shuffle_seed = file.triple_shuffle_seed;
        Ok(ds)
    }

    pub fn read(path: &Path) -> Result<Self, KgError> {
        let text = std::fs::read_to_string(path)
            .map_err(|_| KgError::MissingFile(path.display().to_string()))?;
        Self::from_json(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), KgError> {
        std::fs::write(path, self.to_json())
            .map_err(|e| KgError::Io(format!("{}: {e}", path.display())))
    }

    pub fn count_by_source(&self, source: Source) -> usize {
        self.descriptions
            .iter()
            .filter(|d| d.source == source)
            .count()
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetFile {
    format: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    run_config: Option<serde_json::Value>,
    triple_shuffle_seed: Option<u64>,
    vocabulary: VocabularyFile,
    entities: Vec<EntityFile>,
    ground_truth: Vec<GroundTruth>,
    splits: Option<Vec<FoldSplit>>,
}

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    predicates: Vec<String>,
    nodes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct EntityFile {
    id: String,
    source: Source,
    subject: usize,
    triples: Vec<[usize; 2]>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg_store::synthetic::{generate, SyntheticSpec};

    fn small() -> Dataset {
        generate(&SyntheticSpec {
            dbpedia: 5,
            lmdb: 3,
            ..SyntheticSpec::default()
        })
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ds = small();
        let text = ds.to_json();
        let back = Dataset::from_json(&text).unwrap();
        assert_eq!(back, ds);
        assert_eq!(back.to_json(), text);
    }

    #[test]
    fn rejects_wrong_format() {
        let text = small().to_json().replace(DATASET_FORMAT, "esa-dataset-v0");
        assert!(matches!(
            Dataset::from_json(&text),
            Err(KgError::BadDataset(_))
        ));
    }

    #[test]
    fn shuffle_keeps_gold_triples() {
        let ds = small();
        let sh = ds.with_shuffled_triples(3);
        assert_eq!(sh.triple_shuffle_seed, Some(3));
        for ((d0, g0), (d1, g1)) in ds
            .descriptions
            .iter()
            .zip(&ds.ground_truth)
            .zip(sh.descriptions.iter().zip(&sh.ground_truth))
        {
            for (s0, s1) in g0.per_user_top10.iter().zip(&g1.per_user_top10) {
                let mut a: Vec<&Triple> = s0.iter().map(|&i| &d0.triples[i]).collect();
                let mut b: Vec<&Triple> = s1.iter().map(|&i| &d1.triples[i]).collect();
                a.sort_by_key(|t| t.to_string());
                b.sort_by_key(|t| t.to_string());
                assert_eq!(a, b);
            }
        }
        assert_ne!(sh.descriptions, ds.descriptions);
        assert_eq!(ds.with_shuffled_triples(3), sh);
    }

    #[test]
    fn lookup_by_id_or_iri() {
        let ds = small();
        let iri = ds.descriptions[2].subject.lexical.clone();
        assert_eq!(ds.find(&ds.descriptions[2].entity_id), Some(2));
        assert_eq!(ds.find(&iri), Some(2));
        assert_eq!(ds.find(&format!("<{iri}>")), Some(2));
        assert_eq!(ds.find("nope"), None);
    }
}
