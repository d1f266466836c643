//! Manifest-driven benchmark loading.
//!
//! `manifest.json` in the benchmark root maps each entity id to its
//! description file and the five top-5 / five top-10 gold files; paths are
//! relative to the manifest's directory.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    parse_ntriples, EntityDescription, GroundTruth, KgError, Source, Triple, USERS_PER_ENTITY,
};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub source: Source,
    pub desc: String,
    pub top5: Vec<String>,
    pub top10: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub entities: Vec<ManifestEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splits: Option<String>,
}

impl Manifest {
    pub fn read(root: &Path) -> Result<Self, KgError> {
        let path = root.join(MANIFEST_FILE);
        let file =
            File::open(&path).map_err(|_| KgError::MissingFile(path.display().to_string()))?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| KgError::BadManifest(e.to_string()))
    }

    pub fn write(&self, root: &Path) -> Result<(), KgError> {
        let text = serde_json::to_string_pretty(self).map_err(|e| KgError::Io(e.to_string()))?;
        std::fs::write(root.join(MANIFEST_FILE), text + "\n")
            .map_err(|e| KgError::Io(e.to_string()))
    }
}

/// Expected entity counts of a benchmark release.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EsbmShape {
    pub dbpedia: usize,
    pub lmdb: usize,
}

pub const ESBM_V1_1: EsbmShape = EsbmShape {
    dbpedia: 125,
    lmdb: 50,
};

impl EsbmShape {
    pub fn total(&self) -> usize {
        self.dbpedia + self.lmdb
    }

    pub fn check(&self, descriptions: &[EntityDescription]) -> Result<(), KgError> {
        let db = descriptions
            .iter()
            .filter(|d| d.source == Source::DBpedia)
            .count();
        let lm = descriptions.len() - db;
        if (db, lm) != (self.dbpedia, self.lmdb) {
            return Err(KgError::UnexpectedShape(format!(
                "expected {} dbpedia + {} lmdb entities, found {db} + {lm}",
                self.dbpedia, self.lmdb
            )));
        }
        Ok(())
    }
}

fn read_nt(path: &Path) -> Result<Vec<Triple>, KgError> {
    let file = File::open(path).map_err(|_| KgError::MissingFile(path.display().to_string()))?;
    parse_ntriples(BufReader::new(file)).map_err(|e| match e {
        KgError::Syntax { line, reason } => KgError::Syntax {
            line,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

fn resolve_gold(
    desc: &EntityDescription,
    files: &[String],
    root: &Path,
) -> Result<Vec<Vec<usize>>, KgError> {
    files
        .iter()
        .map(|f| {
            read_nt(&root.join(f))?
                .iter()
                .map(|t| {
                    desc.position_of(&t.predicate, &t.object).ok_or_else(|| {
                        KgError::GoldTripleNotInDescription {
                            entity: desc.entity_id.clone(),
                            triple: t.to_string(),
                        }
                    })
                })
                .collect()
        })
        .collect()
}

/// Loads every entity listed in `root/manifest.json`, in manifest order.
///
/// Returns the descriptions, their ground truth, and the resolved split file
/// path when the manifest names one.
pub fn load_manifest(
    root: &Path,
) -> Result<(Vec<EntityDescription>, Vec<GroundTruth>, Option<PathBuf>), KgError> {
    if !root.is_dir() {
        return Err(KgError::MissingFile(root.display().to_string()));
    }
    load_with_manifest(root, &Manifest::read(root)?)
}

/// Like [`load_manifest`] with an in-memory manifest whose paths are
/// relative to `root`.
pub fn load_with_manifest(
    root: &Path,
    manifest: &Manifest,
) -> Result<(Vec<EntityDescription>, Vec<GroundTruth>, Option<PathBuf>), KgError> {
    let mut seen = std::collections::HashSet::new();
    let mut descriptions = Vec::with_capacity(manifest.entities.len());
    let mut truths = Vec::with_capacity(manifest.entities.len());
    for entry in &manifest.entities {
        if !seen.insert(entry.id.as_str()) {
            return Err(KgError::BadManifest(format!(
                "duplicate entity id {}",
                entry.id
            )));
        }
        if entry.top5.len() != USERS_PER_ENTITY || entry.top10.len() != USERS_PER_ENTITY {
            return Err(KgError::BadManifest(format!(
                "entity {} must list {USERS_PER_ENTITY} top5 and {USERS_PER_ENTITY} top10 files",
                entry.id
            )));
        }
        let triples = read_nt(&root.join(&entry.desc))?;
        let desc = EntityDescription::new(entry.id.clone(), entry.source, triples)?;
        let top5 = resolve_gold(&desc, &entry.top5, root)?;
        let top10 = resolve_gold(&desc, &entry.top10, root)?;
        truths.push(GroundTruth::new(entry.id.clone(), top5, top10, desc.len())?);
        descriptions.push(desc);
    }
    if descriptions.is_empty() {
        return Err(KgError::BadManifest("no entities".into()));
    }
    let splits = manifest.splits.as_ref().map(|s| root.join(s));
    Ok((descriptions, truths, splits))
}

/// Loads a full benchmark copy and checks it has the v1.1 entity counts.
pub fn load_esbm(root: &Path) -> Result<(Vec<EntityDescription>, Vec<GroundTruth>), KgError> {
    let (descriptions, truths, _) = load_manifest(root)?;
    ESBM_V1_1.check(&descriptions)?;
    Ok((descriptions, truths))
}

/// Builds a manifest by scanning the conventional benchmark layout:
/// `<...dbpedia...|...lmdb...>/<id>/<id>_desc.nt` next to gold files whose
/// names contain `top5` / `top10`.
pub fn discover_manifest(root: &Path) -> Result<Manifest, KgError> {
    let mut entries = Vec::new();
    walk(root, root, &mut entries)?;
    if entries.is_empty() {
        return Err(KgError::MissingFile(format!(
            "no `<id>/<id>_desc.nt` entity directories under {}",
            root.display()
        )));
    }
    entries.sort_by(|a: &ManifestEntry, b| {
        let key = |e: &ManifestEntry| (e.id.parse::<u64>().unwrap_or(u64::MAX), e.id.clone());
        key(a).cmp(&key(b))
    });
    Ok(Manifest {
        entities: entries,
        splits: None,
    })
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<ManifestEntry>) -> Result<(), KgError> {
    let io = |e: std::io::Error| KgError::Io(format!("{}: {e}", dir.display()));
    let mut children: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    children.sort();
    let name = dir
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or_default()
        .to_string();
    let desc = dir.join(format!("{name}_desc.nt"));
    if desc.is_file() {
        let rel = |p: &Path| {
            p.strip_prefix(root)
                .unwrap_or(p)
                .to_string_lossy()
                .replace('\\', "/")
        };
        let lower = rel(dir).to_ascii_lowercase();
        let source = if lower.contains("lmdb") || lower.contains("linkedmdb") {
            Source::LinkedMDB
        } else if lower.contains("dbpedia") {
            Source::DBpedia
        } else {
            return Err(KgError::BadManifest(format!(
                "cannot infer source for {}",
                dir.display()
            )));
        };
        // "top5" is not a substring of "top10", so plain matching is safe.
        let gold = |tag: &str| -> Vec<String> {
            children
                .iter()
                .filter(|p| {
                    let f = p.file_name().and_then(|n| n.to_str()).unwrap_or_default();
                    f.ends_with(".nt") && f.contains(tag)
                })
                .map(|p| rel(p))
                .collect()
        };
        out.push(ManifestEntry {
            id: name,
            source,
            desc: rel(&desc),
            top5: gold("top5"),
            top10: gold("top10"),
        });
        return Ok(());
    }
    for child in children.iter().filter(|p| p.is_dir()) {
        walk(root, child, out)?;
    }
    Ok(())
}
