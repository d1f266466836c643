use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::KgError;
use crate::nn::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_id: usize,
    pub train_entity_ids: Vec<String>,
    pub test_entity_ids: Vec<String>,
}

/// On-disk split description: one list of test entity ids per fold.
/// Training sets are the complements.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFile {
    pub folds: Vec<SplitFold>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitFold {
    pub test: Vec<String>,
}

fn complement(entity_ids: &[String], test: &HashSet<&str>) -> Vec<String> {
    entity_ids
        .iter()
        .filter(|id| !test.contains(id.as_str()))
        .cloned()
        .collect()
}

/// Seeded shuffle followed by a contiguous partition; fold sizes differ by at
/// most one. Id lists inside each fold keep the input order.
pub fn build_folds(entity_ids: &[String], n_folds: usize, seed: u64) -> Vec<FoldSplit> {
    assert!(
        n_folds >= 2 && n_folds <= entity_ids.len(),
        "need 2 <= n_folds <= entities"
    );
    let mut order: Vec<usize> = (0..entity_ids.len()).collect();
    Rng::new(seed).shuffle(&mut order);
    let base = entity_ids.len() / n_folds;
    let extra = entity_ids.len() % n_folds;
    let mut start = 0;
    (0..n_folds)
        .map(|fold_id| {
            let size = base + usize::from(fold_id < extra);
            let mut members: Vec<usize> = order[start..start + size].to_vec();
            start += size;
            members.sort_unstable();
            let test_entity_ids: Vec<String> =
                members.iter().map(|&i| entity_ids[i].clone()).collect();
            let test: HashSet<&str> = test_entity_ids.iter().map(String::as_str).collect();
            FoldSplit {
                fold_id,
                train_entity_ids: complement(entity_ids, &test),
                test_entity_ids,
            }
        })
        .collect()
}

/// Reads predefined splits and checks every entity is tested exactly once.
pub fn load_splits(path: &Path, entity_ids: &[String]) -> Result<Vec<FoldSplit>, KgError> {
    let text = std::fs::read_to_string(path)
        .map_err(|_| KgError::MissingFile(path.display().to_string()))?;
    let file: SplitFile =
        serde_json::from_str(&text).map_err(|e| KgError::BadSplitFile(e.to_string()))?;
    splits_from_file(&file, entity_ids)
}

pub(crate) fn splits_from_file(
    file: &SplitFile,
    entity_ids: &[String],
) -> Result<Vec<FoldSplit>, KgError> {
    let known: HashSet<&str> = entity_ids.iter().map(String::as_str).collect();
    let mut tested: HashSet<&str> = HashSet::new();
    let mut folds = Vec::with_capacity(file.folds.len());
    for (fold_id, f) in file.folds.iter().enumerate() {
        for id in &f.test {
            if !known.contains(id.as_str()) {
                return Err(KgError::BadSplitFile(format!(
                    "unknown entity {id} in fold {fold_id}"
                )));
            }
            if !tested.insert(id.as_str()) {
                return Err(KgError::BadSplitFile(format!(
                    "entity {id} tested more than once"
                )));
            }
        }
        let test: HashSet<&str> = f.test.iter().map(String::as_str).collect();
        folds.push(FoldSplit {
            fold_id,
            train_entity_ids: complement(entity_ids, &test),
            test_entity_ids: entity_ids
                .iter()
                .filter(|id| test.contains(id.as_str()))
                .cloned()
                .collect(),
        });
    }
    if tested.len() != known.len() {
        return Err(KgError::BadSplitFile(format!(
            "{} of {} entities never tested",
            known.len() - tested.len(),
            known.len()
        )));
    }
    Ok(folds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    fn check_partition(folds: &[FoldSplit], all: &[String]) {
        let mut seen = HashSet::new();
        for f in folds {
            let test: HashSet<_> = f.test_entity_ids.iter().collect();
            let train: HashSet<_> = f.train_entity_ids.iter().collect();
            assert!(test.is_disjoint(&train));
            assert_eq!(test.len() + train.len(), all.len());
            for id in &f.test_entity_ids {
                assert!(seen.insert(id.clone()), "{id} tested twice");
            }
        }
        assert_eq!(seen.len(), all.len());
    }

    #[test]
    fn equal_sizes_for_175() {
        let all = ids(175);
        let folds = build_folds(&all, 5, 1);
        assert_eq!(
            folds
                .iter()
                .map(|f| f.test_entity_ids.len())
                .collect::<Vec<_>>(),
            vec![35; 5]
        );
        check_partition(&folds, &all);
    }

    #[test]
    fn uneven_sizes_differ_by_one() {
        let all = ids(23);
        let folds = build_folds(&all, 5, 9);
        let sizes: Vec<usize> = folds.iter().map(|f| f.test_entity_ids.len()).collect();
        assert_eq!(sizes, vec![5, 5, 5, 4, 4]);
        check_partition(&folds, &all);
    }

    #[test]
    fn seeds() {
        let all = ids(175);
        assert_eq!(build_folds(&all, 5, 7), build_folds(&all, 5, 7));
        let a = build_folds(&all, 5, 7);
        let b = build_folds(&all, 5, 8);
        assert!(a
            .iter()
            .zip(&b)
            .any(|(x, y)| x.test_entity_ids != y.test_entity_ids));
    }

    #[test]
    fn split_file_validation() {
        let all = ids(4);
        let good = SplitFile {
            folds: vec![
                SplitFold {
                    test: vec!["1".into(), "3".into()],
                },
                SplitFold {
                    test: vec!["2".into(), "4".into()],
                },
            ],
        };
        let folds = splits_from_file(&good, &all).unwrap();
        assert_eq!(folds[0].train_entity_ids, vec!["2", "4"]);
        check_partition(&folds, &all);

        let missing = SplitFile {
            folds: vec![SplitFold {
                test: vec!["1".into()],
            }],
        };
        assert!(matches!(
            splits_from_file(&missing, &all),
            Err(KgError::BadSplitFile(_))
        ));
        let twice = SplitFile {
            folds: vec![
                SplitFold {
                    test: vec!["1".into(), "2".into()],
                },
                SplitFold {
                    test: vec!["2".into(), "3".into(), "4".into()],
                },
            ],
        };
        assert!(matches!(
            splits_from_file(&twice, &all),
            Err(KgError::BadSplitFile(_))
        ));
        let unknown = SplitFile {
            folds: vec![SplitFold {
                test: vec!["9".into()],
            }],
        };
        assert!(splits_from_file(&unknown, &all).is_err());
    }
}
