//! Gold attention vectors: per-triple annotator selection counts normalized
//! to a probability distribution.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg_store::{EntityDescription, GroundTruth};
use crate::numfmt::sig17;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SupervisionError {
    #[error("entity {0}: all selection counts are zero")]
    ZeroTotalCount(String),
    #[error("entity {entity}: gold index {index} outside {len} triples")]
    IndexOutOfRange {
        entity: String,
        index: usize,
        len: usize,
    },
}

/// Which annotator lists are counted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GoldMode {
    /// The five top-5 lists.
    K5,
    /// The five top-10 lists.
    K10,
    /// Top-5 and top-10 lists summed.
    Both,
}

impl GoldMode {
    pub fn for_k(k: usize) -> Option<Self> {
        match k {
            5 => Some(Self::K5),
            10 => Some(Self::K10),
            _ => None,
        }
    }

    /// Expected total count for five annotators.
    pub fn expected_total(self) -> u32 {
        match self {
            Self::K5 => 25,
            Self::K10 => 50,
            Self::Both => 75,
        }
    }
}

impl std::fmt::Display for GoldMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::K5 => "k5",
            Self::K10 => "k10",
            Self::Both => "both",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldAttention {
    pub entity_id: String,
    pub mode: GoldMode,
    pub counts: Vec<u32>,
    pub alpha_bar: Vec<f64>,
}

impl GoldAttention {
    /// `alpha_bar_i = counts_i / Σ counts`.
    pub fn from_counts(
        entity_id: impl Into<String>,
        mode: GoldMode,
        counts: Vec<u32>,
    ) -> Result<Self, SupervisionError> {
        let entity_id = entity_id.into();
        let total: u32 = counts.iter().sum();
        if total == 0 {
            return Err(SupervisionError::ZeroTotalCount(entity_id));
        }
        let alpha_bar = counts
            .iter()
            .map(|&c| f64::from(c) / f64::from(total))
            .collect();
        Ok(Self {
            entity_id,
            mode,
            counts,
            alpha_bar,
        })
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }
}

/// Counts how many annotator lists select each triple and normalizes.
pub fn build_gold_attention(
    description: &EntityDescription,
    gt: &GroundTruth,
    mode: GoldMode,
) -> Result<GoldAttention, SupervisionError> {
    let n = description.len();
    let mut counts = vec![0u32; n];
    let lists: Vec<&Vec<usize>> = match mode {
        GoldMode::K5 => gt.per_user_top5.iter().collect(),
        GoldMode::K10 => gt.per_user_top10.iter().collect(),
        GoldMode::Both => gt.per_user_top5.iter().chain(&gt.per_user_top10).collect(),
    };
    for set in lists {
        for &i in set {
            let slot = counts
                .get_mut(i)
                .ok_or_else(|| SupervisionError::IndexOutOfRange {
                    entity: description.entity_id.clone(),
                    index: i,
                    len: n,
                })?;
            *slot += 1;
        }
    }
    GoldAttention::from_counts(description.entity_id.clone(), mode, counts)
}

/// Writes `entity_id,triple_index,count,alpha_bar` rows.
pub fn write_gold_csv<W: Write>(out: &mut W, golds: &[GoldAttention]) -> std::io::Result<()> {
    writeln!(out, "entity_id,triple_index,count,alpha_bar")?;
    for g in golds {
        for (i, (c, a)) in g.counts.iter().zip(&g.alpha_bar).enumerate() {
            writeln!(out, "{},{i},{c},{}", g.entity_id, sig17(*a))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg_store::{RdfTerm, Source, Triple};
    use proptest::prelude::*;

    fn desc(n: usize) -> EntityDescription {
        let s = RdfTerm::iri("http://e/s").unwrap();
        let triples = (0..n)
            .map(|i| {
                Triple::new(
                    s.clone(),
                    RdfTerm::iri(format!("http://e/p{i}")).unwrap(),
                    RdfTerm::literal(i.to_string()),
                )
                .unwrap()
            })
            .collect();
        EntityDescription::new("e", Source::DBpedia, triples).unwrap()
    }

    #[test]
    fn figure_two_normalization() {
        // counts (1, 0, 8, ..., 5) with a total of 50
        let mut counts = vec![1, 0, 8];
        counts.extend([4, 4, 4, 4, 4, 4, 4, 4, 4, 5]);
        assert_eq!(counts.iter().sum::<u32>(), 50);
        let g = GoldAttention::from_counts("fig2", GoldMode::K10, counts).unwrap();
        assert_eq!(g.alpha_bar[0], 0.02);
        assert_eq!(g.alpha_bar[1], 0.0);
        assert_eq!(g.alpha_bar[2], 0.16);
        assert_eq!(*g.alpha_bar.last().unwrap(), 0.1);
    }

    #[test]
    fn identical_users() {
        let d = desc(10);
        let same = vec![vec![0, 2, 4, 6, 8]; 5];
        let gt = GroundTruth::new("e", same, vec![(0..10).collect(); 5], 10).unwrap();
        let g = build_gold_attention(&d, &gt, GoldMode::K5).unwrap();
        for (i, a) in g.alpha_bar.iter().enumerate() {
            assert_eq!(*a, if i % 2 == 0 { 0.2 } else { 0.0 });
        }
        assert_eq!(g.total(), 25);
    }

    #[test]
    fn disjoint_users_are_uniform() {
        let d = desc(25);
        let sets: Vec<Vec<usize>> = (0..5).map(|u| (5 * u..5 * u + 5).collect()).collect();
        let tens: Vec<Vec<usize>> = (0..5)
            .map(|u| (0..10).map(|j| (u + j) % 25).collect())
            .collect();
        let gt = GroundTruth::new("e", sets, tens, 25).unwrap();
        let g = build_gold_attention(&d, &gt, GoldMode::K5).unwrap();
        assert!(g.alpha_bar.iter().all(|&a| a == 1.0 / 25.0));
        let both = build_gold_attention(&d, &gt, GoldMode::Both).unwrap();
        assert_eq!(both.total(), 75);
        assert!(both.counts.iter().all(|&c| c <= 10));
    }

    #[test]
    fn zero_total_errors() {
        assert_eq!(
            GoldAttention::from_counts("z", GoldMode::K5, vec![0, 0]),
            Err(SupervisionError::ZeroTotalCount("z".into()))
        );
    }

    #[test]
    fn csv_layout() {
        let g = GoldAttention::from_counts("7", GoldMode::K5, vec![1, 3]).unwrap();
        let mut buf = Vec::new();
        write_gold_csv(&mut buf, &[g]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "entity_id,triple_index,count,alpha_bar\n7,0,1,0.25000000000000000\n7,1,3,0.75000000000000000\n"
        );
    }

    proptest! {
        #[test]
        fn normalized_and_monotone(counts in prop::collection::vec(0u32..11, 1..60)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let g = GoldAttention::from_counts("p", GoldMode::Both, counts.clone()).unwrap();
            let s: f64 = g.alpha_bar.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            for i in 0..counts.len() {
                for j in 0..counts.len() {
                    if counts[i] > counts[j] {
                        prop_assert!(g.alpha_bar[i] > g.alpha_bar[j]);
                    }
                }
            }
        }
    }
}
