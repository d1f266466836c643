use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};

use super::{EntityDescription, KgError, RdfTerm};

/// Id assignment for predicates and nodes (subjects and objects, literals
/// included). Ids are contiguous from 0 in sorted term order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    predicates: Vec<RdfTerm>,
    nodes: Vec<RdfTerm>,
    predicate_ids: HashMap<RdfTerm, usize>,
    node_ids: HashMap<RdfTerm, usize>,
}

pub fn build_vocabulary(descriptions: &[EntityDescription]) -> Vocabulary {
    let mut predicates = BTreeSet::new();
    let mut nodes = BTreeSet::new();
    for d in descriptions {
        for t in &d.triples {
            predicates.insert(t.predicate.clone());
            nodes.insert(t.subject.clone());
            nodes.insert(t.object.clone());
        }
    }
    Vocabulary::from_sorted(
        predicates.into_iter().collect(),
        nodes.into_iter().collect(),
    )
}

impl Vocabulary {
    fn from_sorted(predicates: Vec<RdfTerm>, nodes: Vec<RdfTerm>) -> Self {
        let index = |terms: &[RdfTerm]| {
            terms
                .iter()
                .cloned()
                .enumerate()
                .map(|(i, t)| (t, i))
                .collect()
        };
        Self {
            predicate_ids: index(&predicates),
            node_ids: index(&nodes),
            predicates,
            nodes,
        }
    }

    /// Rebuilds a vocabulary from stored term lists, which must be strictly
    /// sorted (the order `build_vocabulary` produces).
    pub fn from_terms(predicates: Vec<RdfTerm>, nodes: Vec<RdfTerm>) -> Result<Self, KgError> {
        let strictly_sorted = |v: &[RdfTerm]| v.windows(2).all(|w| w[0] < w[1]);
        if !strictly_sorted(&predicates) || !strictly_sorted(&nodes) {
            return Err(KgError::BadDataset(
                "vocabulary terms not strictly sorted".into(),
            ));
        }
        if let Some(p) = predicates.iter().find(|p| !p.is_iri()) {
            return Err(KgError::BadDataset(format!("non-IRI predicate {p}")));
        }
        Ok(Self::from_sorted(predicates, nodes))
    }

    pub fn predicate_count(&self) -> usize {
        self.predicates.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn predicate_id(&self, term: &RdfTerm) -> Option<usize> {
        self.predicate_ids.get(term).copied()
    }

    pub fn node_id(&self, term: &RdfTerm) -> Option<usize> {
        self.node_ids.get(term).copied()
    }

    pub fn predicate(&self, id: usize) -> Option<&RdfTerm> {
        self.predicates.get(id)
    }

    pub fn node(&self, id: usize) -> Option<&RdfTerm> {
        self.nodes.get(id)
    }

    pub fn predicates(&self) -> &[RdfTerm] {
        &self.predicates
    }

    pub fn nodes(&self) -> &[RdfTerm] {
        &self.nodes
    }

    /// SHA-256 over the N-Triples form of every predicate and node, in id order.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (tag, terms) in [("P", &self.predicates), ("N", &self.nodes)] {
            for t in terms {
                h.update(tag.as_bytes());
                h.update(t.to_string().as_bytes());
                h.update(b"\n");
            }
        }
        hex::encode(h.finalize())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg_store::{Source, Triple};

    fn desc(triples: &[(&str, &str, RdfTerm)]) -> EntityDescription {
        let ts = triples
            .iter()
            .map(|(s, p, o)| {
                Triple::new(
                    RdfTerm::iri(*s).unwrap(),
                    RdfTerm::iri(*p).unwrap(),
                    o.clone(),
                )
                .unwrap()
            })
            .collect();
        EntityDescription::new("e", Source::DBpedia, ts).unwrap()
    }

    #[test]
    fn single_triple() {
        let v = build_vocabulary(&[desc(&[("a:s", "a:p", RdfTerm::iri("a:o").unwrap())])]);
        assert_eq!((v.predicate_count(), v.node_count()), (1, 2));
    }

    #[test]
    fn shared_predicate_dedups_and_literals_are_nodes() {
        let v = build_vocabulary(&[desc(&[
            ("a:s", "a:p", RdfTerm::literal("x")),
            ("a:s", "a:p", RdfTerm::lang_literal("x", "en")),
        ])]);
        assert_eq!(v.predicate_count(), 1);
        assert_eq!(v.node_count(), 3);
        let ids: Vec<usize> = v.nodes().iter().map(|n| v.node_id(n).unwrap()).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(
            v.node(v.node_id(&RdfTerm::literal("x")).unwrap()),
            Some(&RdfTerm::literal("x"))
        );
    }

    #[test]
    fn deterministic_and_restorable() {
        let d = [desc(&[
            ("a:s", "a:q", RdfTerm::literal("2")),
            ("a:s", "a:p", RdfTerm::iri("a:b").unwrap()),
        ])];
        let a = build_vocabulary(&d);
        let b = build_vocabulary(&d);
        assert_eq!(a, b);
        let c = Vocabulary::from_terms(a.predicates().to_vec(), a.nodes().to_vec()).unwrap();
        assert_eq!(a, c);
        let mut rev = a.nodes().to_vec();
        rev.reverse();
        assert!(Vocabulary::from_terms(a.predicates().to_vec(), rev).is_err());
    }
}
