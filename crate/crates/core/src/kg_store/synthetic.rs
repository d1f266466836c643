//! Seeded generator for benchmark-shaped corpora.
//!
//! Produces entities from two knowledge bases with five simulated annotators
//! each. Annotators share a latent per-predicate salience (partly correlated
//! with predicate frequency), prefer the first value of multi-valued
//! predicates, and add private noise, so gold summaries agree only partially.
//! Entity 1 reproduces the `Balanites` description, with gold mass on
//! `name`, `family`, `kingdom`, `genus` and `order`.

use std::path::Path;

use super::{
    Dataset, EntityDescription, GroundTruth, KgError, Manifest, ManifestEntry, RdfTerm, Source,
    Triple,
};
use crate::nn::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub dbpedia: usize,
    pub lmdb: usize,
    pub seed: u64,
    /// Standard deviation of each annotator's private noise.
    pub annotator_noise: f64,
    /// Include the hand-written `Balanites` entity as the first DBpedia entity.
    pub include_balanites: bool,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            dbpedia: 125,
            lmdb: 50,
            seed: 20_200_101,
            annotator_noise: 0.8,
            include_balanites: true,
        }
    }
}

const DBO: &str = "http://dbpedia.org/ontology/";
const DBR: &str = "http://dbpedia.org/resource/";
const LMDB: &str = "http://data.linkedmdb.org/resource/";
const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";
const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";
const FOAF_NAME: &str = "http://xmlns.com/foaf/0.1/name";
const DCT_SUBJECT: &str = "http://purl.org/dc/terms/subject";
const XSD: &str = "http://www.w3.org/2001/XMLSchema#";

#[derive(Clone, Copy)]
enum ObjectKind {
    /// IRI drawn from a predicate-specific pool of the given size.
    Pool(usize),
    /// Language-tagged literal derived from the entity name.
    NameLiteral,
    /// Typed literal with a value unique to the entity.
    Number,
}

struct PredicateSpec {
    iri: String,
    /// Probability that an entity carries this predicate.
    presence: f64,
    /// Upper bound on the number of values.
    max_values: usize,
    object: ObjectKind,
    salience: f64,
}

fn predicate_table(source: Source, rng: &mut Rng) -> Vec<PredicateSpec> {
    use ObjectKind::*;
    let (base, rows): (&str, Vec<(&str, f64, usize, ObjectKind)>) = match source {
        Source::DBpedia => (
            DBO,
            vec![
                (RDF_TYPE, 1.0, 10, Pool(14)),
                (RDFS_LABEL, 1.0, 1, NameLiteral),
                (FOAF_NAME, 0.9, 1, NameLiteral),
                (DCT_SUBJECT, 0.95, 12, Pool(60)),
                ("birthPlace", 0.45, 1, Pool(40)),
                ("deathPlace", 0.25, 1, Pool(40)),
                ("birthDate", 0.45, 1, Number),
                ("country", 0.5, 1, Pool(12)),
                ("occupation", 0.45, 3, Pool(20)),
                ("genre", 0.3, 3, Pool(18)),
                ("nationality", 0.3, 1, Pool(12)),
                ("almaMater", 0.2, 2, Pool(25)),
                ("award", 0.3, 4, Pool(20)),
                ("spouse", 0.15, 1, Pool(60)),
                ("location", 0.35, 2, Pool(40)),
                ("foundingYear", 0.2, 1, Number),
                ("populationTotal", 0.15, 1, Number),
                ("areaTotal", 0.15, 1, Number),
                ("leaderName", 0.15, 2, Pool(30)),
                ("isPartOf", 0.25, 2, Pool(25)),
                ("team", 0.2, 3, Pool(30)),
                ("position", 0.15, 1, Pool(10)),
                ("kingdom", 0.1, 1, Pool(3)),
                ("family", 0.1, 1, Pool(15)),
                ("order", 0.1, 1, Pool(12)),
                ("genus", 0.1, 1, Pool(20)),
                ("division", 0.1, 1, Pool(4)),
                ("class", 0.1, 1, Pool(6)),
                ("wikiPageWikiLink", 0.8, 12, Pool(80)),
                ("thumbnail", 0.5, 1, Number),
                ("abstract", 0.3, 1, NameLiteral),
                ("homepage", 0.2, 1, Number),
                ("language", 0.2, 1, Pool(8)),
                ("capital", 0.08, 1, Pool(20)),
                ("currency", 0.08, 1, Pool(6)),
            ],
        ),
        Source::LinkedMDB => (
            "http://data.linkedmdb.org/resource/movie/",
            vec![
                (RDF_TYPE, 1.0, 2, Pool(4)),
                (RDFS_LABEL, 1.0, 1, NameLiteral),
                ("http://purl.org/dc/terms/title", 1.0, 1, NameLiteral),
                ("director", 0.9, 2, Pool(30)),
                ("actor", 0.95, 10, Pool(90)),
                ("writer", 0.6, 2, Pool(35)),
                ("producer", 0.6, 3, Pool(35)),
                ("genre", 0.8, 3, Pool(12)),
                ("initial_release_date", 0.85, 1, Number),
                ("runtime", 0.8, 1, Number),
                ("language", 0.7, 1, Pool(8)),
                ("country", 0.8, 1, Pool(10)),
                ("music_contributor", 0.4, 1, Pool(25)),
                ("cinematographer", 0.4, 1, Pool(25)),
                ("editor", 0.35, 1, Pool(25)),
                ("film_story_contributor", 0.2, 1, Pool(20)),
                ("performance", 0.8, 8, Pool(120)),
                ("filmid", 1.0, 1, Number),
                ("http://www.w3.org/2002/07/owl#sameAs", 0.6, 2, Pool(80)),
                ("http://xmlns.com/foaf/0.1/page", 0.7, 2, Number),
                ("prequel", 0.1, 1, Pool(20)),
                ("sequel", 0.1, 1, Pool(20)),
            ],
        ),
    };
    rows.into_iter()
        .map(|(name, presence, max_values, object)| {
            let iri = if name.starts_with("http") {
                name.to_string()
            } else {
                format!("{base}{name}")
            };
            // Annotators partly favour frequent predicates, but multi-valued
            // and bookkeeping predicates are unattractive.
            let mut salience = 0.8 * presence + rng.uniform(-1.0, 1.0);
            if max_values > 4 {
                salience -= 0.8;
            }
            PredicateSpec {
                iri,
                presence,
                max_values,
                object,
                salience,
            }
        })
        .collect()
}

struct Draft {
    triples: Vec<Triple>,
    /// Shared annotator utility per triple.
    utility: Vec<f64>,
}

fn iri(s: impl Into<String>) -> RdfTerm {
    RdfTerm::iri(s).expect("generator IRIs are valid")
}

fn draft_entity(
    source: Source,
    id: usize,
    table: &[PredicateSpec],
    object_salience: &[Vec<f64>],
    rng: &mut Rng,
) -> Draft {
    let (subject, name) = match source {
        Source::DBpedia => (iri(format!("{DBR}Entity_{id}")), format!("Entity {id}")),
        Source::LinkedMDB => (iri(format!("{LMDB}film/{id}")), format!("Film {id}")),
    };
    loop {
        let mut triples = Vec::new();
        let mut utility = Vec::new();
        for (pi, p) in table.iter().enumerate() {
            if rng.unit() >= p.presence {
                continue;
            }
            let values = 1 + rng.below(p.max_values);
            let mut used = std::collections::HashSet::new();
            for v in 0..values {
                let (object, bonus) = match p.object {
                    ObjectKind::Pool(size) => {
                        // skewed towards low pool indices
                        let u = rng.unit();
                        let k = ((u * u) * size as f64) as usize;
                        if !used.insert(k) {
                            continue;
                        }
                        let local = p.iri.rsplit(['/', '#']).next().unwrap_or("x");
                        let base = if source == Source::DBpedia { DBR } else { LMDB };
                        (iri(format!("{base}{local}_{k}")), object_salience[pi][k])
                    }
                    ObjectKind::NameLiteral => {
                        if v > 0 {
                            continue;
                        }
                        (RdfTerm::lang_literal(name.clone(), "en"), 0.0)
                    }
                    ObjectKind::Number => {
                        if v > 0 {
                            continue;
                        }
                        (
                            RdfTerm::typed_literal(
                                format!("{}", id * 37 + pi * 101 + rng.below(1000)),
                                format!("{XSD}integer"),
                            ),
                            0.0,
                        )
                    }
                };
                triples
                    .push(Triple::new(subject.clone(), iri(&p.iri), object).expect("valid triple"));
                utility.push(p.salience + bonus - 0.9 * v as f64);
            }
        }
        if triples.len() >= 12 {
            let mut order: Vec<usize> = (0..triples.len()).collect();
            rng.shuffle(&mut order);
            return Draft {
                triples: order.iter().map(|&i| triples[i].clone()).collect(),
                utility: order.iter().map(|&i| utility[i]).collect(),
            };
        }
    }
}

fn top_indices(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn annotate(entity_id: &str, utility: &[f64], noise: f64, rng: &mut Rng) -> GroundTruth {
    let mut top5 = Vec::new();
    let mut top10 = Vec::new();
    for _ in 0..5 {
        let noisy: Vec<f64> = utility.iter().map(|u| u + noise * gaussian(rng)).collect();
        let ten = top_indices(&noisy, 10);
        top5.push(ten[..5].to_vec());
        top10.push(ten);
    }
    GroundTruth::new(entity_id, top5, top10, utility.len()).expect("generated gold is valid")
}

fn gaussian(rng: &mut Rng) -> f64 {
    let u1 = rng.unit().max(f64::MIN_POSITIVE);
    let u2 = rng.unit();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// The `Balanites` description in its published triple order, with five
/// annotators who mostly agree on name/family/kingdom/genus/order.
pub fn balanites(entity_id: &str) -> (EntityDescription, GroundTruth) {
    let s = format!("{DBR}Balanites");
    let rows: [(&str, RdfTerm); 10] = [
        (
            "http://dbpedia.org/ontology/division",
            iri(format!("{DBR}Flowering_plant")),
        ),
        (FOAF_NAME, RdfTerm::lang_literal("Balanites", "en")),
        (
            "http://dbpedia.org/ontology/class",
            iri(format!("{DBR}Eudicots")),
        ),
        (
            "http://dbpedia.org/ontology/family",
            iri(format!("{DBR}Tribuloideae")),
        ),
        (
            "http://dbpedia.org/ontology/kingdom",
            iri(format!("{DBR}Plant")),
        ),
        (DCT_SUBJECT, iri(format!("{DBR}Category:Balanites"))),
        (
            "http://dbpedia.org/ontology/genus",
            iri(format!("{DBR}Balanites")),
        ),
        (RDF_TYPE, iri("http://dbpedia.org/ontology/Plant")),
        (RDFS_LABEL, RdfTerm::lang_literal("Balanites", "en")),
        (
            "http://dbpedia.org/ontology/order",
            iri(format!("{DBR}Zygophyllales")),
        ),
    ];
    let triples = rows
        .into_iter()
        .map(|(p, o)| Triple::new(iri(s.clone()), iri(p), o).expect("valid triple"))
        .collect();
    let desc = EntityDescription::new(entity_id, Source::DBpedia, triples).expect("non-empty");
    // name=1, family=3, kingdom=4, genus=6, order=9
    let top5 = vec![
        vec![1, 3, 4, 6, 9],
        vec![1, 3, 4, 6, 9],
        vec![1, 3, 4, 6, 9],
        vec![3, 4, 6, 9, 8],
        vec![1, 3, 4, 6, 0],
    ];
    let all: Vec<usize> = (0..10).collect();
    let gt = GroundTruth::new(entity_id, top5, vec![all; 5], 10).expect("valid gold");
    (desc, gt)
}

/// Generates a dataset in memory.
pub fn generate(spec: &SyntheticSpec) -> Dataset {
    let (descriptions, truths) = generate_parts(spec);
    Dataset::new(descriptions, truths, None).expect("generated dataset is valid")
}

fn generate_parts(spec: &SyntheticSpec) -> (Vec<EntityDescription>, Vec<GroundTruth>) {
    let root = Rng::new(spec.seed);
    let mut descriptions = Vec::new();
    let mut truths = Vec::new();
    let mut next_id = 1usize;
    for (stream, source, count) in [
        (0u64, Source::DBpedia, spec.dbpedia),
        (1, Source::LinkedMDB, spec.lmdb),
    ] {
        let mut rng = root.derive(stream);
        let table = predicate_table(source, &mut rng);
        let object_salience: Vec<Vec<f64>> = table
            .iter()
            .map(|p| match p.object {
                ObjectKind::Pool(size) => (0..size).map(|_| 0.4 * gaussian(&mut rng)).collect(),
                _ => Vec::new(),
            })
            .collect();
        for i in 0..count {
            let id = next_id.to_string();
            next_id += 1;
            if source == Source::DBpedia && i == 0 && spec.include_balanites {
                let (d, g) = balanites(&id);
                descriptions.push(d);
                truths.push(g);
                continue;
            }
            let draft = draft_entity(source, next_id - 1, &table, &object_salience, &mut rng);
            let desc =
                EntityDescription::new(id.clone(), source, draft.triples).expect("non-empty");
            truths.push(annotate(
                &id,
                &draft.utility,
                spec.annotator_noise,
                &mut rng,
            ));
            descriptions.push(desc);
        }
    }
    (descriptions, truths)
}

/// Writes the conventional directory layout plus `manifest.json`.
pub fn write_benchmark(root: &Path, spec: &SyntheticSpec) -> Result<Manifest, KgError> {
    let (descriptions, truths) = generate_parts(spec);
    let io = |e: std::io::Error| KgError::Io(e.to_string());
    let mut entries = Vec::new();
    for (d, g) in descriptions.iter().zip(&truths) {
        let top = match d.source {
            Source::DBpedia => "dbpedia_data",
            Source::LinkedMDB => "lmdb_data",
        };
        let rel_dir = format!("{top}/{}", d.entity_id);
        std::fs::create_dir_all(root.join(&rel_dir)).map_err(io)?;
        let write = |name: String, triples: Vec<&Triple>| -> Result<String, KgError> {
            let rel = format!("{rel_dir}/{name}");
            let mut buf = Vec::new();
            super::write_ntriples(&mut buf, triples).map_err(io)?;
            std::fs::write(root.join(&rel), buf).map_err(io)?;
            Ok(rel)
        };
        let desc = write(
            format!("{}_desc.nt", d.entity_id),
            d.triples.iter().collect(),
        )?;
        let gold = |k: usize, sets: &[Vec<usize>]| -> Result<Vec<String>, KgError> {
            sets.iter()
                .enumerate()
                .map(|(u, set)| {
                    write(
                        format!("{}_gold_top{k}_{u}.nt", d.entity_id),
                        set.iter().map(|&i| &d.triples[i]).collect(),
                    )
                })
                .collect()
        };
        entries.push(ManifestEntry {
            id: d.entity_id.clone(),
            source: d.source,
            desc,
            top5: gold(5, &g.per_user_top5)?,
            top10: gold(10, &g.per_user_top10)?,
        });
    }
    let manifest = Manifest {
        entities: entries,
        splits: None,
    };
    manifest.write(root)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape_and_determinism() {
        let spec = SyntheticSpec::default();
        let a = generate(&spec);
        assert_eq!(a.len(), 175);
        assert_eq!(a.count_by_source(Source::DBpedia), 125);
        assert_eq!(a.count_by_source(Source::LinkedMDB), 50);
        assert_eq!(a, generate(&spec));
        assert!(a.descriptions.iter().all(|d| d.len() >= 10));
        let other = generate(&SyntheticSpec { seed: 1, ..spec });
        assert_ne!(a.descriptions, other.descriptions);
    }

    #[test]
    fn balanites_is_first() {
        let ds = generate(&SyntheticSpec::default());
        assert_eq!(
            ds.descriptions[0].subject.lexical,
            "http://dbpedia.org/resource/Balanites"
        );
        assert_eq!(ds.descriptions[0].len(), 10);
    }

    #[test]
    fn annotators_agree_partially() {
        let ds = generate(&SyntheticSpec::default());
        let mut overlap = 0.0;
        let mut pairs = 0.0;
        for g in &ds.ground_truth[1..] {
            for a in 0..5 {
                for b in a + 1..5 {
                    let inter = g.per_user_top5[a]
                        .iter()
                        .filter(|i| g.per_user_top5[b].contains(i))
                        .count();
                    overlap += inter as f64 / 5.0;
                    pairs += 1.0;
                }
            }
        }
        let mean = overlap / pairs;
        assert!(
            mean > 0.2 && mean < 0.9,
            "mean pairwise top-5 agreement {mean}"
        );
    }
}
