//! End-to-end through the public API: benchmark on disk, TransE, one
//! trained fold, checkpoint files, evaluation.

use std::sync::Arc;

use esa_core::evaluation::{evaluate_models, train_fold, CvConfig, FoldModel};
use esa_core::kg_store::synthetic::{generate, write_benchmark, SyntheticSpec};
use esa_core::kg_store::Dataset;
use esa_core::model::{Checkpoint, ModelConfig, TrainConfig};
use esa_core::transe::{export_object_table, train_transe, TransEConfig, TranslationEmbeddings};

fn small_spec() -> SyntheticSpec {
    SyntheticSpec {
        dbpedia: 10,
        lmdb: 5,
        seed: 4,
        ..SyntheticSpec::default()
    }
}

#[test]
fn benchmark_files_reload_to_the_generated_dataset() {
    let dir = tempfile::tempdir().unwrap();
    write_benchmark(dir.path(), &small_spec()).unwrap();
    let loaded = Dataset::from_benchmark(dir.path(), None).unwrap();
    let generated = generate(&small_spec());
    assert_eq!(loaded.to_json(), generated.to_json());

    let path = dir.path().join("dataset.json");
    loaded.write(&path).unwrap();
    assert_eq!(Dataset::read(&path).unwrap().to_json(), loaded.to_json());
}

#[test]
fn trained_fold_survives_checkpoint_files() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = generate(&small_spec());
    let vocab = &dataset.vocabulary;
    let transe = TransEConfig {
        dim: 12,
        epochs: 30,
        ..TransEConfig::default()
    };
    let emb = train_transe(
        &dataset.id_triples(),
        vocab.node_count(),
        vocab.predicate_count(),
        &transe,
    )
    .unwrap();
    let emb_path = dir.path().join("emb.json");
    std::fs::write(&emb_path, emb.to_json(vocab)).unwrap();
    let emb = TranslationEmbeddings::read(&emb_path, vocab).unwrap();
    let objects = Arc::new(export_object_table(&emb, dataset.object_node_ids()).unwrap());

    let cfg = CvConfig {
        model: ModelConfig {
            d_p: 10,
            d_h: 8,
            ..ModelConfig::default()
        },
        train: TrainConfig {
            epochs: 4,
            learning_rate: 1e-3,
            ..TrainConfig::default()
        },
        ..CvConfig::default()
    };
    let fold = &cfg.folds_for(&dataset)[0];
    let trained = train_fold(&dataset, Arc::clone(&objects), fold, 5, &cfg).unwrap();
    assert_eq!(trained.test_entity_ids.len(), 3);

    let ck_path = dir.path().join("fold0.json");
    Checkpoint::from_model(
        &trained.model,
        4,
        &vocab.fingerprint(),
        serde_json::Value::Null,
        serde_json::Value::Null,
    )
    .write(&ck_path)
    .unwrap();
    let restored = Checkpoint::read(&ck_path)
        .unwrap()
        .into_model(
            &vocab.fingerprint(),
            vocab.predicate_count(),
            Some(&objects),
        )
        .unwrap();
    assert_eq!(restored, trained.model);

    let reloaded = FoldModel {
        model: restored,
        fit: None,
        ..trained
    };
    let a = evaluate_models(
        &dataset,
        std::slice::from_ref(&reloaded),
        1,
        serde_json::Value::Null,
    )
    .unwrap();
    let b = evaluate_models(&dataset, &[reloaded], 1, serde_json::Value::Null).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let esa = a.metric("esa", 5, "all").unwrap();
    assert_eq!(esa.entities, 3);
    assert!((0.0..=1.0).contains(&esa.f_measure) && (0.0..=1.0).contains(&esa.map));
}

#[test]
fn checkpoint_rejects_another_vocabulary() {
    let a = generate(&small_spec());
    let b = generate(&SyntheticSpec {
        seed: 5,
        ..small_spec()
    });
    let emb = train_transe(
        &a.id_triples(),
        a.vocabulary.node_count(),
        a.vocabulary.predicate_count(),
        &TransEConfig {
            dim: 6,
            epochs: 2,
            ..TransEConfig::default()
        },
    )
    .unwrap();
    let objects = Arc::new(export_object_table(&emb, a.object_node_ids()).unwrap());
    let model = esa_core::model::EsaModel::new(
        ModelConfig::default(),
        a.vocabulary.predicate_count(),
        objects,
    );
    let ck = Checkpoint::from_model(
        &model,
        0,
        &a.vocabulary.fingerprint(),
        serde_json::Value::Null,
        serde_json::Value::Null,
    );
    assert!(ck
        .into_model(
            &b.vocabulary.fingerprint(),
            b.vocabulary.predicate_count(),
            None
        )
        .is_err());
}
