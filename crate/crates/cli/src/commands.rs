use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::json;

use esa_core::evaluation::{
    evaluate_models, render_comparison, train_fold, FoldModel, ReferenceTables,
    REFERENCE_TABLES_JSON,
};
use esa_core::kg_store::synthetic::{write_benchmark, SyntheticSpec};
use esa_core::kg_store::{discover_manifest, Dataset, ESBM_V1_1, MANIFEST_FILE};
use esa_core::model::{Checkpoint, EsaModel, FitReport};
use esa_core::numfmt::sig17;
use esa_core::supervision::{build_gold_attention, write_gold_csv};
use esa_core::transe::{
    export_object_table, train_transe, ObjectLookupTable, TranslationEmbeddings,
};

use crate::config::{GoldChoice, RunConfig};
use crate::error::{CliError, CliResult};
use crate::{Cli, Command};

const FOLD_LOG_FORMAT: &str = "esa-folds-v1";

/// Fold bookkeeping stored inside each checkpoint.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct FoldMeta {
    k: usize,
    fold_id: usize,
    train_entity_ids: Vec<String>,
    test_entity_ids: Vec<String>,
    fit: Option<FitReport>,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::SynthEsbm {
            out,
            seed,
            dbpedia,
            lmdb,
        } => synth(&out, seed, dbpedia, lmdb),
        Command::Ingest {
            esbm_dir,
            out,
            shuffle_triples,
            any_shape,
        } => ingest(&cfg, &esbm_dir, &out, shuffle_triples, any_shape),
        Command::Pretrain {
            dataset,
            out,
            dim,
            epochs,
            margin,
            lr,
            batch_size,
            seed,
        } => {
            set_path(&mut cfg.dataset, dataset);
            set_path(&mut cfg.embeddings, out);
            set(&mut cfg.d_o, dim);
            set(&mut cfg.transe.epochs, epochs);
            set(&mut cfg.transe.margin, margin);
            set(&mut cfg.transe.learning_rate, lr);
            set(&mut cfg.transe.batch_size, batch_size);
            set(&mut cfg.seed, seed);
            pretrain(&cfg)
        }
        Command::Train {
            dataset,
            embeddings,
            out,
            k,
            gold_mode,
            folds,
            seed,
            epochs,
            lr,
            optimizer,
            d_p,
            d_h,
            patience,
        } => {
            set_path(&mut cfg.dataset, dataset);
            set_path(&mut cfg.embeddings, embeddings);
            set_path(&mut cfg.output, out);
            set(&mut cfg.ks, k);
            set(&mut cfg.gold_mode, gold_mode);
            set(&mut cfg.folds, folds);
            set(&mut cfg.seed, seed);
            set(&mut cfg.epochs, epochs);
            set(&mut cfg.learning_rate, lr);
            set(&mut cfg.optimizer, optimizer);
            set(&mut cfg.d_p, d_p);
            set(&mut cfg.d_h, d_h);
            set(&mut cfg.patience, patience);
            train(&cfg)
        }
        Command::Evaluate {
            dataset,
            models,
            out,
        } => {
            set_path(&mut cfg.dataset, dataset);
            cfg.output = Some(out.display().to_string());
            evaluate(&cfg, &models, &out)
        }
        Command::Summarize {
            model,
            dataset,
            entity,
            k,
        } => {
            set_path(&mut cfg.dataset, dataset);
            summarize(&cfg, &model, &entity, k)
        }
        Command::ExportAttention {
            model,
            dataset,
            entity,
            out,
            gold_mode,
        } => {
            set_path(&mut cfg.dataset, dataset);
            export_attention(&cfg, &model, &entity, &out, gold_mode)
        }
        Command::ExportGold {
            dataset,
            out,
            gold_mode,
        } => {
            set_path(&mut cfg.dataset, dataset);
            export_gold(&cfg, &out, gold_mode)
        }
    }
}

fn set<T>(slot: &mut T, flag: Option<T>) {
    if let Some(v) = flag {
        *slot = v;
    }
}

fn set_path(slot: &mut Option<String>, flag: Option<PathBuf>) {
    if let Some(p) = flag {
        *slot = Some(p.display().to_string());
    }
}

fn required(value: &Option<String>, flag: &str) -> CliResult<PathBuf> {
    value.as_ref().map(PathBuf::from).ok_or_else(|| {
        CliError::new(
            "E_USAGE",
            format!("--{flag} is required (flag or config file)"),
        )
    })
}

fn echo(command: &str, cfg: &RunConfig) {
    eprintln!("effective config ({command}): {}", cfg.echo());
}

fn provenance(command: &str, cfg: &RunConfig) -> serde_json::Value {
    json!({ "command": command, "config": cfg.echo() })
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)
            .map_err(|e| CliError::new("E_IO", format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::new("E_IO", format!("{}: {e}", path.display())))
}

fn read_dataset(cfg: &RunConfig) -> CliResult<Dataset> {
    let path = required(&cfg.dataset, "dataset")?;
    if !path.is_file() {
        return Err(CliError::missing(&path));
    }
    Ok(Dataset::read(&path)?)
}

fn read_embeddings(cfg: &RunConfig, dataset: &Dataset) -> CliResult<TranslationEmbeddings> {
    let path = required(&cfg.embeddings, "embeddings")?;
    if !path.is_file() {
        return Err(CliError::missing(&path));
    }
    Ok(TranslationEmbeddings::read(&path, &dataset.vocabulary)?)
}

fn read_checkpoint(path: &Path, dataset: &Dataset) -> CliResult<(EsaModel, FoldMeta)> {
    if !path.is_file() {
        return Err(CliError::missing(path));
    }
    let ck = Checkpoint::read(path)?;
    let meta: FoldMeta = serde_json::from_value(ck.training.clone())
        .map_err(|e| CliError::bad_input(format!("{}: fold metadata: {e}", path.display())))?;
    let model = ck.into_model(
        &dataset.vocabulary.fingerprint(),
        dataset.vocabulary.predicate_count(),
        None,
    )?;
    Ok((model, meta))
}

fn find_entity(dataset: &Dataset, entity: &str) -> CliResult<usize> {
    dataset.find(entity).ok_or_else(|| {
        CliError::new(
            "E_UNKNOWN_ENTITY",
            format!("no entity `{entity}` in the dataset"),
        )
    })
}

fn synth(out: &Path, seed: Option<u64>, dbpedia: usize, lmdb: usize) -> CliResult<()> {
    let mut spec = SyntheticSpec {
        dbpedia,
        lmdb,
        ..SyntheticSpec::default()
    };
    set(&mut spec.seed, seed);
    if dbpedia == 0 {
        return Err(CliError::new("E_USAGE", "--dbpedia must be at least 1"));
    }
    let manifest = write_benchmark(out, &spec)?;
    eprintln!(
        "wrote {} entities to {}",
        manifest.entities.len(),
        out.display()
    );
    Ok(())
}

fn ingest(
    cfg: &RunConfig,
    root: &Path,
    out: &Path,
    shuffle: Option<u64>,
    any_shape: bool,
) -> CliResult<()> {
    if !root.is_dir() {
        return Err(CliError::missing(root));
    }
    let shape = (!any_shape).then_some(ESBM_V1_1);
    let mut dataset = if root.join(MANIFEST_FILE).is_file() {
        Dataset::from_benchmark(root, shape)?
    } else {
        log::info!("no {MANIFEST_FILE}; discovering the layout");
        Dataset::from_manifest(root, &discover_manifest(root)?, shape)?
    };
    if let Some(seed) = shuffle {
        dataset = dataset.with_shuffled_triples(seed);
    }
    let echo = json!({
        "command": "ingest",
        "esbm_dir": root.display().to_string(),
        "shuffle_triples": shuffle,
        "shape_checked": !any_shape,
        "config": cfg.echo(),
    });
    write_file(out, &dataset.to_json_with(Some(&echo)))?;
    eprintln!(
        "ingested {} entities ({} dbpedia, {} lmdb), {} predicates, {} nodes",
        dataset.len(),
        dataset.count_by_source(esa_core::kg_store::Source::DBpedia),
        dataset.count_by_source(esa_core::kg_store::Source::LinkedMDB),
        dataset.vocabulary.predicate_count(),
        dataset.vocabulary.node_count()
    );
    Ok(())
}

fn pretrain(cfg: &RunConfig) -> CliResult<()> {
    let out = required(&cfg.embeddings, "out")?;
    let tc = cfg.transe_config();
    tc.validate()?;
    echo("pretrain", cfg);
    let dataset = read_dataset(cfg)?;
    let triples = dataset.id_triples();
    let emb = train_transe(
        &triples,
        dataset.vocabulary.node_count(),
        dataset.vocabulary.predicate_count(),
        &tc,
    )?;
    write_file(
        &out,
        &emb.to_json_with(&dataset.vocabulary, Some(&provenance("pretrain", cfg))),
    )?;
    eprintln!(
        "trained {} node and {} relation vectors (dim {}), final loss {:.6}",
        emb.nodes.rows(),
        emb.relations.rows(),
        emb.dim(),
        emb.loss_history.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

fn object_table(dataset: &Dataset, emb: &TranslationEmbeddings) -> CliResult<ObjectLookupTable> {
    Ok(export_object_table(emb, dataset.object_node_ids())?)
}

fn train(cfg: &RunConfig) -> CliResult<()> {
    let out = required(&cfg.output, "out")?;
    let dataset = read_dataset(cfg)?;
    let emb = read_embeddings(cfg, &dataset)?;
    let mut cfg = cfg.clone();
    if cfg.d_o != emb.dim() {
        log::info!("d_o follows the embedding file: {}", emb.dim());
        cfg.d_o = emb.dim();
    }
    cfg.validate()?;
    echo("train", &cfg);
    let objects = Arc::new(object_table(&dataset, &emb)?);
    let object_hash = objects.content_hash();
    let cv = cfg.cv_config();
    let folds = cv.folds_for(&dataset);
    let fingerprint = dataset.vocabulary.fingerprint();
    let echo = provenance("train", &cfg);
    let mut log_entries = Vec::new();
    for &k in &cv.ks {
        for fold in &folds {
            let fm = train_fold(&dataset, Arc::clone(&objects), fold, k, &cv)?;
            let meta = FoldMeta {
                k,
                fold_id: fm.fold_id,
                train_entity_ids: fm.train_entity_ids.clone(),
                test_entity_ids: fm.test_entity_ids.clone(),
                fit: fm.fit.clone(),
            };
            let meta_value = serde_json::to_value(&meta).expect("fold metadata serializes");
            let epoch = fm.fit.as_ref().map_or(0, |f| f.best_epoch);
            let ck = Checkpoint::from_model(
                &fm.model,
                epoch,
                &fingerprint,
                echo.clone(),
                meta_value.clone(),
            );
            write_file(
                &out.join(format!("k{k}"))
                    .join(format!("fold{}.json", fm.fold_id)),
                &ck.to_json(),
            )?;
            if fm.model.objects().content_hash() != object_hash {
                return Err(CliError::internal("object table changed during training"));
            }
            eprintln!(
                "k={k} fold={}: {} epochs, best epoch {}, validation F {}",
                fm.fold_id,
                meta.fit.as_ref().map_or(0, |f| f.epochs_run),
                epoch,
                meta.fit
                    .as_ref()
                    .and_then(|f| f.best_validation_f)
                    .map_or("-".to_string(), |f| format!("{f:.4}"))
            );
            log_entries.push(meta_value);
        }
    }
    let log = json!({
        "format": FOLD_LOG_FORMAT,
        "run_config": echo,
        "object_table_hash": object_hash,
        "folds": log_entries,
    });
    write_file(
        &out.join("folds.json"),
        &(serde_json::to_string_pretty(&log).expect("log serializes") + "\n"),
    )
}

/// Checkpoints under `dir/k*/fold*.json`, ordered by k then fold.
fn checkpoint_paths(dir: &Path) -> CliResult<Vec<PathBuf>> {
    if !dir.is_dir() {
        return Err(CliError::missing(dir));
    }
    let mut found = Vec::new();
    let read = |p: &Path| {
        std::fs::read_dir(p).map_err(|e| CliError::new("E_IO", format!("{}: {e}", p.display())))
    };
    for k_entry in read(dir)? {
        let k_path = k_entry
            .map_err(|e| CliError::new("E_IO", e.to_string()))?
            .path();
        let Some(k) = k_path
            .file_name()
            .and_then(|n| n.to_str())
            .and_then(|n| n.strip_prefix('k'))
            .and_then(|n| n.parse::<usize>().ok())
        else {
            continue;
        };
        if !k_path.is_dir() {
            continue;
        }
        for f_entry in read(&k_path)? {
            let f_path = f_entry
                .map_err(|e| CliError::new("E_IO", e.to_string()))?
                .path();
            let fold = f_path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_prefix("fold"))
                .and_then(|n| n.strip_suffix(".json"))
                .and_then(|n| n.parse::<usize>().ok());
            if let Some(fold) = fold {
                found.push(((k, fold), f_path));
            }
        }
    }
    if found.is_empty() {
        return Err(CliError::new(
            "E_MISSING_INPUT",
            format!("no k*/fold*.json checkpoints under {}", dir.display()),
        ));
    }
    found.sort();
    Ok(found.into_iter().map(|(_, p)| p).collect())
}

fn evaluate(cfg: &RunConfig, models_dir: &Path, out: &Path) -> CliResult<()> {
    echo("evaluate", cfg);
    let dataset = read_dataset(cfg)?;
    let mut models = Vec::new();
    let mut training_config = serde_json::Value::Null;
    for path in checkpoint_paths(models_dir)? {
        let ck_config = Checkpoint::read(&path)?.config;
        let (model, meta) = read_checkpoint(&path, &dataset)?;
        if training_config.is_null() {
            training_config = ck_config;
        }
        models.push(FoldModel {
            k: meta.k,
            fold_id: meta.fold_id,
            train_entity_ids: meta.train_entity_ids,
            test_entity_ids: meta.test_entity_ids,
            model,
            fit: meta.fit,
        });
    }
    let seed = training_config
        .pointer("/config/seed")
        .and_then(|v| v.as_u64())
        .unwrap_or(cfg.seed);
    let echo = json!({ "evaluate": provenance("evaluate", cfg), "training": training_config });
    let report = evaluate_models(&dataset, &models, seed, echo)?;
    write_file(out, &(report.to_json() + "\n"))?;
    let dir = out.parent().unwrap_or(Path::new(""));
    write_file(&out.with_extension("csv"), &report.to_csv())?;
    write_file(&dir.join("reference_tables.json"), REFERENCE_TABLES_JSON)?;
    print!(
        "{}",
        render_comparison(&report, &ReferenceTables::builtin())
    );
    Ok(())
}

fn summarize(cfg: &RunConfig, model_path: &Path, entity: &str, k: usize) -> CliResult<()> {
    let dataset = read_dataset(cfg)?;
    let (model, _) = read_checkpoint(model_path, &dataset)?;
    let i = find_entity(&dataset, entity)?;
    let desc = &dataset.descriptions[i];
    let attention = model.attention(&dataset.encoded_pairs(i))?;
    let top = attention.topk(k)?;
    let mut out = String::new();
    for (rank, &t) in top.iter().enumerate() {
        let triple = &desc.triples[t];
        let _ = writeln!(
            out,
            "{}  {}  {}  {}",
            rank + 1,
            sig17(attention.alpha[t]),
            triple.predicate,
            triple.object
        );
    }
    print!("{out}");
    Ok(())
}

fn export_attention(
    cfg: &RunConfig,
    model_path: &Path,
    entity: &str,
    out: &Path,
    gold_mode: Option<GoldChoice>,
) -> CliResult<()> {
    let dataset = read_dataset(cfg)?;
    let (model, meta) = read_checkpoint(model_path, &dataset)?;
    let i = find_entity(&dataset, entity)?;
    let choice = gold_mode.unwrap_or(GoldChoice::PerK);
    let mode = choice
        .mode_for(meta.k)
        .ok_or_else(|| CliError::new("E_USAGE", format!("no gold mode for k = {}", meta.k)))?;
    let gold = build_gold_attention(&dataset.descriptions[i], &dataset.ground_truth[i], mode)?;
    let attention = model.attention(&dataset.encoded_pairs(i))?;
    let mut csv = String::from("triple_index,gold_alpha,machine_alpha\n");
    for (t, (g, a)) in gold.alpha_bar.iter().zip(&attention.alpha).enumerate() {
        let _ = writeln!(csv, "{t},{},{}", sig17(*g), sig17(*a));
    }
    write_file(out, &csv)
}

fn export_gold(cfg: &RunConfig, out: &Path, gold_mode: GoldChoice) -> CliResult<()> {
    let mode = gold_mode
        .mode()
        .ok_or_else(|| CliError::new("E_USAGE", "export-gold needs k5, k10 or both"))?;
    let dataset = read_dataset(cfg)?;
    let golds = dataset
        .descriptions
        .iter()
        .zip(&dataset.ground_truth)
        .map(|(d, g)| build_gold_attention(d, g, mode))
        .collect::<Result<Vec<_>, _>>()?;
    let mut buf = Vec::new();
    write_gold_csv(&mut buf, &golds).map_err(|e| CliError::internal(e.to_string()))?;
    write_file(out, &String::from_utf8(buf).expect("csv is utf-8"))
}
