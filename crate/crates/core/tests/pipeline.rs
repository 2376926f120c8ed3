use std::fs;
use std::path::Path;

use probebench::config::ExperimentConfig;
use probebench::downstream::LayerMode;
use probebench::embedding::{write_embedding_file, EmbeddingSet};
use probebench::pipeline::{self, PipelineError};
use probebench::probe::ProbeConfig;
use probebench::results::read_rows;
use probebench::synth;
use probebench::table::{FeatureRow, FeatureTable, MISSING};
use tempfile::TempDir;

const N: usize = 30;
const FEATURES: [&str; 2] = ["total_duration", "zero_crossing_rate"];

/// Two features, two models with twelve 6-dim layers each.
fn sweep_dir() -> (TempDir, ExperimentConfig) {
    let dir = tempfile::tempdir().unwrap();
    let ids = synth::ids("utt", N);
    let mut table = FeatureTable::new(FEATURES.iter().map(|s| s.to_string()).collect());
    for (i, id) in ids.iter().enumerate() {
        let x = i as f64;
        table
            .push(FeatureRow {
                id: id.clone(),
                values: vec![Some(1.0 + 0.1 * x), Some((x * 0.7).sin())],
                status: String::new(),
            })
            .unwrap();
    }
    let mut manifest = String::new();
    for (m, model) in ["alpha", "beta"].iter().enumerate() {
        for layer in 1..=12 {
            let rows = synth::gaussian_rows(N, 6, (m * 100 + layer) as u64);
            let set = EmbeddingSet::from_rows(*model, format!("layer{layer}"), ids.clone(), &rows).unwrap();
            let file = format!("{model}_{layer}.emb");
            write_embedding_file(&set, &dir.path().join(&file)).unwrap();
            manifest += &format!("{model}\tlayer{layer}\t{file}\n");
        }
    }
    fs::write(dir.path().join("manifest.tsv"), manifest).unwrap();

    let mut cfg = ExperimentConfig {
        seed: 4,
        out_dir: dir.path().join("out"),
        jobs: 1,
        ..ExperimentConfig::default()
    };
    cfg.features.groups = vec!["audio".into()];
    cfg.features.probe = FEATURES.iter().map(|s| s.to_string()).collect();
    cfg.embeddings.manifest = Some(dir.path().join("manifest.tsv"));
    cfg.probe = ProbeConfig {
        hidden_dim: 4,
        max_epochs: 3,
        patience: 2,
        min_examples: 8,
        val_fraction: 0.2,
        ..ProbeConfig::default()
    };
    fs::create_dir_all(&cfg.out_dir).unwrap();
    table.write(&cfg.features_path()).unwrap();
    (dir, cfg)
}

#[test]
fn sweep_trains_every_feature_layer_and_model() {
    let (_dir, cfg) = sweep_dir();
    let summary = pipeline::cmd_probe(&cfg).unwrap();
    assert_eq!(summary.trained, 2 * 12 * 2 + 2);
    assert!(summary.failed.is_empty());
    let rows = read_rows(&summary.path).unwrap();
    assert_eq!(rows.len(), 50);
    assert_eq!(rows.iter().filter(|r| r.model == "random").count(), 2);
    assert!(cfg.baseline_path().exists());
}

#[test]
fn rerun_resumes_without_changing_results() {
    let (_dir, cfg) = sweep_dir();
    pipeline::cmd_probe(&cfg).unwrap();
    let first = fs::read(cfg.results_path()).unwrap();
    let again = pipeline::cmd_probe(&cfg).unwrap();
    assert_eq!((again.trained, again.resumed), (0, 50));
    assert_eq!(fs::read(cfg.results_path()).unwrap(), first);
}

#[test]
fn interrupted_sweep_completes_to_the_same_file() {
    let (_dir, cfg) = sweep_dir();
    pipeline::cmd_probe(&cfg).unwrap();
    let full = fs::read_to_string(cfg.results_path()).unwrap();
    let partial: String = full.lines().take(20).map(|l| format!("{l}\n")).collect();
    fs::write(cfg.results_path(), partial).unwrap();
    let resumed = pipeline::cmd_probe(&cfg).unwrap();
    assert_eq!(resumed.resumed, 19);
    assert_eq!(fs::read_to_string(cfg.results_path()).unwrap(), full);
}

#[test]
fn new_seed_gives_new_hash_and_retrains() {
    let (_dir, cfg) = sweep_dir();
    pipeline::cmd_probe(&cfg).unwrap();
    let table = FeatureTable::read(&cfg.features_path()).unwrap();
    let reseeded = ExperimentConfig { seed: 5, ..cfg.clone() };
    assert_ne!(pipeline::probe_hash(&cfg, &table), pipeline::probe_hash(&reseeded, &table));
    let summary = pipeline::cmd_probe(&reseeded).unwrap();
    assert_eq!(summary.trained, 50);
    assert_eq!(pipeline::current_rows(&reseeded).unwrap().len(), 50);
    assert_eq!(read_rows(&cfg.results_path()).unwrap().len(), 100);
}

#[test]
fn edited_feature_table_invalidates_results() {
    let (_dir, cfg) = sweep_dir();
    pipeline::cmd_probe(&cfg).unwrap();
    let before = pipeline::probe_hash(&cfg, &FeatureTable::read(&cfg.features_path()).unwrap());
    let text = fs::read_to_string(cfg.features_path()).unwrap().replacen("\t1\t", "\t1.05\t", 1);
    fs::write(cfg.features_path(), text).unwrap();
    let after = pipeline::probe_hash(&cfg, &FeatureTable::read(&cfg.features_path()).unwrap());
    assert_ne!(before, after);
    assert!(pipeline::current_rows(&cfg).unwrap().is_empty());
}

#[test]
fn embedding_ids_must_match_the_table() {
    let (dir, cfg) = sweep_dir();
    let ids = synth::ids("utt", N - 1);
    let rows = synth::gaussian_rows(N - 1, 6, 0);
    let set = EmbeddingSet::from_rows("alpha", "layer3", ids, &rows).unwrap();
    write_embedding_file(&set, &dir.path().join("alpha_3.emb")).unwrap();
    match pipeline::cmd_probe(&cfg) {
        Err(PipelineError::IdMismatch { model, layer, .. }) => {
            assert_eq!((model.as_str(), layer.as_str()), ("alpha", "layer3"));
        }
        other => panic!("expected IdMismatch, got {other:?}"),
    }
}

fn write_labels(dir: &Path, ids: &[String]) -> std::path::PathBuf {
    let path = dir.join("labels.tsv");
    let body: String = ids
        .iter()
        .enumerate()
        .map(|(i, id)| format!("{id}\t{}\n", if i % 2 == 0 { "a" } else { "b" }))
        .collect();
    fs::write(&path, format!("# id\tlabel\n{body}")).unwrap();
    path
}

#[test]
fn best_layer_mode_needs_probe_results() {
    let (dir, mut cfg) = sweep_dir();
    cfg.downstream.labels = Some(write_labels(dir.path(), &synth::ids("utt", N)));
    cfg.downstream.training.layer_modes = vec![LayerMode::Best];
    cfg.downstream.training.hidden = vec![4];
    cfg.downstream.training.epochs = 2;
    match pipeline::run_downstream(&cfg) {
        Err(PipelineError::MissingProbeResults { model }) => assert_eq!(model, "alpha"),
        other => panic!("expected MissingProbeResults, got {other:?}"),
    }
}

#[test]
fn downstream_modes_after_probing() {
    let (dir, mut cfg) = sweep_dir();
    cfg.downstream.labels = Some(write_labels(dir.path(), &synth::ids("utt", N)));
    cfg.downstream.model = Some("beta".into());
    cfg.downstream.training.layer_modes = LayerMode::ALL.to_vec();
    cfg.downstream.training.hidden = vec![4];
    cfg.downstream.training.epochs = 2;
    pipeline::cmd_probe(&cfg).unwrap();
    let runs = pipeline::run_downstream(&cfg).unwrap();
    assert_eq!(runs.len(), 4);
    assert_eq!(runs[1].layer_label(), "last:layer12");
    assert!(runs[0].layer_label().starts_with("best:layer"));
    assert_eq!(runs[2].layers.len(), 12);
    let weights = runs[2].result.layer_weights.as_ref().unwrap();
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);

    pipeline::cmd_downstream(&cfg).unwrap();
    let table = fs::read_to_string(cfg.downstream_path()).unwrap();
    assert_eq!(table.lines().count(), 5);
    assert!(cfg.out_dir.join("downstream_layer_weights.tsv").exists());
}

#[test]
fn report_needs_probe_stage() {
    let (_dir, cfg) = sweep_dir();
    assert!(matches!(pipeline::cmd_report(&cfg), Err(PipelineError::MissingStage { .. })));
}

fn demo_config(out: &Path) -> ExperimentConfig {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus/config.toml");
    ExperimentConfig {
        out_dir: out.to_path_buf(),
        ..ExperimentConfig::load(&path).unwrap()
    }
}

#[test]
fn demo_features_cover_every_utterance() {
    let out = tempfile::tempdir().unwrap();
    let cfg = demo_config(out.path());
    let table = pipeline::extract_features(&cfg).unwrap();
    assert_eq!(table.len(), 10);
    assert_eq!(table.columns().len(), 51);
    let dur = table.column("total_duration").unwrap();
    assert!(dur.iter().all(|(_, v)| v.is_some_and(|d| d > 0.5)));
}

#[test]
fn missing_phone_tier_gives_missing_pronunciation_values() {
    let out = tempfile::tempdir().unwrap();
    let cfg = demo_config(out.path());
    let path = pipeline::cmd_features(&cfg).unwrap();
    let text = fs::read_to_string(path).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split('\t').collect();
    let row: Vec<&str> = text.lines().find(|l| l.starts_with("utt10\t")).unwrap().split('\t').collect();
    let col = |name: &str| header.iter().position(|h| *h == name).unwrap();
    assert_eq!(row[col("vowelPVINorm")], MISSING);
    assert_eq!(row[col("StressedSyllPercent")], MISSING);
    assert_ne!(row[col("speaking_rate")], MISSING);
    assert!(row[col("status")].contains("phone"));
    let ok: Vec<&str> = text.lines().find(|l| l.starts_with("utt01\t")).unwrap().split('\t').collect();
    assert_eq!(ok[col("status")], "ok");
}
