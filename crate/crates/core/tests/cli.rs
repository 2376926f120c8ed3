use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use probebench::config::{ConfigError, ExperimentConfig};
use probebench::table::FeatureKind;

fn demo_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus/config.toml")
}

fn probebench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_probebench"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn help_lists_every_stage() {
    let out = probebench(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for cmd in ["features", "baseline", "probe", "report", "downstream", "all"] {
        assert!(text.contains(cmd), "missing {cmd} in:\n{text}");
    }
}

#[test]
fn stages_run_in_order_with_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let out_dir = tmp.path().join("run");
    let cfg = demo_config();
    let common = ["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--jobs", "1"];
    let run = |cmd: &str| {
        let mut args = common.to_vec();
        args.push(cmd);
        let o = probebench(&args);
        assert!(o.status.success(), "{cmd} failed: {}", String::from_utf8_lossy(&o.stderr));
        o
    };

    let features = run("features");
    assert!(stdout(&features).trim().ends_with("features.tsv"));
    run("baseline");
    assert!(out_dir.join("baseline/random.emb").exists());
    let probe = run("probe");
    assert!(stdout(&probe).contains("trained"));
    let report = run("report");
    assert!(stdout(&report).contains("layer_profiles.tsv"));
    run("downstream");
    let results = fs::read_to_string(out_dir.join("downstream_results.tsv")).unwrap();
    assert_eq!(results.lines().count(), 5);

    let again = run("probe");
    assert!(stdout(&again).contains("(0 trained"), "{}", stdout(&again));
}

#[test]
fn report_before_probe_fails_cleanly() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = demo_config();
    let o = probebench(&["--config", cfg.to_str().unwrap(), "--out", tmp.path().to_str().unwrap(), "report"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.starts_with("error:"), "{err}");
}

#[test]
fn missing_config_is_reported() {
    let o = probebench(&["--config", "/nonexistent/config.toml", "features"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/config.toml"));
}

#[test]
fn demo_config_resolves_relative_paths() {
    let cfg = ExperimentConfig::load(&demo_config()).unwrap();
    let root = demo_config().parent().unwrap().to_path_buf();
    assert_eq!(cfg.corpus.audio_dir.as_deref(), Some(root.join("audio").as_path()));
    assert_eq!(cfg.out_dir, root.join("out"));
    assert_eq!(cfg.probe_config().seed, cfg.seed);
    let probed = cfg.probe_features();
    assert_eq!(probed.len(), 48);
    let core = probed
        .iter()
        .filter(|s| s.kind == FeatureKind::Regression && s.name != "tree_depth")
        .count();
    assert_eq!(core, 46);
}

#[test]
fn unknown_keys_and_features_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.toml");

    fs::write(&path, "seed = 1\nbogus = 2\n").unwrap();
    assert!(matches!(ExperimentConfig::load(&path), Err(ConfigError::Parse { .. })));

    fs::write(&path, "[features]\ngroups = [\"text\"]\nprobe = [\"not_a_feature\"]\n").unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
}
