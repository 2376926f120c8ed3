//! Runs every stage over an experiment config: features, random baseline,
//! probe sweep, reports and downstream classification.
//!
//! ```text
//! cargo run --release --example pipeline -- [CONFIG.toml] [OUT_DIR]
//! ```

use std::path::PathBuf;

use probebench::config::ExperimentConfig;
use probebench::pipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let mut args = std::env::args().skip(1);
    let config = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus/config.toml")
    });
    let mut cfg = ExperimentConfig::load(&config)?;
    cfg.out_dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("probebench_pipeline"));

    let table = pipeline::cmd_features(&cfg)?;
    println!("features: {}", table.display());
    let summary = pipeline::cmd_probe(&cfg)?;
    println!(
        "probe: {} trained, {} resumed, {} failed",
        summary.trained,
        summary.resumed,
        summary.failed.len()
    );
    for path in pipeline::cmd_report(&cfg)? {
        println!("report: {}", path.display());
    }
    for run in pipeline::run_downstream(&cfg)? {
        println!(
            "downstream {}: accuracy {:.3} (majority {:.3})",
            run.layer_label(),
            run.result.accuracy,
            run.result.majority_baseline
        );
    }
    println!("downstream: {}", pipeline::cmd_downstream(&cfg)?.display());
    Ok(())
}
