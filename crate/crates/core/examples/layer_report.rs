//! Layer profiles and model comparisons from probe results.
//!
//! With no argument, probes two synthetic models whose signal peaks early
//! and late, then reports on those rows. Given a results TSV, reports on it.
//!
//! ```text
//! cargo run --release --example layer_report -- [probe_results.tsv]
//! ```

use probebench::embedding::generate_random_baseline;
use probebench::probe::{train_probe, ProbeConfig};
use probebench::report::{
    build_profiles, compare_models, layer_profiles_tsv, model_comparison_tsv, random_losses, relative_to_random_tsv,
};
use probebench::results::{config_hash, read_rows, ResultRow};
use probebench::synth;

fn synthetic_rows() -> Result<Vec<ResultRow>, Box<dyn std::error::Error>> {
    let n = 200;
    let ids = synth::ids("utt", n);
    let target: Vec<f64> = synth::gaussian_rows(n, 1, 4).into_iter().map(|r| r[0]).collect();
    let targets: Vec<(String, Option<f64>)> = ids.iter().cloned().zip(target.iter().map(|&y| Some(y))).collect();
    let cfg = ProbeConfig {
        hidden_dim: 16,
        learning_rate: 1e-3,
        max_epochs: 60,
        patience: 8,
        val_fraction: 0.2,
        seed: 1,
        ..ProbeConfig::default()
    };
    let hash = config_hash(&cfg);
    let mut rows = vec![];
    for (model, peak) in [("early", 3), ("late", 10)] {
        for set in synth::layered_sets(model, &ids, &target, 12, peak, 32, peak as u64) {
            rows.push(ResultRow::from_probe(&train_probe(&set, &targets, "pitch", &cfg)?, &hash));
        }
    }
    let random = generate_random_baseline(&ids, 32, 0)?;
    rows.push(ResultRow::from_probe(&train_probe(&random, &targets, "pitch", &cfg)?, &hash));
    Ok(rows)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = match std::env::args().nth(1) {
        Some(path) => read_rows(path.as_ref())?,
        None => synthetic_rows()?,
    };
    let profiles = build_profiles(&rows, "mse")?;
    print!("{}", layer_profiles_tsv(&profiles)?);
    println!();
    print!("{}", relative_to_random_tsv(&profiles, &random_losses(&rows, "mse")));
    println!();
    print!("{}", model_comparison_tsv(&profiles));

    if let [a, b, ..] = profiles.as_slice() {
        if a.feature == b.feature {
            let c = compare_models(a, b);
            println!();
            println!(
                "{}: {} best at {} ({:.4}), {} best at {} ({:.4}), gap {:.1}% for {}",
                c.feature,
                c.model_a,
                c.best_layer_a,
                c.best_loss_a,
                c.model_b,
                c.best_layer_b,
                c.best_loss_b,
                c.best.pct,
                match c.best.better {
                    probebench::report::Better::A => c.model_a.as_str(),
                    probebench::report::Better::B => c.model_b.as_str(),
                    probebench::report::Better::Tie => "neither",
                }
            );
        }
    }
    Ok(())
}
