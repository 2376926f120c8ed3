//! Trains one regression probe per layer of a synthetic model whose signal
//! peaks at a chosen layer, and compares against the random baseline.
//!
//! ```text
//! cargo run --release --example probe_layers -- [PEAK_LAYER]
//! ```

use probebench::embedding::generate_random_baseline;
use probebench::probe::{train_probe, ProbeConfig};
use probebench::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let peak: usize = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(7);
    let n = 300;
    let ids = synth::ids("utt", n);
    let target: Vec<f64> = synth::gaussian_rows(n, 1, 1).into_iter().map(|r| r[0]).collect();
    let targets: Vec<(String, Option<f64>)> = ids.iter().cloned().zip(target.iter().map(|&y| Some(y))).collect();

    let cfg = ProbeConfig {
        hidden_dim: 32,
        learning_rate: 1e-3,
        max_epochs: 100,
        patience: 10,
        seed: 3,
        ..ProbeConfig::default()
    };
    for set in synth::layered_sets("toy", &ids, &target, 12, peak, 64, 2) {
        let r = train_probe(&set, &targets, "target", &cfg)?;
        println!(
            "{:<8} mse={:.5} constant={:.5} best_epoch={}",
            r.layer,
            r.metric.value(),
            r.baseline,
            r.best_epoch
        );
    }
    let random = generate_random_baseline(&ids, 64, 3)?;
    let r = train_probe(&random, &targets, "target", &cfg)?;
    println!("{:<8} mse={:.5} constant={:.5}", "random", r.metric.value(), r.baseline);
    Ok(())
}
