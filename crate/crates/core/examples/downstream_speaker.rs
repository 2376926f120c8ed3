//! Speaker-style classification on one layer and on a learned average of
//! layers, with shuffled labels as a sanity check.
//!
//! ```text
//! cargo run --release --example downstream_speaker
//! ```

use probebench::downstream::{train_downstream, DownstreamConfig};
use probebench::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (clean, labels) = synth::class_blobs(40, 6, 64, 0.5, 1);
    let noisy = synth::gaussian_rows(clean.len(), 64, 2);
    let cfg = DownstreamConfig {
        hidden: vec![64, 32],
        epochs: 30,
        seed: 5,
        ..DownstreamConfig::default()
    };

    let single: Vec<Vec<Vec<f64>>> = clean.iter().map(|r| vec![r.clone()]).collect();
    let r = train_downstream(&single, &labels, &cfg, false)?;
    println!(
        "single layer: accuracy {:.3} (majority {:.3}, {} train / {} test)",
        r.accuracy, r.majority_baseline, r.n_train, r.n_test
    );

    let stacked: Vec<Vec<Vec<f64>>> = noisy.iter().zip(&clean).map(|(n, c)| vec![n.clone(), c.clone()]).collect();
    let r = train_downstream(&stacked, &labels, &cfg, true)?;
    let w = r.layer_weights.unwrap_or_default();
    println!("weighted average: accuracy {:.3}, layer weights {w:.3?}", r.accuracy);

    let r = train_downstream(&single, &synth::shuffled(&labels, 3), &cfg, false)?;
    println!("shuffled labels: accuracy {:.3}", r.accuracy);
    Ok(())
}
