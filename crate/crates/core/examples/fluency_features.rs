//! Silence detection and fluency features from a TextGrid alignment.
//!
//! ```text
//! cargo run --example fluency_features -- [FILE.TextGrid] [THRESHOLD_S]
//! ```

use std::path::PathBuf;

use probebench::alignment::parse_textgrid;
use probebench::fluency::{compute_fluency_features, detect_silences, SilenceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args.next().map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus/alignments/utt01.TextGrid")
    });
    let mut cfg = SilenceConfig::default();
    if let Some(t) = args.next() {
        cfg.threshold_s = t.parse()?;
    }

    let alignment = parse_textgrid(&path)?;
    let words: Vec<&str> = alignment.words().iter().map(|w| w.label.as_str()).collect();
    println!("{}", words.join(" "));

    let silences = detect_silences(&alignment, &cfg);
    for g in &silences.gaps {
        println!("  silence {:.3}-{:.3} ({:.3} s)", g.start, g.end, g.duration());
    }
    let features = compute_fluency_features(&alignment, &silences)?;
    for (name, value) in features.values() {
        match value {
            Some(v) => println!("{name:<28}{v:.6}"),
            None => println!("{name:<28}NA"),
        }
    }
    Ok(())
}
