//! Stress and rhythm features from the phone tier of a TextGrid.
//!
//! ```text
//! cargo run --example pronunciation_rhythm -- [FILE.TextGrid]
//! ```

use std::path::PathBuf;

use probebench::alignment::parse_textgrid;
use probebench::pronunciation::{extract_pronunciation_features, segment_phones};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| {
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus/alignments/utt02.TextGrid")
    });
    let alignment = parse_textgrid(&path)?;

    let seg = segment_phones(&alignment)?;
    println!(
        "{} vocalic runs, {} consonantal runs, {} syllables",
        seg.vocalic.len(),
        seg.consonantal.len(),
        seg.syllables.len()
    );

    let features = extract_pronunciation_features(&alignment)?;
    for (name, value) in features.values() {
        match value {
            Some(v) => println!("{name:<24}{v:.6}"),
            None => println!("{name:<24}NA"),
        }
    }
    Ok(())
}
