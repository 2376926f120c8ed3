//! Regenerates the bundled demo corpus.
//!
//! ```text
//! cargo run --example make_demo_corpus -- [DIR] [SEED]
//! ```

use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus"));
    let seed = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0);
    let config = probebench::synth::write_demo_corpus(&dir, seed)?;
    println!("wrote {}", config.display());
    Ok(())
}
