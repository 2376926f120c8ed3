//! Surface, part-of-speech, tense and tree-depth features from annotation
//! JSONL.
//!
//! ```text
//! cargo run --example text_features -- [ANNOTATIONS.jsonl] [LEXICON.tsv]
//! ```

use std::path::PathBuf;

use probebench::text::{extract_text_features, read_annotations, ComplexityLexicon, SemanticConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/demo_corpus");
    let mut args = std::env::args().skip(1);
    let annotations = args.next().map(PathBuf::from).unwrap_or_else(|| demo.join("annotations.jsonl"));
    let lexicon = match args.next() {
        Some(p) => ComplexityLexicon::load(p.as_ref())?,
        None => ComplexityLexicon::load(&demo.join("complexity.tsv"))?,
    };

    let file = read_annotations(&annotations)?;
    for (id, reason) in &file.failures {
        println!("{id}: annotation failed ({reason})");
    }
    let cfg = SemanticConfig::default();
    for t in &file.transcripts {
        let f = extract_text_features(t, &lexicon, &cfg)?;
        let words: Vec<&str> = t.tokens.iter().map(|k| k.text.as_str()).collect();
        println!("{}: {}", t.id, words.join(" "));
        println!(
            "  unique={} complexity={:.3} tense={:?} depth={}",
            f.surface.unique_word_count, f.surface.word_complexity, f.tense, f.tree_depth
        );
        let counts: Vec<String> = f
            .semantic
            .values()
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        println!("  {}", counts.join(" "));
    }
    Ok(())
}
