//! Writes pooled (EMB1) and frame-level (EMF1) embedding files, a manifest
//! over them, and reads everything back.
//!
//! ```text
//! cargo run --example embedding_files -- [DIR]
//! ```

use std::fs;
use std::path::PathBuf;

use probebench::embedding::{frames_to_bytes, read_frame_dir, write_embedding_file, EmbeddingSet, Manifest};
use probebench::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("probebench_embedding_files"));
    fs::create_dir_all(dir.join("frames"))?;
    let ids = synth::ids("utt", 4);

    // One frame dump per utterance, with a different number of frames each.
    for (i, id) in ids.iter().enumerate() {
        let frames: Vec<Vec<f32>> = synth::gaussian_rows(i + 2, 8, i as u64)
            .into_iter()
            .map(|r| r.into_iter().map(|v| v as f32).collect())
            .collect();
        fs::write(dir.join("frames").join(format!("{id}.emf")), frames_to_bytes(&frames)?)?;
    }
    let pooled = read_frame_dir(&dir.join("frames"))?.with_names("speech", "layer1");
    write_embedding_file(&pooled, &dir.join("speech_layer1.emb"))?;

    let rows = synth::gaussian_rows(ids.len(), 8, 99);
    let second = EmbeddingSet::from_rows("speech", "layer2", ids.clone(), &rows)?;
    write_embedding_file(&second, &dir.join("speech_layer2.emb"))?;

    fs::write(
        dir.join("manifest.tsv"),
        "# model\tlayer\tpath\nspeech\tlayer1\tspeech_layer1.emb\nspeech\tlayer2\tspeech_layer2.emb\n",
    )?;
    let manifest = Manifest::load(&dir.join("manifest.tsv"))?;
    for entry in manifest.layers_of("speech") {
        let set = entry.load()?;
        println!(
            "{}/{}: {} x {} from {}",
            set.model(),
            set.layer(),
            set.len(),
            set.dim(),
            entry.path.display()
        );
        println!("  {} -> {:?}", set.ids()[0], &set.row(0)[..3]);
    }
    Ok(())
}
