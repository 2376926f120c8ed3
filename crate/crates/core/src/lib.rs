//! Layer-wise probing bench for speech and text transformer embeddings.
//!
//! Hand-crafted features (audio, fluency, pronunciation, text) are computed
//! per utterance, small feed-forward probes are trained to predict each
//! feature from each layer's embeddings, and the resulting loss profiles are
//! turned into comparison reports.

pub mod alignment;
pub mod audio;
pub mod config;
pub mod downstream;
pub mod embedding;
pub mod fluency;
pub mod lexicon;
pub mod pipeline;
pub mod probe;
pub mod pronunciation;
pub mod report;
pub mod results;
pub mod stats;
pub mod synth;
pub mod table;
pub mod text;
