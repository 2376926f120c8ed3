//! Seeded synthetic data: test signals, embeddings with known structure,
//! and a small self-contained demo corpus.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::alignment::{write_textgrid, Alignment, Interval};
use crate::audio::AudioClip;
use crate::config::ExperimentConfig;
use crate::embedding::{frames_to_bytes, write_embedding_file, EmbeddingSet};
use crate::lexicon::{is_stressed_phone, is_vowel_phone};
use crate::pipeline::{extract_features, PipelineError};
use crate::text::{write_annotations, AnnotatedTranscript, Token, Upos};

fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

/// `amp · sin(2π·freq·t + phase)`.
pub fn sine(freq: f64, rate: u32, seconds: f64, amp: f64, phase: f64) -> Vec<f64> {
    let n = (seconds * rate as f64).round() as usize;
    (0..n)
        .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64 + phase).sin())
        .collect()
}

/// Uniform noise in `[-amp, amp]`.
pub fn white_noise(n: usize, amp: f64, seed: u64) -> Vec<f64> {
    let mut r = rng(seed, 0);
    (0..n).map(|_| amp * (2.0 * r.random::<f64>() - 1.0)).collect()
}

/// Six-harmonic tone whose fundamental moves linearly from `f0_start` to
/// `f0_end`. Peak amplitude stays below `amp`.
pub fn harmonic_glide(f0_start: f64, f0_end: f64, rate: u32, seconds: f64, amp: f64) -> Vec<f64> {
    let n = (seconds * rate as f64).round() as usize;
    let norm: f64 = (1..=6).map(|h| 1.0 / h as f64).sum();
    let mut phase = 0.0;
    (0..n)
        .map(|i| {
            let f0 = f0_start + (f0_end - f0_start) * i as f64 / n.max(1) as f64;
            let s = (1..=6).map(|h| (h as f64 * phase).sin() / h as f64).sum::<f64>();
            phase += 2.0 * PI * f0 / rate as f64;
            amp * s / norm
        })
        .collect()
}

pub fn clip(id: &str, samples: Vec<f64>, rate: u32) -> AudioClip {
    AudioClip::new(id, samples, rate).expect("synthetic samples are valid")
}

/// Standard-normal vectors of length `dim`.
pub fn gaussian_rows(n: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed, 0);
    (0..n).map(|_| (0..dim).map(|_| normal(&mut r)).collect()).collect()
}

pub fn ids(prefix: &str, n: usize) -> Vec<String> {
    let width = n.to_string().len().max(3);
    (0..n).map(|i| format!("{prefix}{i:0width$}")).collect()
}

/// Embeddings with low-rank structure and a target that is linear in them.
#[derive(Debug, Clone)]
pub struct LinearTask {
    pub ids: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    /// `weights · row`, before noise.
    pub clean: Vec<f64>,
    /// `clean + N(0, noise_sd²)`.
    pub targets: Vec<f64>,
    pub noise_sd: f64,
}

impl LinearTask {
    pub fn embedding_set(&self, model: &str, layer: &str) -> EmbeddingSet {
        EmbeddingSet::from_rows(model, layer, self.ids.clone(), &self.rows).expect("rows are finite")
    }

    pub fn target_pairs(&self) -> Vec<(String, Option<f64>)> {
        self.ids.iter().cloned().zip(self.targets.iter().map(|&y| Some(y))).collect()
    }
}

/// Rows are `A·z/√latent + 0.01·e` with `z`, `e` and `A` standard normal; the
/// weight vector lies in the column space of `A` and is scaled so the clean
/// target has unit variance.
pub fn linear_task(n: usize, dim: usize, latent: usize, noise_sd: f64, seed: u64) -> LinearTask {
    let mut r = rng(seed, 0);
    let a: Vec<Vec<f64>> = (0..dim).map(|_| (0..latent).map(|_| normal(&mut r)).collect()).collect();
    let scale = (latent as f64).sqrt();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let z: Vec<f64> = (0..latent).map(|_| normal(&mut r)).collect();
            a.iter()
                .map(|ai| ai.iter().zip(&z).map(|(p, q)| p * q).sum::<f64>() / scale + 0.01 * normal(&mut r))
                .collect()
        })
        .collect();
    let c: Vec<f64> = (0..latent).map(|_| normal(&mut r)).collect();
    let mut weights: Vec<f64> = a.iter().map(|ai| ai.iter().zip(&c).map(|(p, q)| p * q).sum()).collect();
    let raw: Vec<f64> = rows.iter().map(|x| dot(x, &weights)).collect();
    let sd = crate::stats::population_std(&raw).unwrap_or(1.0).max(1e-12);
    weights.iter_mut().for_each(|w| *w /= sd);
    let clean: Vec<f64> = rows.iter().map(|x| dot(x, &weights)).collect();
    let targets = clean.iter().map(|&y| y + noise_sd * normal(&mut r)).collect();
    LinearTask {
        ids: ids("u", n),
        rows,
        weights,
        clean,
        targets,
        noise_sd,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Signal strength of layer `k` (1-based) when the target peaks at `peak`.
pub fn layer_signal(k: usize, peak: usize) -> f64 {
    3.0 * 0.6f64.powi(k.abs_diff(peak) as i32)
}

/// `n_layers` sets over the same ids. Layer `k` is `s_k·ŷ·u + e`, where `ŷ`
/// is the standardised target, `u` a fixed random unit vector, `e` standard
/// normal noise and `s_k` = [`layer_signal`]`(k, peak)`.
pub fn layered_sets(
    model: &str,
    ids: &[String],
    targets: &[f64],
    n_layers: usize,
    peak: usize,
    dim: usize,
    seed: u64,
) -> Vec<EmbeddingSet> {
    let mean = crate::stats::mean(targets).unwrap_or(0.0);
    let sd = crate::stats::population_std(targets).unwrap_or(1.0).max(1e-12);
    let mut r = rng(seed, 0);
    let mut u: Vec<f64> = (0..dim).map(|_| normal(&mut r)).collect();
    let norm = dot(&u, &u).sqrt();
    u.iter_mut().for_each(|v| *v /= norm);
    (1..=n_layers)
        .map(|k| {
            let s = layer_signal(k, peak);
            let mut r = rng(seed, k as u64);
            let rows: Vec<Vec<f64>> = targets
                .iter()
                .map(|&y| {
                    let z = (y - mean) / sd;
                    u.iter().map(|&ui| s * z * ui + normal(&mut r)).collect()
                })
                .collect();
            EmbeddingSet::from_rows(model, format!("layer{k}"), ids.to_vec(), &rows).expect("finite rows")
        })
        .collect()
}

/// `classes` Gaussian blobs with unit-variance noise around centres drawn
/// with standard deviation `separation`. Returns rows and labels, grouped
/// by class.
pub fn class_blobs(per_class: usize, classes: usize, dim: usize, separation: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng(seed, 0);
    let centres: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..dim).map(|_| separation * normal(&mut r)).collect())
        .collect();
    let mut rows = Vec::with_capacity(per_class * classes);
    let mut labels = Vec::with_capacity(per_class * classes);
    for (c, centre) in centres.iter().enumerate() {
        for _ in 0..per_class {
            rows.push(centre.iter().map(|m| m + normal(&mut r)).collect());
            labels.push(c);
        }
    }
    (rows, labels)
}

/// Seeded permutation of `labels`.
pub fn shuffled(labels: &[usize], seed: u64) -> Vec<usize> {
    let mut out = labels.to_vec();
    out.shuffle(&mut rng(seed, 0));
    out
}

// ---------------------------------------------------------------------------
// Demo corpus

const RATE: u32 = 16_000;
const DEMO_DIM: usize = 48;
const DEMO_LAYERS: usize = 12;

const PRONUNCIATIONS: &[(&str, &str)] = &[
    ("the", "DH AH0"),
    ("a", "AH0"),
    ("cat", "K AE1 T"),
    ("dog", "D AO1 G"),
    ("sat", "S AE1 T"),
    ("ran", "R AE1 N"),
    ("quickly", "K W IH1 K L IY0"),
    ("big", "B IH1 G"),
    ("small", "S M AO1 L"),
    ("park", "P AA1 R K"),
    ("in", "IH0 N"),
    ("we", "W IY1"),
    ("saw", "S AO1"),
    ("birds", "B ER1 D Z"),
    ("singing", "S IH1 NG IH0 NG"),
    ("teacher", "T IY1 CH ER0"),
    ("reads", "R IY1 D Z"),
    ("books", "B UH1 K S"),
    ("she", "SH IY1"),
    ("walks", "W AO1 K S"),
    ("home", "HH OW1 M"),
    ("and", "AH0 N D"),
    ("children", "CH IH1 L D R AH0 N"),
    ("played", "P L EY1 D"),
    ("happily", "HH AE1 P AH0 L IY0"),
    ("um", "AH1 M"),
    ("uh", "AH1"),
];

type Tok = (&'static str, Upos, usize, &'static str, Option<&'static str>);

fn sentences() -> Vec<Vec<Tok>> {
    use Upos::*;
    vec![
        vec![
            ("the", Det, 2, "det", None),
            ("cat", Noun, 3, "nsubj", None),
            ("sat", Verb, 0, "root", Some("Past")),
            ("in", Adp, 6, "case", None),
            ("the", Det, 6, "det", None),
            ("park", Noun, 3, "obl", None),
        ],
        vec![
            ("the", Det, 3, "det", None),
            ("big", Adj, 3, "amod", None),
            ("dog", Noun, 4, "nsubj", None),
            ("ran", Verb, 0, "root", Some("Past")),
            ("quickly", Adv, 4, "advmod", None),
        ],
        vec![
            ("we", Pron, 2, "nsubj", None),
            ("saw", Verb, 0, "root", Some("Past")),
            ("birds", Noun, 2, "obj", None),
            ("singing", Verb, 3, "acl", None),
        ],
        vec![
            ("the", Det, 2, "det", None),
            ("teacher", Noun, 3, "nsubj", None),
            ("reads", Verb, 0, "root", Some("Pres")),
            ("books", Noun, 3, "obj", None),
        ],
        vec![
            ("she", Pron, 2, "nsubj", None),
            ("walks", Verb, 0, "root", Some("Pres")),
            ("home", Adv, 2, "advmod", None),
            ("and", Cconj, 8, "cc", None),
            ("the", Det, 7, "det", None),
            ("small", Adj, 7, "amod", None),
            ("children", Noun, 8, "nsubj", None),
            ("played", Verb, 2, "conj", Some("Past")),
            ("happily", Adv, 8, "advmod", None),
        ],
    ]
}

fn pronunciation(word: &str) -> Vec<&'static str> {
    PRONUNCIATIONS
        .iter()
        .find(|(w, _)| *w == word)
        .map(|(_, p)| p.split(' ').collect())
        .unwrap_or_else(|| panic!("no pronunciation for '{word}'"))
}

/// Inserts `tok` before 1-based position `at`, shifting heads.
fn insert_token(tokens: &mut Vec<Token>, at: usize, mut tok: Token) {
    for t in tokens.iter_mut() {
        if t.head >= at {
            t.head += 1;
        }
    }
    if tok.head >= at {
        tok.head += 1;
    }
    tokens.insert(at - 1, tok);
}

struct Speaker {
    name: &'static str,
    f0: f64,
    tempo: f64,
}

const SPEAKERS: [Speaker; 2] = [
    Speaker {
        name: "spk_low",
        f0: 115.0,
        tempo: 1.15,
    },
    Speaker {
        name: "spk_high",
        f0: 205.0,
        tempo: 0.9,
    },
];

fn voiced_consonant(label: &str) -> bool {
    matches!(
        label,
        "B" | "D" | "G" | "DH" | "JH" | "L" | "M" | "N" | "NG" | "R" | "V" | "W" | "Y" | "Z" | "ZH"
    )
}

struct Utterance {
    id: String,
    speaker: &'static Speaker,
    transcript: AnnotatedTranscript,
    alignment: Alignment,
    audio: AudioClip,
}

fn make_utterance(id: &str, sentence: &[Tok], speaker: &'static Speaker, with_phones: bool, seed: u64) -> Utterance {
    let mut r = rng(seed, 0);
    let mut tokens: Vec<Token> = sentence
        .iter()
        .map(|&(text, upos, head, deprel, tense)| Token {
            text: text.into(),
            upos,
            head,
            deprel: deprel.into(),
            tense: tense.map(String::from),
        })
        .collect();
    let root = tokens.iter().position(|t| t.head == 0).expect("sentence has a root") + 1;
    if r.random::<f64>() < 0.5 {
        let at = r.random_range(1..=tokens.len());
        let filler = if r.random::<bool>() { "um" } else { "uh" };
        insert_token(
            &mut tokens,
            at,
            Token {
                text: filler.into(),
                upos: Upos::Intj,
                head: root,
                deprel: "discourse".into(),
                tense: None,
            },
        );
    }
    if r.random::<f64>() < 0.4 {
        let at = r.random_range(1..=tokens.len());
        let original = tokens[at - 1].clone();
        insert_token(
            &mut tokens,
            at,
            Token {
                head: at,
                deprel: "reparandum".into(),
                tense: None,
                ..original
            },
        );
    }

    let mut words = Vec::new();
    let mut phones = Vec::new();
    let mut t = 0.15 + 0.15 * r.random::<f64>();
    for (i, tok) in tokens.iter().enumerate() {
        if i > 0 {
            let u = r.random::<f64>();
            t += if u < 0.7 {
                0.06 * r.random::<f64>()
            } else if u < 0.9 {
                0.16 + 0.2 * r.random::<f64>()
            } else {
                0.5 + 0.2 * r.random::<f64>()
            };
        }
        let start = t;
        let filler = tok.text == "um" || tok.text == "uh";
        for p in pronunciation(&tok.text) {
            let base = if is_vowel_phone(p) {
                if is_stressed_phone(p) {
                    0.12
                } else {
                    0.07
                }
            } else {
                0.06
            };
            let stretch = if filler { 2.0 } else { 1.0 };
            let d = base * stretch * speaker.tempo * (0.75 + 0.5 * r.random::<f64>());
            phones.push(Interval::new(p, t, t + d));
            t += d;
        }
        words.push(Interval::new(tok.text.clone(), start, t));
    }
    let total = t + 0.15 + 0.15 * r.random::<f64>();
    let audio = render(id, &phones, total, speaker.f0, &mut r);
    let alignment = Alignment::new(words, with_phones.then_some(phones), total).expect("valid synthetic alignment");
    Utterance {
        id: id.into(),
        speaker,
        transcript: AnnotatedTranscript::new(id, tokens).expect("valid synthetic annotation"),
        alignment,
        audio,
    }
}

/// Vowels and voiced consonants are harmonic with a slowly drifting f0,
/// voiceless consonants are noise, and gaps are digital silence.
fn render(id: &str, phones: &[Interval], total: f64, f0: f64, r: &mut ChaCha8Rng) -> AudioClip {
    let n = (total * RATE as f64).ceil() as usize;
    let mut out = vec![0.0; n];
    let norm: f64 = (1..=6).map(|h| 1.0 / h as f64).sum();
    let wobble = 2.0 * PI * r.random::<f64>();
    let mut phase = 0.0;
    for p in phones {
        let a = (p.start * RATE as f64).round() as usize;
        let b = ((p.end * RATE as f64).round() as usize).min(n);
        let (amp, voiced) = if is_vowel_phone(&p.label) {
            (if is_stressed_phone(&p.label) { 0.45 } else { 0.3 }, true)
        } else if voiced_consonant(&p.label) {
            (0.1, true)
        } else {
            (0.05, false)
        };
        let ramp = (0.005 * RATE as f64) as usize;
        for (k, i) in (a..b).enumerate() {
            let time = i as f64 / RATE as f64;
            let f = f0 * (1.0 + 0.06 * (2.0 * PI * 1.3 * time + wobble).sin()) * (1.0 - 0.05 * time / total);
            phase += 2.0 * PI * f / RATE as f64;
            let edge = k.min(b - a - 1 - k).min(ramp) as f64 / ramp as f64;
            out[i] = if voiced {
                let s = (1..=6).map(|h| (h as f64 * phase).sin() / h as f64).sum::<f64>();
                amp * edge * s / norm
            } else {
                amp * (2.0 * r.random::<f64>() - 1.0)
            };
        }
    }
    clip(id, out, RATE)
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, e: impl ToString) -> PipelineError {
    PipelineError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

const DEMO_CONFIG: &str = r#"# Demo experiment over the bundled synthetic corpus.
seed = 0
out_dir = "out"

[corpus]
audio_dir = "audio"
alignment_dir = "alignments"
annotations = "annotations.jsonl"
complexity_lexicon = "complexity.tsv"

[features]
groups = ["audio", "fluency", "pronunciation", "text"]

[embeddings]
manifest = "embeddings/manifest.tsv"
reference_model = "text"

[probe]
hidden_dim = 32
learning_rate = 0.001
max_epochs = 60
patience = 10
val_fraction = 0.2
min_examples = 8

[downstream]
task = "speaker"
labels = "speakers.tsv"
model = "speech"

[downstream.training]
hidden = [64, 32]
epochs = 40
batch_size = 8
test_fraction = 0.2
layer_modes = ["best", "last", "weighted_average", "uniform_average"]
"#;

const COMPLEXITY: &str = "# word score\nthe 1\na 1\ncat 1\ndog 1\nteacher 2\nchildren 2.5\nhappily 3\nquickly 2.5\nsinging 2\n";

/// Writes a ten-utterance corpus (two speakers, five sentences) with
/// audio, alignments, annotations, speaker labels, two synthetic "models"
/// of twelve layers each and a ready-to-run `config.toml`. The last
/// utterance has no phone tier. Returns the config path.
///
/// The `speech` model is stored as per-utterance frame dumps (averaged on
/// load) with audio features strongest in early layers and text features
/// in late ones; the `text` model is stored as averaged EMB1 files and
/// carries text features most strongly in its middle layers.
pub fn write_demo_corpus(dir: &Path, seed: u64) -> Result<PathBuf, PipelineError> {
    let sents = sentences();
    let mut utts = Vec::new();
    for i in 0..10 {
        let speaker = &SPEAKERS[i / 5];
        let id = format!("utt{:02}", i + 1);
        utts.push(make_utterance(&id, &sents[(i * 3) % 5], speaker, i != 9, seed.wrapping_mul(1000) + i as u64));
    }
    let mut labels = String::from("# utterance\tspeaker\n");
    for u in &utts {
        let wav = dir.join("audio").join(format!("{}.wav", u.id));
        std::fs::create_dir_all(dir.join("audio")).map_err(|e| io_err(dir, e))?;
        u.audio.write_wav(&wav).map_err(|e| io_err(&wav, e))?;
        write(&dir.join("alignments").join(format!("{}.TextGrid", u.id)), write_textgrid(&u.alignment))?;
        let _ = writeln!(labels, "{}\t{}", u.id, u.speaker.name);
    }
    let transcripts: Vec<AnnotatedTranscript> = utts.iter().map(|u| u.transcript.clone()).collect();
    write(&dir.join("annotations.jsonl"), write_annotations(&transcripts))?;
    write(&dir.join("complexity.tsv"), COMPLEXITY)?;
    write(&dir.join("speakers.tsv"), labels)?;

    let config_path = dir.join("config.toml");
    write(&config_path, DEMO_CONFIG)?;
    let mut cfg: ExperimentConfig = toml::from_str(DEMO_CONFIG).expect("demo config parses");
    cfg.resolve(dir);
    cfg.jobs = 1;
    let table = extract_features(&cfg)?;

    let m = table.columns().len();
    let mut feats: Vec<Vec<f64>> = table.rows().iter().map(|r| r.values.iter().map(|v| v.unwrap_or(f64::NAN)).collect()).collect();
    for c in 0..m {
        let col: Vec<f64> = feats.iter().map(|f| f[c]).filter(|v| v.is_finite()).collect();
        let mean = crate::stats::mean(&col).unwrap_or(0.0);
        let sd = crate::stats::population_std(&col).unwrap_or(0.0);
        for f in feats.iter_mut() {
            f[c] = if f[c].is_finite() && sd > 0.0 { (f[c] - mean) / sd } else { 0.0 };
        }
    }
    let group_of: Vec<crate::table::FeatureGroup> = table
        .columns()
        .iter()
        .map(|c| crate::table::feature_spec(c).expect("registry column").group)
        .collect();
    let bump = |layer: f64, centre: f64, width: f64| (-(layer - centre).powi(2) / width).exp();
    let ids = table.ids();
    let mut manifest = String::from("# model\tlayer\tpath\n");
    for (model, stream) in [("speech", 1u64), ("text", 2u64)] {
        let mut r = rng(seed, 100 + stream);
        for l in 1..=DEMO_LAYERS {
            let lf = l as f64;
            let weight = |g: crate::table::FeatureGroup| -> f64 {
                use crate::table::FeatureGroup::*;
                match (model, g) {
                    ("speech", Audio) => bump(lf, 2.0, 8.0),
                    ("speech", Fluency | Pronunciation) => bump(lf, 6.0, 8.0),
                    ("speech", Text) => 0.5 * bump(lf, 11.0, 8.0),
                    (_, Text) => bump(lf, 7.0, 10.0),
                    _ => 0.1,
                }
            };
            let proj: Vec<Vec<f64>> = (0..DEMO_DIM)
                .map(|_| (0..m).map(|c| weight(group_of[c]) * normal(&mut r) / (m as f64).sqrt()).collect())
                .collect();
            let rows: Vec<Vec<f64>> = feats
                .iter()
                .map(|f| proj.iter().map(|p| dot(p, f) + 0.3 * normal(&mut r)).collect())
                .collect();
            let layer = format!("layer{l}");
            if model == "speech" {
                let rel = format!("speech/{layer}");
                for (id, row) in ids.iter().zip(&rows) {
                    let t = 3 + r.random_range(0..5);
                    let mut frames: Vec<Vec<f64>> =
                        (0..t).map(|_| (0..DEMO_DIM).map(|_| 0.5 * normal(&mut r)).collect()).collect();
                    for d in 0..DEMO_DIM {
                        let mean = frames.iter().map(|f| f[d]).sum::<f64>() / t as f64;
                        frames.iter_mut().for_each(|f| f[d] += row[d] - mean);
                    }
                    let frames32: Vec<Vec<f32>> = frames.iter().map(|f| f.iter().map(|&v| v as f32).collect()).collect();
                    let bytes = frames_to_bytes(&frames32)?;
                    write(&dir.join("embeddings").join(&rel).join(format!("{id}.emf")), bytes)?;
                }
                let _ = writeln!(manifest, "{model}\t{layer}\t{rel}");
            } else {
                let rel = format!("text/{layer}.emb");
                let set = EmbeddingSet::from_rows(model, &layer, ids.clone(), &rows)?;
                let path = dir.join("embeddings").join(&rel);
                std::fs::create_dir_all(dir.join("embeddings/text")).map_err(|e| io_err(dir, e))?;
                write_embedding_file(&set, &path)?;
                let _ = writeln!(manifest, "{model}\t{layer}\t{rel}");
            }
        }
    }
    write(&dir.join("embeddings").join("manifest.tsv"), manifest)?;
    Ok(config_path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_task_is_standardised() {
        let t = linear_task(400, 32, 4, 0.0, 1);
        let sd = crate::stats::population_std(&t.clean).unwrap();
        assert!((sd - 1.0).abs() < 1e-9);
        assert_eq!(t.targets, t.clean);
        assert_eq!(linear_task(10, 8, 2, 0.1, 5).targets, linear_task(10, 8, 2, 0.1, 5).targets);
    }

    #[test]
    fn layer_signal_peaks() {
        let s: Vec<f64> = (1..=12).map(|k| layer_signal(k, 6)).collect();
        assert_eq!(crate::stats::argmin(&s.iter().map(|v| -v).collect::<Vec<_>>()), Some(5));
        assert!(layer_signal(1, 1) > layer_signal(2, 1));
    }

    #[test]
    fn demo_sentences_are_trees() {
        for (i, s) in sentences().iter().enumerate() {
            let tokens = s
                .iter()
                .map(|&(text, upos, head, deprel, _)| Token {
                    text: text.into(),
                    upos,
                    head,
                    deprel: deprel.into(),
                    tense: None,
                })
                .collect();
            let t = AnnotatedTranscript::new(format!("s{i}"), tokens).unwrap();
            assert!(crate::text::compute_tree_depth(&t).is_ok(), "sentence {i}");
        }
    }

    #[test]
    fn token_insertion_keeps_heads() {
        let mut toks: Vec<Token> = sentences()[0]
            .iter()
            .map(|&(text, upos, head, deprel, _)| Token {
                text: text.into(),
                upos,
                head,
                deprel: deprel.into(),
                tense: None,
            })
            .collect();
        insert_token(
            &mut toks,
            2,
            Token {
                text: "um".into(),
                upos: Upos::Intj,
                head: 3,
                deprel: "discourse".into(),
                tense: None,
            },
        );
        assert_eq!(toks[1].text, "um");
        assert_eq!(toks[1].head, 4);
        assert_eq!(toks[0].head, 3);
        assert_eq!(toks[2].head, 4);
        assert_eq!(toks[3].text, "sat");
    }
}
