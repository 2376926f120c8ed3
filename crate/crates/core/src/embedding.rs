//! Per-layer embedding sets and their on-disk formats.
//!
//! `EMB1` (one file per model layer, little-endian throughout):
//!
//! ```text
//! b"EMB1"  u32 N  u32 D
//! N × (u32 byte_len, UTF-8 id bytes)
//! N·D × f32, row-major
//! ```
//!
//! `EMF1` (one raw T×D frame matrix per utterance, averaged at ingest):
//!
//! ```text
//! b"EMF1"  u32 T  u32 D  T·D × f32, row-major
//! ```
//!
//! A manifest ties files to models and layers, one `model<TAB>layer<TAB>path`
//! per line. Relative paths resolve against the manifest's directory. A path
//! naming a directory is read as a set of `<id>.emf` frame dumps.

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

pub const EMB_MAGIC: &[u8; 4] = b"EMB1";
pub const FRAME_MAGIC: &[u8; 4] = b"EMF1";

/// Model and layer name given to generated baselines.
pub const RANDOM_MODEL: &str = "random";

#[derive(Debug, Error, PartialEq)]
pub enum EmbeddingError {
    #[error("bad magic bytes {0:?}")]
    BadMagic([u8; 4]),
    #[error("file truncated: needed {needed} bytes, found {found}")]
    TruncatedFile { needed: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },
    #[error("empty frame matrix")]
    EmptyMatrix,
    #[error("embedding dimension must be positive")]
    ZeroDim,
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("id {0} is not valid UTF-8")]
    InvalidId(usize),
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("manifest line {line}: {reason}")]
    Manifest { line: usize, reason: String },
    #[error("'{path}': {reason}")]
    Io { path: String, reason: String },
}

fn io_err(path: &Path, e: impl ToString) -> EmbeddingError {
    EmbeddingError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

/// N utterance vectors of dimension D for one model layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    model: String,
    layer: String,
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(
        model: impl Into<String>,
        layer: impl Into<String>,
        dim: usize,
        ids: Vec<String>,
        data: Vec<f32>,
    ) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::ZeroDim);
        }
        if data.len() != ids.len() * dim {
            return Err(EmbeddingError::DimMismatch {
                expected: ids.len() * dim,
                found: data.len(),
            });
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(EmbeddingError::DuplicateId(id.clone()));
            }
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite {
                row: i / dim,
                col: i % dim,
            });
        }
        Ok(Self {
            model: model.into(),
            layer: layer.into(),
            dim,
            ids,
            data,
        })
    }

    /// Builds a set from f64 rows, rounding to f32.
    pub fn from_rows(
        model: impl Into<String>,
        layer: impl Into<String>,
        ids: Vec<String>,
        rows: &[Vec<f64>],
    ) -> Result<Self, EmbeddingError> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(EmbeddingError::DimMismatch {
                    expected: dim,
                    found: r.len(),
                });
            }
            data.extend(r.iter().map(|&v| v as f32));
        }
        Self::new(model, layer, dim, ids, data)
    }

    pub fn with_names(mut self, model: impl Into<String>, layer: impl Into<String>) -> Self {
        self.model = model.into();
        self.layer = layer.into();
        self
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn layer(&self) -> &str {
        &self.layer
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(i, id)| (id.as_str(), i)).collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + self.data.len() * 4);
        out.extend_from_slice(EMB_MAGIC);
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for id in &self.ids {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Parses EMB1 bytes. Model and layer names are left empty.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, EmbeddingError> {
        let mut r = Reader::new(bytes);
        r.magic(EMB_MAGIC)?;
        let n = r.u32()? as usize;
        let d = r.u32()? as usize;
        let mut ids = Vec::with_capacity(n.min(1 << 20));
        for i in 0..n {
            let len = r.u32()? as usize;
            let raw = r.take(len)?;
            let id = std::str::from_utf8(raw).map_err(|_| EmbeddingError::InvalidId(i))?;
            ids.push(id.to_string());
        }
        let data = r.f32s(n * d)?;
        r.finish()?;
        Self::new("", "", d, ids, data)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], EmbeddingError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let Some(end) = end else {
            return Err(EmbeddingError::TruncatedFile {
                needed: self.pos.saturating_add(n),
                found: self.bytes.len(),
            });
        };
        let out = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<(), EmbeddingError> {
        let got = self.take(4)?;
        if got != expected {
            return Err(EmbeddingError::BadMagic(got.try_into().expect("4 bytes")));
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<u32, EmbeddingError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f32s(&mut self, count: usize) -> Result<Vec<f32>, EmbeddingError> {
        let raw = self.take(count.saturating_mul(4))?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }

    fn finish(&self) -> Result<(), EmbeddingError> {
        if self.pos != self.bytes.len() {
            return Err(EmbeddingError::DimMismatch {
                expected: self.pos,
                found: self.bytes.len(),
            });
        }
        Ok(())
    }
}

pub fn write_embedding_file(set: &EmbeddingSet, path: &Path) -> Result<(), EmbeddingError> {
    std::fs::write(path, set.to_bytes()).map_err(|e| io_err(path, e))
}

pub fn read_embedding_file(path: &Path) -> Result<EmbeddingSet, EmbeddingError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    EmbeddingSet::from_bytes(&bytes)
}

/// Element-wise mean over the frame axis of a T×D matrix.
pub fn time_average(frames: &[Vec<f64>]) -> Result<Vec<f64>, EmbeddingError> {
    let first = frames.first().ok_or(EmbeddingError::EmptyMatrix)?;
    let mut sum = vec![0.0; first.len()];
    for f in frames {
        if f.len() != sum.len() {
            return Err(EmbeddingError::DimMismatch {
                expected: sum.len(),
                found: f.len(),
            });
        }
        for (s, v) in sum.iter_mut().zip(f) {
            *s += v;
        }
    }
    let t = frames.len() as f64;
    Ok(sum.into_iter().map(|s| s / t).collect())
}

pub fn frames_to_bytes(frames: &[Vec<f32>]) -> Result<Vec<u8>, EmbeddingError> {
    let d = frames.first().ok_or(EmbeddingError::EmptyMatrix)?.len();
    let mut out = Vec::with_capacity(12 + frames.len() * d * 4);
    out.extend_from_slice(FRAME_MAGIC);
    out.extend_from_slice(&(frames.len() as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    for f in frames {
        if f.len() != d {
            return Err(EmbeddingError::DimMismatch {
                expected: d,
                found: f.len(),
            });
        }
        for v in f {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn frames_from_bytes(bytes: &[u8]) -> Result<Vec<Vec<f64>>, EmbeddingError> {
    let mut r = Reader::new(bytes);
    r.magic(FRAME_MAGIC)?;
    let t = r.u32()? as usize;
    let d = r.u32()? as usize;
    if t == 0 {
        return Err(EmbeddingError::EmptyMatrix);
    }
    if d == 0 {
        return Err(EmbeddingError::ZeroDim);
    }
    let data = r.f32s(t * d)?;
    r.finish()?;
    Ok(data
        .chunks_exact(d)
        .map(|row| row.iter().map(|&v| v as f64).collect())
        .collect())
}

/// Averages every `<id>.emf` file in `dir` into one set, ids sorted.
pub fn read_frame_dir(dir: &Path) -> Result<EmbeddingSet, EmbeddingError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "emf"))
        .collect();
    files.sort();
    let mut ids = Vec::with_capacity(files.len());
    let mut rows = Vec::with_capacity(files.len());
    for f in &files {
        let bytes = std::fs::read(f).map_err(|e| io_err(f, e))?;
        rows.push(time_average(&frames_from_bytes(&bytes)?)?);
        ids.push(f.file_stem().unwrap_or_default().to_string_lossy().into_owned());
    }
    EmbeddingSet::from_rows("", "", ids, &rows)
}

/// Standard-normal vectors, deterministic in `(ids, dim, seed)`.
pub fn generate_random_baseline(ids: &[String], dim: usize, seed: u64) -> Result<EmbeddingSet, EmbeddingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..ids.len() * dim)
        .map(|_| {
            let v: f64 = StandardNormal.sample(&mut rng);
            v as f32
        })
        .collect();
    EmbeddingSet::new(RANDOM_MODEL, RANDOM_MODEL, dim, ids.to_vec(), data)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub model: String,
    pub layer: String,
    pub path: PathBuf,
}

impl ManifestEntry {
    pub fn load(&self) -> Result<EmbeddingSet, EmbeddingError> {
        let set = if self.path.is_dir() {
            read_frame_dir(&self.path)?
        } else {
            read_embedding_file(&self.path)?
        };
        Ok(set.with_names(&self.model, &self.layer))
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Manifest {
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn parse(text: &str, base: &Path) -> Result<Self, EmbeddingError> {
        let mut entries = Vec::new();
        let mut seen = HashSet::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let err = |reason: String| EmbeddingError::Manifest { line: i + 1, reason };
            let cols: Vec<&str> = line.split('\t').collect();
            let [model, layer, path] = cols[..] else {
                return Err(err(format!("expected 3 tab-separated columns, found {}", cols.len())));
            };
            if model == RANDOM_MODEL {
                return Err(err(format!("model name '{RANDOM_MODEL}' is reserved")));
            }
            if !seen.insert((model.to_string(), layer.to_string())) {
                return Err(err(format!("duplicate entry for {model}/{layer}")));
            }
            entries.push(ManifestEntry {
                model: model.to_string(),
                layer: layer.to_string(),
                path: base.join(path),
            });
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self, EmbeddingError> {
        let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Models in order of first appearance.
    pub fn models(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.model.as_str()) {
                out.push(&e.model);
            }
        }
        out
    }

    pub fn layers_of<'a>(&'a self, model: &'a str) -> impl Iterator<Item = &'a ManifestEntry> + 'a {
        self.entries.iter().filter(move |e| e.model == model)
    }
}
