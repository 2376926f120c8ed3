//! Probe result rows as tab-separated text.
//!
//! Column order is fixed: the nine identifying columns come first, then
//! training details. A results file may be appended to row by row while a
//! sweep runs; malformed lines (such as a half-written final line after an
//! interruption) are skipped on read.

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::probe::ProbeRunResult;

pub const RESULT_COLUMNS: [&str; 14] = [
    "feature",
    "model",
    "layer",
    "metric",
    "value",
    "n_train",
    "n_val",
    "seed",
    "config_hash",
    "epochs",
    "best_epoch",
    "baseline",
    "target_min",
    "target_max",
];

#[derive(Debug, Error)]
pub enum ResultsError {
    #[error("'{path}': {reason}")]
    Io { path: String, reason: String },
}

fn io_err(path: &Path, e: impl ToString) -> ResultsError {
    ResultsError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    /// Feature name, or the task name for downstream rows.
    pub feature: String,
    pub model: String,
    pub layer: String,
    pub metric: String,
    pub value: f64,
    pub n_train: usize,
    pub n_val: usize,
    pub seed: u64,
    pub config_hash: String,
    pub epochs: usize,
    pub best_epoch: usize,
    pub baseline: f64,
    pub target_min: Option<f64>,
    pub target_max: Option<f64>,
}

/// First 16 hex digits of the SHA-256 of the config's JSON form.
pub fn config_hash<T: Serialize>(config: &T) -> String {
    let json = serde_json::to_string(config).expect("config serializes");
    let digest = Sha256::digest(json.as_bytes());
    hex::encode(&digest[..8])
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

impl ResultRow {
    pub fn from_probe(r: &ProbeRunResult, config_hash: &str) -> Self {
        Self {
            feature: r.feature.clone(),
            model: r.model.clone(),
            layer: r.layer.clone(),
            metric: r.metric.name().to_string(),
            value: r.metric.value(),
            n_train: r.n_train,
            n_val: r.n_val,
            seed: r.seed,
            config_hash: config_hash.to_string(),
            epochs: r.epochs,
            best_epoch: r.best_epoch,
            baseline: r.baseline,
            target_min: r.scaler.map(|s| s.min),
            target_max: r.scaler.map(|s| s.max),
        }
    }

    pub fn key(&self) -> RowKey {
        RowKey {
            feature: self.feature.clone(),
            model: self.model.clone(),
            layer: self.layer.clone(),
            config_hash: self.config_hash.clone(),
        }
    }

    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.feature,
            self.model,
            self.layer,
            self.metric,
            self.value,
            self.n_train,
            self.n_val,
            self.seed,
            self.config_hash,
            self.epochs,
            self.best_epoch,
            self.baseline,
            opt(self.target_min),
            opt(self.target_max),
        )
    }

    pub fn parse_line(line: &str) -> Option<Self> {
        let c: Vec<&str> = line.split('\t').collect();
        if c.len() != RESULT_COLUMNS.len() {
            return None;
        }
        let na = |s: &str| -> Option<Option<f64>> {
            if s == "NA" {
                Some(None)
            } else {
                s.parse().ok().map(Some)
            }
        };
        Some(Self {
            feature: c[0].to_string(),
            model: c[1].to_string(),
            layer: c[2].to_string(),
            metric: c[3].to_string(),
            value: c[4].parse().ok()?,
            n_train: c[5].parse().ok()?,
            n_val: c[6].parse().ok()?,
            seed: c[7].parse().ok()?,
            config_hash: c[8].to_string(),
            epochs: c[9].parse().ok()?,
            best_epoch: c[10].parse().ok()?,
            baseline: c[11].parse().ok()?,
            target_min: na(c[12])?,
            target_max: na(c[13])?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RowKey {
    pub feature: String,
    pub model: String,
    pub layer: String,
    pub config_hash: String,
}

/// Orders names so that embedded numbers compare numerically
/// (`layer2 < layer10`).
pub fn natural_cmp(a: &str, b: &str) -> Ordering {
    let (mut x, mut y) = (a.as_bytes(), b.as_bytes());
    loop {
        match (x.first(), y.first()) {
            (None, None) => return a.cmp(b),
            (None, _) => return Ordering::Less,
            (_, None) => return Ordering::Greater,
            (Some(p), Some(q)) if p.is_ascii_digit() && q.is_ascii_digit() => {
                let nx = x.iter().take_while(|c| c.is_ascii_digit()).count();
                let ny = y.iter().take_while(|c| c.is_ascii_digit()).count();
                let (dx, dy) = (&x[..nx], &y[..ny]);
                let tx = trim_zeros(dx);
                let ty = trim_zeros(dy);
                let ord = tx.len().cmp(&ty.len()).then_with(|| tx.cmp(ty));
                if ord != Ordering::Equal {
                    return ord;
                }
                x = &x[nx..];
                y = &y[ny..];
            }
            (Some(p), Some(q)) => {
                if p != q {
                    return p.cmp(q);
                }
                x = &x[1..];
                y = &y[1..];
            }
        }
    }
}

fn trim_zeros(d: &[u8]) -> &[u8] {
    let k = d.iter().take_while(|&&c| c == b'0').count();
    &d[k.min(d.len().saturating_sub(1))..]
}

pub fn sort_rows(rows: &mut [ResultRow]) {
    rows.sort_by(|a, b| {
        a.feature
            .cmp(&b.feature)
            .then_with(|| a.model.cmp(&b.model))
            .then_with(|| natural_cmp(&a.layer, &b.layer))
            .then_with(|| a.config_hash.cmp(&b.config_hash))
            .then_with(|| a.metric.cmp(&b.metric))
    });
}

pub fn header_line() -> String {
    RESULT_COLUMNS.join("\t")
}

pub fn format_rows(rows: &[ResultRow]) -> String {
    let mut out = header_line();
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.to_line());
    }
    out
}

/// Parses a results file, skipping the header and any malformed lines.
pub fn parse_rows(text: &str) -> Vec<ResultRow> {
    text.lines()
        .filter(|l| !l.is_empty() && *l != header_line())
        .filter_map(|l| {
            let row = ResultRow::parse_line(l);
            if row.is_none() {
                log::warn!("skipping malformed result line: {l}");
            }
            row
        })
        .collect()
}

pub fn read_rows(path: &Path) -> Result<Vec<ResultRow>, ResultsError> {
    match std::fs::read_to_string(path) {
        Ok(text) => Ok(parse_rows(&text)),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
        Err(e) => Err(io_err(path, e)),
    }
}

/// Writes rows sorted, replacing the file; duplicate keys keep the first row.
pub fn write_rows(path: &Path, rows: &[ResultRow]) -> Result<(), ResultsError> {
    let mut seen = HashSet::new();
    let mut rows: Vec<ResultRow> = rows.iter().filter(|r| seen.insert(r.key())).cloned().collect();
    sort_rows(&mut rows);
    std::fs::write(path, format_rows(&rows)).map_err(|e| io_err(path, e))
}

/// Appends rows to a results file as they complete.
pub struct RowAppender {
    file: std::fs::File,
    path: std::path::PathBuf,
}

impl RowAppender {
    /// Opens `path` for appending. A missing file gets a header; a file whose
    /// last line is incomplete gets a newline first.
    pub fn open(path: &Path) -> Result<Self, ResultsError> {
        let existing = std::fs::read(path).unwrap_or_default();
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        if existing.is_empty() {
            writeln!(file, "{}", header_line()).map_err(|e| io_err(path, e))?;
        } else if existing.last() != Some(&b'\n') {
            writeln!(file).map_err(|e| io_err(path, e))?;
        }
        Ok(Self {
            file,
            path: path.to_path_buf(),
        })
    }

    pub fn append(&mut self, row: &ResultRow) -> Result<(), ResultsError> {
        writeln!(self.file, "{}", row.to_line()).map_err(|e| io_err(&self.path, e))?;
        self.file.flush().map_err(|e| io_err(&self.path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(feature: &str, layer: &str, value: f64) -> ResultRow {
        ResultRow {
            feature: feature.into(),
            model: "m".into(),
            layer: layer.into(),
            metric: "mse".into(),
            value,
            n_train: 9,
            n_val: 1,
            seed: 3,
            config_hash: "abc".into(),
            epochs: 10,
            best_epoch: 4,
            baseline: 0.1,
            target_min: Some(-1.5),
            target_max: None,
        }
    }

    #[test]
    fn line_round_trip() {
        let r = row("f", "layer3", 0.1 + 0.2);
        assert_eq!(ResultRow::parse_line(&r.to_line()), Some(r));
        assert_eq!(ResultRow::parse_line("f\tm\tl"), None);
        assert_eq!(ResultRow::parse_line(&row("f", "l", 1.0).to_line().replace("mse\t1", "mse\tx")), None);
    }

    #[test]
    fn natural_order() {
        let mut v = vec!["layer10", "layer2", "layer1", "encoder7", "layer02b"];
        v.sort_by(|a, b| natural_cmp(a, b));
        assert_eq!(v, ["encoder7", "layer1", "layer2", "layer02b", "layer10"]);
        assert_eq!(natural_cmp("a2", "a02"), "a2".cmp("a02"));
    }

    #[test]
    fn file_skips_partial_lines_and_sorts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.tsv");
        let mut app = RowAppender::open(&path).unwrap();
        app.append(&row("f", "layer10", 1.0)).unwrap();
        drop(app);
        let mut text = std::fs::read_to_string(&path).unwrap();
        text.push_str("f\tm\tlay");
        std::fs::write(&path, &text).unwrap();
        let mut app = RowAppender::open(&path).unwrap();
        app.append(&row("f", "layer2", 2.0)).unwrap();
        let rows = read_rows(&path).unwrap();
        assert_eq!(rows.len(), 2);
        write_rows(&path, &rows).unwrap();
        let sorted = read_rows(&path).unwrap();
        assert_eq!(sorted[0].layer, "layer2");
        assert!(read_rows(&dir.path().join("missing.tsv")).unwrap().is_empty());
    }

    #[test]
    fn hash_tracks_config() {
        #[derive(Serialize)]
        struct C {
            seed: u64,
        }
        let a = config_hash(&C { seed: 1 });
        assert_eq!(a.len(), 16);
        assert_eq!(a, config_hash(&C { seed: 1 }));
        assert_ne!(a, config_hash(&C { seed: 2 }));
    }
}
