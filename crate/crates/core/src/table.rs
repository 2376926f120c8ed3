//! The feature registry and the per-utterance feature table.
//!
//! A feature table is tab-separated text: an `id` column, one column per
//! feature in registry order, and a trailing `status` column (`ok`, or the
//! reasons some groups could not be computed). Missing values are `NA`.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

pub const MISSING: &str = "NA";
pub const STATUS_OK: &str = "ok";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureGroup {
    Audio,
    Fluency,
    Pronunciation,
    Text,
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] = [
        FeatureGroup::Audio,
        FeatureGroup::Fluency,
        FeatureGroup::Pronunciation,
        FeatureGroup::Text,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Audio => "audio",
            FeatureGroup::Fluency => "fluency",
            FeatureGroup::Pronunciation => "pronunciation",
            FeatureGroup::Text => "text",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|g| g.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeatureKind {
    Regression,
    /// Values are class indices.
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureSpec {
    pub name: &'static str,
    pub group: FeatureGroup,
    pub kind: FeatureKind,
    /// Probed by default. The raw-PVI companions are reported but not probed.
    pub probed: bool,
}

const fn spec(name: &'static str, group: FeatureGroup) -> FeatureSpec {
    FeatureSpec {
        name,
        group,
        kind: FeatureKind::Regression,
        probed: true,
    }
}

use FeatureGroup::{Audio, Fluency, Pronunciation, Text};

pub const REGISTRY: [FeatureSpec; 51] = [
    spec("total_duration", Audio),
    spec("stdev_energy", Audio),
    spec("mean_pitch", Audio),
    spec("voiced_to_unvoiced_ratio", Audio),
    spec("zero_crossing_rate", Audio),
    spec("energy_entropy", Audio),
    spec("spectral_centroid", Audio),
    spec("localJitter", Audio),
    spec("localShimmer", Audio),
    spec("filled_pause_rate", Fluency),
    spec("general_silence", Fluency),
    spec("mean_silence", Fluency),
    spec("silence_abs_deviation", Fluency),
    spec("SilenceRate1", Fluency),
    spec("SilenceRate2", Fluency),
    spec("speaking_rate", Fluency),
    spec("articulation_rate", Fluency),
    spec("longpfreq", Fluency),
    spec("average_syllables_in_words", Fluency),
    spec("wordsyll2", Fluency),
    spec("repetition_freq", Fluency),
    spec("StressedSyllPercent", Pronunciation),
    spec("StressDistanceSyllMean", Pronunciation),
    spec("StressDistanceMean", Pronunciation),
    spec("vowelPercentage", Pronunciation),
    spec("consonantPercentage", Pronunciation),
    spec("vowelDurationSD", Pronunciation),
    spec("consonantDurationSD", Pronunciation),
    spec("syllableDurationSD", Pronunciation),
    spec("vowelSDNorm", Pronunciation),
    spec("consonantSDNorm", Pronunciation),
    spec("syllableSDNorm", Pronunciation),
    spec("vowelPVINorm", Pronunciation),
    spec("consonantPVINorm", Pronunciation),
    spec("syllablePVINorm", Pronunciation),
    FeatureSpec {
        probed: false,
        ..spec("vowelRawPVI", Pronunciation)
    },
    FeatureSpec {
        probed: false,
        ..spec("consonantRawPVI", Pronunciation)
    },
    FeatureSpec {
        probed: false,
        ..spec("syllableRawPVI", Pronunciation)
    },
    spec("unique_word_count", Text),
    spec("word_complexity", Text),
    spec("total_adjectives", Text),
    spec("total_adverbs", Text),
    spec("total_nouns", Text),
    spec("total_verbs", Text),
    spec("total_pronouns", Text),
    spec("total_conjunctions", Text),
    spec("total_determiners", Text),
    spec("num_subjects", Text),
    spec("num_objects", Text),
    FeatureSpec {
        kind: FeatureKind::Classification,
        ..spec("tense", Text)
    },
    spec("tree_depth", Text),
];

pub fn feature_spec(name: &str) -> Option<&'static FeatureSpec> {
    REGISTRY.iter().find(|s| s.name == name)
}

pub fn group_features(group: FeatureGroup) -> impl Iterator<Item = &'static FeatureSpec> {
    REGISTRY.iter().filter(move |s| s.group == group)
}

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("row has {found} values, table has {expected} columns")]
    RowWidth { expected: usize, found: usize },
    #[error("no column named '{0}'")]
    UnknownColumn(String),
    #[error("'{path}': {reason}")]
    Io { path: String, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub id: String,
    pub values: Vec<Option<f64>>,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureTable {
    columns: Vec<String>,
    rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[FeatureRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn ids(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.id.clone()).collect()
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<(), TableError> {
        if row.values.len() != self.columns.len() {
            return Err(TableError::RowWidth {
                expected: self.columns.len(),
                found: row.values.len(),
            });
        }
        if self.rows.iter().any(|r| r.id == row.id) {
            return Err(TableError::DuplicateId(row.id));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// `(id, value)` pairs for one column, in row order.
    pub fn column(&self, name: &str) -> Result<Vec<(String, Option<f64>)>, TableError> {
        let c = self
            .column_index(name)
            .ok_or_else(|| TableError::UnknownColumn(name.to_string()))?;
        Ok(self.rows.iter().map(|r| (r.id.clone(), r.values[c])).collect())
    }

    pub fn get(&self, id: &str, name: &str) -> Option<f64> {
        let c = self.column_index(name)?;
        self.rows.iter().find(|r| r.id == id)?.values[c]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("id");
        for c in &self.columns {
            out.push('\t');
            out.push_str(c);
        }
        out.push_str("\tstatus\n");
        for r in &self.rows {
            out.push_str(&r.id);
            for v in &r.values {
                match v {
                    Some(x) => {
                        let _ = write!(out, "\t{x}");
                    }
                    None => {
                        let _ = write!(out, "\t{MISSING}");
                    }
                }
            }
            let _ = writeln!(out, "\t{}", clean_status(&r.status));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, TableError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.is_empty());
        let (_, header) = lines.next().ok_or(TableError::Parse {
            line: 1,
            reason: "empty table".into(),
        })?;
        let head: Vec<&str> = header.split('\t').collect();
        if head.len() < 2 || head[0] != "id" || head[head.len() - 1] != "status" {
            return Err(TableError::Parse {
                line: 1,
                reason: "header must start with 'id' and end with 'status'".into(),
            });
        }
        let mut table = Self::new(head[1..head.len() - 1].iter().map(|s| s.to_string()).collect());
        let mut seen = HashMap::new();
        for (i, line) in lines {
            let cells: Vec<&str> = line.split('\t').collect();
            if cells.len() != head.len() {
                return Err(TableError::Parse {
                    line: i + 1,
                    reason: format!("{} cells, header has {}", cells.len(), head.len()),
                });
            }
            let values = cells[1..cells.len() - 1]
                .iter()
                .map(|c| match *c {
                    MISSING => Ok(None),
                    c => c.parse::<f64>().map(Some).map_err(|_| TableError::Parse {
                        line: i + 1,
                        reason: format!("bad number '{c}'"),
                    }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            if seen.insert(cells[0].to_string(), i).is_some() {
                return Err(TableError::DuplicateId(cells[0].to_string()));
            }
            table.rows.push(FeatureRow {
                id: cells[0].to_string(),
                values,
                status: cells[cells.len() - 1].to_string(),
            });
        }
        Ok(table)
    }

    pub fn read(path: &Path) -> Result<Self, TableError> {
        let text = std::fs::read_to_string(path).map_err(|e| TableError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<(), TableError> {
        std::fs::write(path, self.to_tsv()).map_err(|e| TableError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })
    }
}

fn clean_status(s: &str) -> String {
    let s: String = s.chars().map(|c| if c.is_control() { ' ' } else { c }).collect();
    if s.is_empty() {
        STATUS_OK.to_string()
    } else {
        s
    }
}
