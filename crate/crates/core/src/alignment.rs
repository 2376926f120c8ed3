//! Word and phone alignments, and a reader for Praat long-format TextGrids.

use std::path::Path;

use thiserror::Error;

const TIME_SLACK: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum AlignmentError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing tier '{0}'")]
    MissingTier(String),
    #[error("invalid alignment: {0}")]
    Invalid(String),
    #[error("cannot read '{path}': {reason}")]
    Io { path: String, reason: String },
}

/// A labelled time span in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct Interval {
    pub label: String,
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(label: impl Into<String>, start: f64, end: f64) -> Self {
        Self {
            label: label.into(),
            start,
            end,
        }
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }
}

/// Labels that mark silence rather than speech, compared case-insensitively.
pub fn is_silence_label(label: &str) -> bool {
    matches!(
        label.trim().to_ascii_lowercase().as_str(),
        "" | "sil" | "sp" | "<sil>"
    )
}

/// Time-aligned word tier and optional phone tier for one utterance.
///
/// Silence intervals are not stored; gaps between intervals are silence.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    words: Vec<Interval>,
    phones: Option<Vec<Interval>>,
    total_duration: f64,
}

impl Alignment {
    pub fn new(
        words: Vec<Interval>,
        phones: Option<Vec<Interval>>,
        total_duration: f64,
    ) -> Result<Self, AlignmentError> {
        if !(total_duration > 0.0 && total_duration.is_finite()) {
            return Err(AlignmentError::Invalid(format!(
                "total duration {total_duration} must be positive"
            )));
        }
        check_tier("words", &words, total_duration)?;
        if let Some(p) = &phones {
            check_tier("phones", p, total_duration)?;
        }
        Ok(Self {
            words,
            phones,
            total_duration,
        })
    }

    pub fn words(&self) -> &[Interval] {
        &self.words
    }

    pub fn phones(&self) -> Option<&[Interval]> {
        self.phones.as_deref()
    }

    pub fn total_duration(&self) -> f64 {
        self.total_duration
    }

    /// Phone labels whose midpoint falls inside `word`.
    pub fn phones_in(&self, word: &Interval) -> Option<Vec<&str>> {
        self.phones.as_ref().map(|phones| {
            phones
                .iter()
                .filter(|p| p.midpoint() >= word.start && p.midpoint() < word.end)
                .map(|p| p.label.as_str())
                .collect()
        })
    }
}

fn check_tier(name: &str, tier: &[Interval], total: f64) -> Result<(), AlignmentError> {
    let mut prev_end = 0.0;
    for (i, iv) in tier.iter().enumerate() {
        if iv.label.trim().is_empty() {
            return Err(AlignmentError::Invalid(format!("{name}[{i}] has an empty label")));
        }
        if !(iv.start >= 0.0 && iv.start < iv.end && iv.end <= total + TIME_SLACK) {
            return Err(AlignmentError::Invalid(format!(
                "{name}[{i}] '{}' spans [{}, {}] outside [0, {total}]",
                iv.label, iv.start, iv.end
            )));
        }
        if iv.start < prev_end - TIME_SLACK {
            return Err(AlignmentError::Invalid(format!(
                "{name}[{i}] '{}' overlaps or precedes its predecessor",
                iv.label
            )));
        }
        prev_end = iv.end;
    }
    Ok(())
}

pub fn parse_textgrid(path: &Path) -> Result<Alignment, AlignmentError> {
    let text = std::fs::read_to_string(path).map_err(|e| AlignmentError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_textgrid_str(&text)
}

#[derive(Default)]
struct RawTier {
    class: String,
    name: String,
    intervals: Vec<RawInterval>,
}

#[derive(Default)]
struct RawInterval {
    xmin: Option<f64>,
    xmax: Option<f64>,
    text: Option<String>,
    line: usize,
}

/// Parses a long-format TextGrid. A tier named `words` is required and a tier
/// named `phones` is read when present (singular names are accepted too).
/// Silence-labelled intervals are dropped.
pub fn parse_textgrid_str(text: &str) -> Result<Alignment, AlignmentError> {
    let mut xmax_total: Option<f64> = None;
    let mut tiers: Vec<RawTier> = Vec::new();
    let mut saw_header = false;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim().trim_start_matches('\u{feff}');
        if line.is_empty() {
            continue;
        }
        let err = |message: String| AlignmentError::Parse {
            line: line_no,
            message,
        };
        if line.starts_with("File type") {
            if !line.contains("ooTextFile") {
                return Err(err("not a Praat text file".into()));
            }
            saw_header = true;
            continue;
        }
        if line.starts_with("Object class") {
            if !line.contains("TextGrid") {
                return Err(err("object class is not TextGrid".into()));
            }
            continue;
        }
        if line.starts_with("item [") && line.ends_with("]:") {
            if line != "item []:" {
                tiers.push(RawTier::default());
            }
            continue;
        }
        if line.starts_with("intervals [") && line.ends_with("]:") {
            let tier = tiers
                .last_mut()
                .ok_or_else(|| err("interval outside of a tier".into()))?;
            tier.intervals.push(RawInterval {
                line: line_no,
                ..Default::default()
            });
            continue;
        }
        if line.starts_with("points [") || line == "tiers? <exists>" {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!("unrecognised line '{line}'")));
        };
        let key = key.trim();
        let value = value.trim();
        match tiers.last_mut() {
            None => {
                if key == "xmax" {
                    xmax_total = Some(parse_number(value).map_err(err)?);
                }
            }
            Some(tier) => match (key, tier.intervals.last_mut()) {
                ("class", _) => tier.class = parse_string(value).map_err(err)?,
                ("name", _) => tier.name = parse_string(value).map_err(err)?,
                ("xmin", Some(iv)) => iv.xmin = Some(parse_number(value).map_err(err)?),
                ("xmax", Some(iv)) => iv.xmax = Some(parse_number(value).map_err(err)?),
                ("text", Some(iv)) => iv.text = Some(parse_string(value).map_err(err)?),
                // tier-level xmin/xmax, sizes, point fields
                _ => {}
            },
        }
    }
    if !saw_header {
        return Err(AlignmentError::Parse {
            line: 1,
            message: "missing 'File type' header".into(),
        });
    }
    let total = xmax_total.ok_or(AlignmentError::Parse {
        line: 1,
        message: "missing file-level xmax".into(),
    })?;

    let find = |names: &[&str]| {
        tiers.iter().find(|t| {
            t.class == "IntervalTier" && names.iter().any(|n| t.name.eq_ignore_ascii_case(n))
        })
    };
    let words = find(&["words", "word"]).ok_or_else(|| AlignmentError::MissingTier("words".into()))?;
    let words = collect_intervals(words)?;
    let phones = find(&["phones", "phone"]).map(collect_intervals).transpose()?;
    Alignment::new(words, phones, total)
}

fn collect_intervals(tier: &RawTier) -> Result<Vec<Interval>, AlignmentError> {
    let mut out = Vec::new();
    for iv in &tier.intervals {
        let missing = |field: &str| AlignmentError::Parse {
            line: iv.line,
            message: format!("interval without {field}"),
        };
        let start = iv.xmin.ok_or_else(|| missing("xmin"))?;
        let end = iv.xmax.ok_or_else(|| missing("xmax"))?;
        let label = iv.text.clone().ok_or_else(|| missing("text"))?;
        if !is_silence_label(&label) {
            out.push(Interval::new(label.trim(), start, end));
        }
    }
    Ok(out)
}

fn parse_number(value: &str) -> Result<f64, String> {
    value
        .parse::<f64>()
        .map_err(|_| format!("expected a number, found '{value}'"))
}

fn parse_string(value: &str) -> Result<String, String> {
    let inner = value
        .strip_prefix('"')
        .and_then(|v| v.strip_suffix('"'))
        .ok_or_else(|| format!("expected a quoted string, found '{value}'"))?;
    Ok(inner.replace("\"\"", "\""))
}

/// Renders an alignment as a long-format TextGrid; gaps become empty
/// intervals so the tiers cover `[0, total_duration]`.
pub fn write_textgrid(alignment: &Alignment) -> String {
    let total = alignment.total_duration();
    let mut tiers: Vec<(&str, &[Interval])> = vec![("words", alignment.words())];
    if let Some(p) = alignment.phones() {
        tiers.push(("phones", p));
    }
    let mut out = String::new();
    out.push_str("File type = \"ooTextFile\"\nObject class = \"TextGrid\"\n\n");
    out.push_str(&format!("xmin = 0\nxmax = {total}\ntiers? <exists>\nsize = {}\nitem []:\n", tiers.len()));
    for (ti, (name, intervals)) in tiers.iter().enumerate() {
        let mut filled: Vec<(f64, f64, &str)> = Vec::new();
        let mut cursor = 0.0;
        for iv in intervals.iter() {
            if iv.start > cursor {
                filled.push((cursor, iv.start, ""));
            }
            filled.push((iv.start, iv.end, &iv.label));
            cursor = iv.end;
        }
        if cursor < total {
            filled.push((cursor, total, ""));
        }
        out.push_str(&format!(
            "    item [{}]:\n        class = \"IntervalTier\"\n        name = \"{name}\"\n        xmin = 0\n        xmax = {total}\n        intervals: size = {}\n",
            ti + 1,
            filled.len()
        ));
        for (k, (s, e, label)) in filled.iter().enumerate() {
            out.push_str(&format!(
                "        intervals [{}]:\n            xmin = {s}\n            xmax = {e}\n            text = \"{}\"\n",
                k + 1,
                label.replace('"', "\"\"")
            ));
        }
    }
    out
}
