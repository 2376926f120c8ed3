//! Surface, semantic and syntactic features of annotated transcripts.
//!
//! Transcripts arrive pre-tagged (universal POS tags and a dependency parse)
//! as JSON lines, one utterance per line:
//!
//! ```text
//! {"id":"utt1","tokens":[{"text":"The","upos":"DET","head":2,"deprel":"det"},
//!                        {"text":"cat","upos":"NOUN","head":3,"deprel":"nsubj"},
//!                        {"text":"sat","upos":"VERB","head":0,"deprel":"root","tense":"Past"}]}
//! {"id":"utt2","error":"parser failed"}
//! ```
//!
//! `head` is 1-based with 0 marking a root. `tense` carries the UD `Tense`
//! feature (`Past`, `Pres`, ...) and may be omitted. Records with an `error`
//! field mark utterances the annotator could not process.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fluency::count_syllables;

#[derive(Debug, Error, PartialEq)]
pub enum TextError {
    #[error("transcript '{0}' has no tokens")]
    NoTokens(String),
    #[error("transcript '{id}': token {token} has head {head} outside [0, {len}]")]
    BadHead {
        id: String,
        token: usize,
        head: usize,
        len: usize,
    },
    #[error("transcript '{0}' has no root token")]
    NoRoot(String),
    #[error("dependency cycle through token {0}")]
    CycleDetected(usize),
    #[error("line {line}: {reason}")]
    Record { line: usize, reason: String },
    #[error("lexicon line {line}: {reason}")]
    Lexicon { line: usize, reason: String },
    #[error("cannot read '{path}': {reason}")]
    Io { path: String, reason: String },
}

/// Universal POS tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Upos {
    Adj,
    Adp,
    Adv,
    Aux,
    Cconj,
    Det,
    Intj,
    Noun,
    Num,
    Part,
    Pron,
    Propn,
    Punct,
    Sconj,
    Sym,
    Verb,
    X,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tense {
    Present,
    Past,
}

impl Tense {
    /// Class index used in feature tables and the tense probe.
    pub fn class_index(self) -> usize {
        match self {
            Tense::Present => 0,
            Tense::Past => 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Token {
    pub text: String,
    pub upos: Upos,
    pub head: usize,
    pub deprel: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tense: Option<String>,
}

impl Token {
    pub fn tense(&self) -> Option<Tense> {
        match self.tense.as_deref()?.to_ascii_lowercase().as_str() {
            "past" => Some(Tense::Past),
            "pres" | "present" => Some(Tense::Present),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedTranscript {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl AnnotatedTranscript {
    pub fn new(id: impl Into<String>, tokens: Vec<Token>) -> Result<Self, TextError> {
        let t = Self {
            id: id.into(),
            tokens,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<(), TextError> {
        if self.tokens.is_empty() {
            return Err(TextError::NoTokens(self.id.clone()));
        }
        let len = self.tokens.len();
        for (i, tok) in self.tokens.iter().enumerate() {
            if tok.head > len {
                return Err(TextError::BadHead {
                    id: self.id.clone(),
                    token: i + 1,
                    head: tok.head,
                    len,
                });
            }
        }
        if !self.tokens.iter().any(|t| t.head == 0) {
            return Err(TextError::NoRoot(self.id.clone()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default)]
    tokens: Vec<Token>,
    #[serde(default)]
    error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnotationFile {
    pub transcripts: Vec<AnnotatedTranscript>,
    /// `(id, reason)` for records the annotator marked as failed.
    pub failures: Vec<(String, String)>,
}

pub fn parse_annotations(text: &str) -> Result<AnnotationFile, TextError> {
    let mut out = AnnotationFile::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: RawRecord = serde_json::from_str(line).map_err(|e| TextError::Record {
            line: i + 1,
            reason: e.to_string(),
        })?;
        if let Some(reason) = rec.error {
            out.failures.push((rec.id, reason));
            continue;
        }
        let t = AnnotatedTranscript {
            id: rec.id,
            tokens: rec.tokens,
        };
        t.validate().map_err(|e| TextError::Record {
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.transcripts.push(t);
    }
    Ok(out)
}

pub fn read_annotations(path: &Path) -> Result<AnnotationFile, TextError> {
    let text = std::fs::read_to_string(path).map_err(|e| TextError::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    parse_annotations(&text)
}

pub fn write_annotations(transcripts: &[AnnotatedTranscript]) -> String {
    transcripts
        .iter()
        .map(|t| serde_json::to_string(t).expect("transcript serializes") + "\n")
        .collect()
}

/// Per-word complexity scores. Words not listed fall back to their
/// orthographic syllable count.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ComplexityLexicon {
    scores: HashMap<String, f64>,
}

impl ComplexityLexicon {
    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, f64)>,
        S: AsRef<str>,
    {
        Self {
            scores: pairs
                .into_iter()
                .map(|(w, s)| (w.as_ref().to_lowercase(), s))
                .collect(),
        }
    }

    /// Two whitespace-separated columns, `word score`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, TextError> {
        let mut scores = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |reason: &str| TextError::Lexicon {
                line: i + 1,
                reason: reason.to_string(),
            };
            let mut cols = line.split_whitespace();
            let (Some(word), Some(score), None) = (cols.next(), cols.next(), cols.next()) else {
                return Err(err("expected two columns"));
            };
            let score: f64 = score.parse().map_err(|_| err("score is not a number"))?;
            scores.insert(word.to_lowercase(), score);
        }
        Ok(Self { scores })
    }

    pub fn load(path: &Path) -> Result<Self, TextError> {
        let text = std::fs::read_to_string(path).map_err(|e| TextError::Io {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn score(&self, word: &str) -> Option<f64> {
        self.scores.get(&word.to_lowercase()).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceFeatures {
    pub unique_word_count: usize,
    pub word_complexity: f64,
    /// Tokens scored by the syllable-count fallback.
    pub fallback_tokens: usize,
}

fn words(t: &AnnotatedTranscript) -> impl Iterator<Item = &Token> {
    t.tokens.iter().filter(|tok| tok.upos != Upos::Punct)
}

/// Punctuation tokens are ignored.
pub fn compute_surface_features(t: &AnnotatedTranscript, lexicon: &ComplexityLexicon) -> SurfaceFeatures {
    let unique: HashSet<String> = words(t)
        .map(|tok| tok.text.to_lowercase())
        .filter(|w| w.chars().count() > 3)
        .collect();
    let mut fallback_tokens = 0;
    let word_complexity = words(t)
        .map(|tok| {
            lexicon.score(&tok.text).unwrap_or_else(|| {
                fallback_tokens += 1;
                count_syllables(&tok.text, None) as f64
            })
        })
        .sum();
    SurfaceFeatures {
        unique_word_count: unique.len(),
        word_complexity,
        fallback_tokens,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SemanticConfig {
    /// Count AUX tokens as verbs.
    pub aux_as_verb: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SemanticFeatures {
    pub adjectives: usize,
    pub adverbs: usize,
    pub nouns: usize,
    pub verbs: usize,
    pub pronouns: usize,
    pub conjunctions: usize,
    pub determiners: usize,
    pub subjects: usize,
    pub objects: usize,
}

impl SemanticFeatures {
    pub fn values(&self) -> [(&'static str, f64); 9] {
        [
            ("total_adjectives", self.adjectives as f64),
            ("total_adverbs", self.adverbs as f64),
            ("total_nouns", self.nouns as f64),
            ("total_verbs", self.verbs as f64),
            ("total_pronouns", self.pronouns as f64),
            ("total_conjunctions", self.conjunctions as f64),
            ("total_determiners", self.determiners as f64),
            ("num_subjects", self.subjects as f64),
            ("num_objects", self.objects as f64),
        ]
    }
}

pub fn compute_semantic_features(t: &AnnotatedTranscript, cfg: &SemanticConfig) -> SemanticFeatures {
    let mut f = SemanticFeatures::default();
    for tok in &t.tokens {
        match tok.upos {
            Upos::Adj => f.adjectives += 1,
            Upos::Adv => f.adverbs += 1,
            Upos::Noun | Upos::Propn => f.nouns += 1,
            Upos::Verb => f.verbs += 1,
            Upos::Aux if cfg.aux_as_verb => f.verbs += 1,
            Upos::Pron => f.pronouns += 1,
            Upos::Cconj | Upos::Sconj => f.conjunctions += 1,
            Upos::Det => f.determiners += 1,
            _ => {}
        }
        match tok.deprel.as_str() {
            "nsubj" | "nsubj:pass" => f.subjects += 1,
            "obj" | "dobj" => f.objects += 1,
            _ => {}
        }
    }
    f
}

/// Tense of the main clause: the first root's tense feature, else the first
/// finite verb or auxiliary. `None` when neither gives past or present.
pub fn main_clause_tense(t: &AnnotatedTranscript) -> Option<Tense> {
    let root = t.tokens.iter().find(|tok| tok.head == 0)?;
    root.tense().or_else(|| {
        t.tokens
            .iter()
            .filter(|tok| matches!(tok.upos, Upos::Verb | Upos::Aux))
            .find_map(Token::tense)
    })
}

/// Dependency tree depth: the longest token-to-root path counted in nodes.
/// With several roots the deepest tree wins.
pub fn compute_tree_depth(t: &AnnotatedTranscript) -> Result<usize, TextError> {
    let n = t.tokens.len();
    let mut depth = vec![0usize; n];
    for start in 0..n {
        let mut path = Vec::new();
        let mut cur = start;
        let base = loop {
            if depth[cur] > 0 {
                break depth[cur];
            }
            if path.len() > n {
                return Err(TextError::CycleDetected(start + 1));
            }
            path.push(cur);
            match t.tokens[cur].head {
                0 => break 0,
                h if h > n => {
                    return Err(TextError::BadHead {
                        id: t.id.clone(),
                        token: cur + 1,
                        head: h,
                        len: n,
                    })
                }
                h => cur = h - 1,
            }
        };
        for (k, &node) in path.iter().rev().enumerate() {
            depth[node] = base + k + 1;
        }
    }
    Ok(depth.into_iter().max().unwrap_or(0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextFeatures {
    pub surface: SurfaceFeatures,
    pub semantic: SemanticFeatures,
    pub tense: Option<Tense>,
    pub tree_depth: usize,
}

impl TextFeatures {
    pub fn values(&self) -> Vec<(&'static str, Option<f64>)> {
        let mut v = vec![
            ("unique_word_count", Some(self.surface.unique_word_count as f64)),
            ("word_complexity", Some(self.surface.word_complexity)),
        ];
        v.extend(self.semantic.values().into_iter().map(|(k, x)| (k, Some(x))));
        v.push(("tense", self.tense.map(|t| t.class_index() as f64)));
        v.push(("tree_depth", Some(self.tree_depth as f64)));
        v
    }
}

pub fn extract_text_features(
    t: &AnnotatedTranscript,
    lexicon: &ComplexityLexicon,
    cfg: &SemanticConfig,
) -> Result<TextFeatures, TextError> {
    Ok(TextFeatures {
        surface: compute_surface_features(t, lexicon),
        semantic: compute_semantic_features(t, cfg),
        tense: main_clause_tense(t),
        tree_depth: compute_tree_depth(t)?,
    })
}
