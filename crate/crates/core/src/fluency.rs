//! Fluency features from word-level alignments: silences, speaking and
//! articulation rates, filled pauses, syllable counts and repetitions.

use thiserror::Error;

use crate::alignment::{Alignment, Interval};
use crate::lexicon::{is_filler, is_stop_word, is_vowel_phone};

pub const SILENCE_THRESHOLD_S: f64 = 0.145;
pub const LONG_SILENCE_S: f64 = 0.5;

#[derive(Debug, Error, PartialEq)]
pub enum FluencyError {
    #[error("alignment has no words")]
    NoWords,
    #[error("articulation time {0} s is not positive")]
    DegenerateDuration(f64),
}

/// A silent gap between words (or at an utterance edge).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gap {
    pub start: f64,
    pub end: f64,
}

impl Gap {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SilenceSet {
    pub gaps: Vec<Gap>,
}

impl SilenceSet {
    pub fn len(&self) -> usize {
        self.gaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaps.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.gaps.iter().map(Gap::duration).sum()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.gaps.iter().map(Gap::duration).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SilenceConfig {
    pub threshold_s: f64,
    /// Count the stretch before the first word and after the last one.
    pub include_edges: bool,
}

impl Default for SilenceConfig {
    fn default() -> Self {
        Self {
            threshold_s: SILENCE_THRESHOLD_S,
            include_edges: true,
        }
    }
}

/// Gaps longer than the threshold, in time order. Depends only on timings.
pub fn detect_silences(a: &Alignment, cfg: &SilenceConfig) -> SilenceSet {
    let words = a.words();
    let mut candidates = Vec::new();
    if cfg.include_edges {
        let first = words.first().map_or(a.total_duration(), |w| w.start);
        candidates.push(Gap { start: 0.0, end: first });
    }
    candidates.extend(words.windows(2).map(|w| Gap {
        start: w[0].end,
        end: w[1].start,
    }));
    if cfg.include_edges {
        if let Some(last) = words.last() {
            candidates.push(Gap {
                start: last.end,
                end: a.total_duration(),
            });
        }
    }
    SilenceSet {
        gaps: candidates
            .into_iter()
            .filter(|g| g.duration() > cfg.threshold_s)
            .collect(),
    }
}

/// Syllables in a word: vowel phones when a phone list is given, otherwise an
/// orthographic estimate (vowel-letter groups, minus a silent final `e`,
/// at least 1).
pub fn count_syllables(word: &str, phones: Option<&[&str]>) -> usize {
    match phones {
        Some(p) if !p.is_empty() => p.iter().filter(|ph| is_vowel_phone(ph)).count(),
        _ => orthographic_syllables(word),
    }
}

fn orthographic_syllables(word: &str) -> usize {
    let letters: Vec<char> = word
        .chars()
        .filter(|c| c.is_alphabetic())
        .flat_map(char::to_lowercase)
        .collect();
    let is_vowel = |c: char| matches!(c, 'a' | 'e' | 'i' | 'o' | 'u' | 'y');
    let mut groups = 0;
    let mut prev_vowel = false;
    for &c in &letters {
        let v = is_vowel(c);
        if v && !prev_vowel {
            groups += 1;
        }
        prev_vowel = v;
    }
    let n = letters.len();
    let silent_e = n >= 2 && letters[n - 1] == 'e' && !is_vowel(letters[n - 2]);
    if silent_e {
        groups -= 1;
    }
    groups.max(1)
}

/// The twelve fluency features, in registry order.
#[derive(Debug, Clone, PartialEq)]
pub struct FluencyFeatures {
    pub filled_pause_rate: f64,
    pub general_silence: f64,
    pub mean_silence: f64,
    pub silence_abs_deviation: f64,
    pub silence_rate1: f64,
    pub silence_rate2: f64,
    pub speaking_rate: f64,
    pub articulation_rate: f64,
    pub longpfreq: f64,
    /// `None` when every word is a stop word or filler.
    pub average_syllables_in_words: Option<f64>,
    pub wordsyll2: f64,
    pub repetition_freq: f64,
}

impl FluencyFeatures {
    pub fn values(&self) -> [(&'static str, Option<f64>); 12] {
        [
            ("filled_pause_rate", Some(self.filled_pause_rate)),
            ("general_silence", Some(self.general_silence)),
            ("mean_silence", Some(self.mean_silence)),
            ("silence_abs_deviation", Some(self.silence_abs_deviation)),
            ("SilenceRate1", Some(self.silence_rate1)),
            ("SilenceRate2", Some(self.silence_rate2)),
            ("speaking_rate", Some(self.speaking_rate)),
            ("articulation_rate", Some(self.articulation_rate)),
            ("longpfreq", Some(self.longpfreq)),
            ("average_syllables_in_words", self.average_syllables_in_words),
            ("wordsyll2", Some(self.wordsyll2)),
            ("repetition_freq", Some(self.repetition_freq)),
        ]
    }
}

pub fn compute_fluency_features(
    a: &Alignment,
    silences: &SilenceSet,
) -> Result<FluencyFeatures, FluencyError> {
    let words = a.words();
    if words.is_empty() {
        return Err(FluencyError::NoWords);
    }
    let n_words = words.len() as f64;
    let total = a.total_duration();

    let fillers: Vec<&Interval> = words.iter().filter(|w| is_filler(&w.label)).collect();
    let filler_time: f64 = fillers.iter().map(|w| w.duration()).sum();
    let articulation_time = total - silences.total() - filler_time;
    if articulation_time <= 0.0 {
        return Err(FluencyError::DegenerateDuration(articulation_time));
    }

    let gaps = silences.durations();
    let n_gaps = gaps.len() as f64;
    let mean_silence = crate::stats::mean(&gaps).unwrap_or(0.0);
    let silence_abs_deviation = crate::stats::mean_abs_deviation(&gaps).unwrap_or(0.0);
    let long_gaps = gaps.iter().filter(|&&d| d >= LONG_SILENCE_S).count() as f64;

    let syllables: Vec<usize> = words
        .iter()
        .map(|w| count_syllables(&w.label, a.phones_in(w).as_deref()))
        .collect();
    let content: Vec<f64> = words
        .iter()
        .zip(&syllables)
        .filter(|(w, _)| !is_filler(&w.label) && !is_stop_word(&w.label))
        .map(|(_, &s)| s as f64)
        .collect();
    let wordsyll2 = syllables.iter().filter(|&&s| s > 2).count() as f64;

    let repeats = words
        .windows(2)
        .filter(|w| w[0].label.to_lowercase() == w[1].label.to_lowercase())
        .count() as f64;

    Ok(FluencyFeatures {
        filled_pause_rate: fillers.len() as f64 / total,
        general_silence: n_gaps,
        mean_silence,
        silence_abs_deviation,
        silence_rate1: n_gaps / n_words,
        silence_rate2: n_gaps / total,
        speaking_rate: n_words / total,
        articulation_rate: n_words / articulation_time,
        longpfreq: long_gaps / n_words,
        average_syllables_in_words: crate::stats::mean(&content),
        wordsyll2,
        repetition_freq: repeats / n_words,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn align(spans: &[(&str, f64, f64)], total: f64) -> Alignment {
        Alignment::new(
            spans.iter().map(|&(l, s, e)| Interval::new(l, s, e)).collect(),
            None,
            total,
        )
        .unwrap()
    }

    #[test]
    fn one_gap_of_200ms() {
        let a = align(&[("a", 0.0, 1.0), ("b", 1.2, 2.0)], 2.0);
        let s = detect_silences(&a, &SilenceConfig::default());
        assert_eq!(s.len(), 1);
        assert!((s.gaps[0].duration() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn gap_under_threshold_is_ignored() {
        let a = align(&[("a", 0.0, 1.0), ("b", 1.1, 2.0)], 2.0);
        assert!(detect_silences(&a, &SilenceConfig::default()).is_empty());
    }

    #[test]
    fn single_word_whole_clip() {
        let a = align(&[("a", 0.0, 3.0)], 3.0);
        assert!(detect_silences(&a, &SilenceConfig::default()).is_empty());
    }

    #[test]
    fn edge_gaps_can_be_disabled() {
        let a = align(&[("a", 0.5, 1.0)], 2.0);
        assert_eq!(detect_silences(&a, &SilenceConfig::default()).len(), 2);
        let inner_only = SilenceConfig {
            include_edges: false,
            ..Default::default()
        };
        assert!(detect_silences(&a, &inner_only).is_empty());
    }

    #[test]
    fn syllable_counts() {
        assert_eq!(count_syllables("cat", Some(&["K", "AE1", "T"])), 1);
        assert_eq!(count_syllables("probing", None), 2);
        assert_eq!(count_syllables("the", None), 1);
        assert_eq!(count_syllables("make", None), 1);
        assert_eq!(count_syllables("agree", None), 2);
        assert_eq!(count_syllables("rhythm", None), 1);
        assert_eq!(count_syllables("123", None), 1);
    }

    #[test]
    fn ten_words_no_pauses() {
        let spans: Vec<(String, f64, f64)> = (0..10)
            .map(|i| (format!("word{i}"), i as f64 * 0.5, (i + 1) as f64 * 0.5))
            .collect();
        let a = Alignment::new(
            spans.iter().map(|(l, s, e)| Interval::new(l.clone(), *s, *e)).collect(),
            None,
            5.0,
        )
        .unwrap();
        let s = detect_silences(&a, &SilenceConfig::default());
        let f = compute_fluency_features(&a, &s).unwrap();
        assert_eq!(f.speaking_rate, 2.0);
        assert_eq!(f.articulation_rate, 2.0);
        assert_eq!(f.silence_rate1, 0.0);
        assert_eq!(f.mean_silence, 0.0);
    }

    #[test]
    fn gap_statistics() {
        let a = align(&[("a", 0.0, 1.0), ("b", 1.2, 2.0), ("c", 2.4, 3.0)], 3.0);
        let s = detect_silences(&a, &SilenceConfig::default());
        let f = compute_fluency_features(&a, &s).unwrap();
        assert!((f.mean_silence - 0.3).abs() < 1e-12);
        assert!((f.silence_abs_deviation - 0.1).abs() < 1e-12);
        assert_eq!(f.general_silence, 2.0);
        assert!(f.articulation_rate > f.speaking_rate);
    }

    #[test]
    fn repetitions_and_fillers() {
        let a = align(&[("the", 0.0, 0.3), ("The", 0.3, 0.6), ("cat", 0.6, 1.0)], 1.0);
        let s = detect_silences(&a, &SilenceConfig::default());
        let f = compute_fluency_features(&a, &s).unwrap();
        assert!((f.repetition_freq - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.average_syllables_in_words, Some(1.0));

        let b = align(&[("um", 0.0, 0.5), ("yes", 0.5, 1.0)], 1.0);
        let f = compute_fluency_features(&b, &SilenceSet::default()).unwrap();
        assert_eq!(f.filled_pause_rate, 1.0);
        assert_eq!(f.articulation_rate, 4.0);
    }

    #[test]
    fn degenerate_articulation_time() {
        let a = align(&[("uh", 0.0, 1.0)], 1.0);
        assert!(matches!(
            compute_fluency_features(&a, &SilenceSet::default()),
            Err(FluencyError::DegenerateDuration(_))
        ));
    }

    #[test]
    fn no_words() {
        let a = Alignment::new(vec![], None, 1.0).unwrap();
        assert_eq!(
            compute_fluency_features(&a, &SilenceSet::default()),
            Err(FluencyError::NoWords)
        );
    }
}
