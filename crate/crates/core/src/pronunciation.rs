//! Suprasegmental pronunciation features from the phone tier: stress
//! distribution, vowel/consonant proportions and rhythm (SD, normalized SD
//! and pairwise variability) of vocalic, consonantal and syllabic segments.

use thiserror::Error;

use crate::alignment::{Alignment, Interval};
use crate::lexicon::{is_stressed_phone, is_vowel_phone};
use crate::stats::{mean, npvi, population_std, rpvi};

/// Adjacent phones further apart than this are separated by silence.
const CONTIGUITY_SLACK: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum PronunciationError {
    #[error("alignment has no phone tier")]
    MissingPhoneTier,
    #[error("phone tier contains no vowels")]
    NoVowels,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Syllable {
    pub duration: f64,
    /// Start of the syllable's first phone.
    pub onset: f64,
    pub stressed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentSeries {
    pub vocalic: Vec<f64>,
    pub consonantal: Vec<f64>,
    pub syllables: Vec<Syllable>,
}

/// Splits the phone tier into vocalic and consonantal runs and syllables.
///
/// Runs are maximal sequences of same-class phones not interrupted by
/// silence. Each vowel is a syllable nucleus and takes the consonants since
/// the previous nucleus as its onset; consonants after the last nucleus join
/// the last syllable.
pub fn segment_phones(a: &Alignment) -> Result<SegmentSeries, PronunciationError> {
    let phones = a.phones().ok_or(PronunciationError::MissingPhoneTier)?;
    if !phones.iter().any(|p| is_vowel_phone(&p.label)) {
        return Err(PronunciationError::NoVowels);
    }

    let mut vocalic = Vec::new();
    let mut consonantal = Vec::new();
    let mut run: Option<(bool, f64, f64)> = None; // (is_vowel, duration, end)
    for p in phones {
        let v = is_vowel_phone(&p.label);
        match run.as_mut() {
            Some((rv, dur, end)) if *rv == v && p.start <= *end + CONTIGUITY_SLACK => {
                *dur += p.duration();
                *end = p.end;
            }
            _ => {
                if let Some((rv, dur, _)) = run.take() {
                    if rv { vocalic.push(dur) } else { consonantal.push(dur) }
                }
                run = Some((v, p.duration(), p.end));
            }
        }
    }
    if let Some((rv, dur, _)) = run {
        if rv { vocalic.push(dur) } else { consonantal.push(dur) }
    }

    let mut syllables: Vec<Syllable> = Vec::new();
    let mut pending: Vec<&Interval> = Vec::new();
    for p in phones {
        if is_vowel_phone(&p.label) {
            let onset = pending.first().map_or(p.start, |c| c.start);
            let duration = pending.iter().map(|c| c.duration()).sum::<f64>() + p.duration();
            syllables.push(Syllable {
                duration,
                onset,
                stressed: is_stressed_phone(&p.label),
            });
            pending.clear();
        } else {
            pending.push(p);
        }
    }
    if let Some(last) = syllables.last_mut() {
        last.duration += pending.iter().map(|c| c.duration()).sum::<f64>();
    }

    Ok(SegmentSeries {
        vocalic,
        consonantal,
        syllables,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressFeatures {
    pub stressed_syll_percent: f64,
    /// Mean index distance between consecutive stressed syllables.
    pub stress_distance_syll_mean: Option<f64>,
    /// Mean onset-time distance (s) between consecutive stressed syllables.
    pub stress_distance_mean: Option<f64>,
}

pub fn compute_stress_features(seg: &SegmentSeries) -> StressFeatures {
    let stressed: Vec<(usize, f64)> = seg
        .syllables
        .iter()
        .enumerate()
        .filter(|(_, s)| s.stressed)
        .map(|(i, s)| (i, s.onset))
        .collect();
    let n = seg.syllables.len().max(1) as f64;
    let idx_gaps: Vec<f64> = stressed.windows(2).map(|w| (w[1].0 - w[0].0) as f64).collect();
    let time_gaps: Vec<f64> = stressed.windows(2).map(|w| w[1].1 - w[0].1).collect();
    StressFeatures {
        stressed_syll_percent: 100.0 * stressed.len() as f64 / n,
        stress_distance_syll_mean: mean(&idx_gaps),
        stress_distance_mean: mean(&time_gaps),
    }
}

/// Rhythm statistics of one duration series; all `None` below two segments.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SeriesRhythm {
    pub sd: Option<f64>,
    pub sd_norm: Option<f64>,
    pub npvi: Option<f64>,
    pub rpvi: Option<f64>,
}

impl SeriesRhythm {
    pub fn of(durations: &[f64]) -> Self {
        if durations.len() < 2 {
            return Self::default();
        }
        let sd = population_std(durations);
        let m = mean(durations);
        Self {
            sd,
            sd_norm: sd.zip(m).and_then(|(s, m)| (m > 0.0).then(|| s / m)),
            npvi: npvi(durations),
            rpvi: rpvi(durations),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhythmFeatures {
    pub vowel_percentage: f64,
    pub consonant_percentage: f64,
    pub vowel: SeriesRhythm,
    pub consonant: SeriesRhythm,
    pub syllable: SeriesRhythm,
}

pub fn compute_rhythm_features(seg: &SegmentSeries, a: &Alignment) -> RhythmFeatures {
    let phonation: f64 = a
        .phones()
        .map(|p| p.iter().map(Interval::duration).sum())
        .unwrap_or(0.0);
    let pct = |d: &[f64]| {
        if phonation > 0.0 {
            100.0 * d.iter().sum::<f64>() / phonation
        } else {
            0.0
        }
    };
    let syll: Vec<f64> = seg.syllables.iter().map(|s| s.duration).collect();
    RhythmFeatures {
        vowel_percentage: pct(&seg.vocalic),
        consonant_percentage: pct(&seg.consonantal),
        vowel: SeriesRhythm::of(&seg.vocalic),
        consonant: SeriesRhythm::of(&seg.consonantal),
        syllable: SeriesRhythm::of(&syll),
    }
}

/// The fourteen pronunciation features plus three raw-PVI companions.
#[derive(Debug, Clone, PartialEq)]
pub struct PronunciationFeatures {
    pub stress: StressFeatures,
    pub rhythm: RhythmFeatures,
}

impl PronunciationFeatures {
    pub fn values(&self) -> [(&'static str, Option<f64>); 17] {
        let s = &self.stress;
        let r = &self.rhythm;
        [
            ("StressedSyllPercent", Some(s.stressed_syll_percent)),
            ("StressDistanceSyllMean", s.stress_distance_syll_mean),
            ("StressDistanceMean", s.stress_distance_mean),
            ("vowelPercentage", Some(r.vowel_percentage)),
            ("consonantPercentage", Some(r.consonant_percentage)),
            ("vowelDurationSD", r.vowel.sd),
            ("consonantDurationSD", r.consonant.sd),
            ("syllableDurationSD", r.syllable.sd),
            ("vowelSDNorm", r.vowel.sd_norm),
            ("consonantSDNorm", r.consonant.sd_norm),
            ("syllableSDNorm", r.syllable.sd_norm),
            ("vowelPVINorm", r.vowel.npvi),
            ("consonantPVINorm", r.consonant.npvi),
            ("syllablePVINorm", r.syllable.npvi),
            ("vowelRawPVI", r.vowel.rpvi),
            ("consonantRawPVI", r.consonant.rpvi),
            ("syllableRawPVI", r.syllable.rpvi),
        ]
    }
}

pub fn extract_pronunciation_features(
    a: &Alignment,
) -> Result<PronunciationFeatures, PronunciationError> {
    let seg = segment_phones(a)?;
    Ok(PronunciationFeatures {
        stress: compute_stress_features(&seg),
        rhythm: compute_rhythm_features(&seg, a),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Phones laid end to end with the given durations.
    fn phones(labels: &[(&str, f64)]) -> Alignment {
        let mut t = 0.0;
        let mut out = vec![];
        for &(l, d) in labels {
            out.push(Interval::new(l, t, t + d));
            t += d;
        }
        Alignment::new(vec![Interval::new("w", 0.0, t)], Some(out), t).unwrap()
    }

    #[test]
    fn cat_segments() {
        let seg = segment_phones(&phones(&[("K", 0.1), ("AE1", 0.2), ("T", 0.1)])).unwrap();
        assert_eq!(seg.vocalic.len(), 1);
        assert_eq!(seg.consonantal.len(), 2);
        assert_eq!(seg.syllables.len(), 1);
        assert!(seg.syllables[0].stressed);
        assert!((seg.syllables[0].duration - 0.4).abs() < 1e-12);
    }

    #[test]
    fn about_has_second_syllable_stressed() {
        let seg = segment_phones(&phones(&[("AH0", 0.1), ("B", 0.1), ("AW1", 0.2), ("T", 0.1)]))
            .unwrap();
        assert_eq!(seg.syllables.len(), 2);
        assert!(!seg.syllables[0].stressed);
        assert!(seg.syllables[1].stressed);
        assert!((seg.syllables[1].onset - 0.1).abs() < 1e-12);
        assert!((seg.syllables[1].duration - 0.4).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        let no_vowel = phones(&[("K", 0.1), ("T", 0.1)]);
        assert_eq!(segment_phones(&no_vowel), Err(PronunciationError::NoVowels));
        let no_tier = Alignment::new(vec![Interval::new("w", 0.0, 1.0)], None, 1.0).unwrap();
        assert_eq!(segment_phones(&no_tier), Err(PronunciationError::MissingPhoneTier));
    }

    #[test]
    fn silence_breaks_runs() {
        let a = Alignment::new(
            vec![Interval::new("w", 0.0, 1.0)],
            Some(vec![
                Interval::new("AA1", 0.0, 0.2),
                Interval::new("IY0", 0.4, 0.5),
            ]),
            1.0,
        )
        .unwrap();
        let seg = segment_phones(&a).unwrap();
        assert_eq!(seg.vocalic.len(), 2);
    }

    fn series(stressed: &[bool], onset_step: f64) -> SegmentSeries {
        SegmentSeries {
            vocalic: vec![],
            consonantal: vec![],
            syllables: stressed
                .iter()
                .enumerate()
                .map(|(i, &s)| Syllable {
                    duration: onset_step,
                    onset: i as f64 * onset_step,
                    stressed: s,
                })
                .collect(),
        }
    }

    #[test]
    fn stress_examples() {
        let f = compute_stress_features(&series(&[true, false, true, false], 0.25));
        assert_eq!(f.stressed_syll_percent, 50.0);
        assert_eq!(f.stress_distance_syll_mean, Some(2.0));

        let f = compute_stress_features(&series(&[true; 5], 0.3));
        assert!((f.stress_distance_mean.unwrap() - 0.3).abs() < 1e-12);

        let f = compute_stress_features(&series(&[false, true, false], 0.3));
        assert!((f.stressed_syll_percent - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(f.stress_distance_mean, None);
        assert_eq!(f.stress_distance_syll_mean, None);
    }

    #[test]
    fn rhythm_examples() {
        let equal = SeriesRhythm::of(&[0.1, 0.1, 0.1]);
        assert!(equal.sd.unwrap().abs() < 1e-15);
        assert_eq!(equal.npvi, Some(0.0));

        let pair = SeriesRhythm::of(&[0.1, 0.2]);
        assert!((pair.npvi.unwrap() - 66.666_666_666_666_67).abs() < 1e-9);
        assert!((pair.rpvi.unwrap() - 0.1).abs() < 1e-12);

        assert_eq!(SeriesRhythm::of(&[0.2]), SeriesRhythm::default());
    }

    #[test]
    fn vowel_percentage_of_phonation() {
        // 0.6 s of vowels out of 1.0 s of phones.
        let a = phones(&[("S", 0.2), ("AA1", 0.6), ("T", 0.2)]);
        let seg = segment_phones(&a).unwrap();
        let r = compute_rhythm_features(&seg, &a);
        assert!((r.vowel_percentage - 60.0).abs() < 1e-9);
        assert!((r.vowel_percentage + r.consonant_percentage - 100.0).abs() < 1e-9);
    }
}
