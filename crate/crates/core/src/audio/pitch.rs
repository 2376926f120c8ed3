//! Autocorrelation pitch tracking.
//!
//! Each frame is mean-removed and its normalized autocorrelation is evaluated
//! over the lag range implied by `[f0_min, f0_max]`. A frame is voiced when
//! the highest correlation exceeds the voicing threshold; the period is then
//! refined with a parabola through the peak and its two neighbours.

use super::{frames, AudioClip, AudioError};

/// Among peaks this close to the global maximum, the shortest lag wins. An
/// exactly periodic signal correlates equally well at every multiple of its
/// period, so a bare argmax would be free to pick a sub-octave.
const OCTAVE_TOLERANCE: f64 = 0.97;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PitchConfig {
    pub f0_min: f64,
    pub f0_max: f64,
    pub frame_s: f64,
    pub hop_s: f64,
    pub voicing_threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            f0_min: 75.0,
            f0_max: 500.0,
            frame_s: 0.040,
            hop_s: 0.010,
            voicing_threshold: 0.45,
        }
    }
}

/// Per-frame pitch estimates. `f0[i]` is `None` for unvoiced frames.
#[derive(Debug, Clone, PartialEq)]
pub struct PitchTrack {
    times: Vec<f64>,
    f0: Vec<Option<f64>>,
    strength: Vec<f64>,
}

impl PitchTrack {
    /// Builds a track from frame-centre times, optional f0 values and voicing
    /// strengths. Times must be strictly increasing and strengths in `[0, 1]`.
    pub fn new(times: Vec<f64>, f0: Vec<Option<f64>>, strength: Vec<f64>) -> Result<Self, String> {
        if times.len() != f0.len() || times.len() != strength.len() {
            return Err("times, f0 and strength must have equal length".into());
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err("frame times must be strictly increasing".into());
        }
        if strength.iter().any(|s| !(0.0..=1.0).contains(s)) {
            return Err("voicing strength outside [0, 1]".into());
        }
        if f0.iter().flatten().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err("f0 values must be positive".into());
        }
        Ok(Self { times, f0, strength })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn f0(&self) -> &[Option<f64>] {
        &self.f0
    }

    pub fn voicing_strength(&self) -> &[f64] {
        &self.strength
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn voiced_count(&self) -> usize {
        self.f0.iter().filter(|f| f.is_some()).count()
    }

    /// Mean f0 over voiced frames.
    pub fn mean_f0(&self) -> Option<f64> {
        let voiced: Vec<f64> = self.f0.iter().flatten().copied().collect();
        crate::stats::mean(&voiced)
    }
}

pub fn estimate_pitch(clip: &AudioClip, cfg: &PitchConfig) -> Result<PitchTrack, AudioError> {
    if !(cfg.f0_min > 0.0 && cfg.f0_min < cfg.f0_max) {
        return Err(AudioError::BadFrameConfig(format!(
            "pitch range [{}, {}] is empty",
            cfg.f0_min, cfg.f0_max
        )));
    }
    let rate = clip.sample_rate() as f64;
    let frame_cfg = super::FrameConfig {
        window_s: cfg.frame_s,
        hop_s: cfg.hop_s,
    };
    let (window, hop) = frame_cfg.lengths(clip.sample_rate())?;
    let min_lag = ((rate / cfg.f0_max).floor() as usize).max(2);
    let max_lag = ((rate / cfg.f0_min).ceil() as usize).min(window.saturating_sub(2));
    if min_lag >= max_lag {
        return Err(AudioError::BadFrameConfig(format!(
            "pitch frame of {window} samples cannot hold the lag range"
        )));
    }

    let mut times = Vec::new();
    let mut f0 = Vec::new();
    let mut strength = Vec::new();
    let mut centered = vec![0.0; window];
    for (i, frame) in frames(clip.samples(), window, hop)?.enumerate() {
        times.push((i * hop) as f64 / rate + window as f64 / (2.0 * rate));
        let m = frame.iter().sum::<f64>() / window as f64;
        for (c, x) in centered.iter_mut().zip(frame) {
            *c = x - m;
        }
        match frame_period(&centered, min_lag, max_lag, cfg.voicing_threshold) {
            Some((period, peak)) => {
                f0.push(Some((rate / period).clamp(cfg.f0_min, cfg.f0_max)));
                strength.push(peak.clamp(0.0, 1.0));
            }
            None => {
                f0.push(None);
                let peak = (min_lag..=max_lag)
                    .map(|lag| normalized_acf(&centered, lag))
                    .fold(0.0f64, f64::max);
                strength.push(peak.clamp(0.0, 1.0));
            }
        }
    }
    PitchTrack::new(times, f0, strength).map_err(AudioError::BadPulses)
}

/// `sum x[n] x[n+lag] / sqrt(sum x[n]^2 * sum x[n+lag]^2)` over the overlap.
pub(crate) fn normalized_acf(x: &[f64], lag: usize) -> f64 {
    let n = x.len() - lag;
    let (head, tail) = (&x[..n], &x[lag..]);
    let mut cross = 0.0;
    let mut e0 = 0.0;
    let mut e1 = 0.0;
    for (a, b) in head.iter().zip(tail) {
        cross += a * b;
        e0 += a * a;
        e1 += b * b;
    }
    let denom = (e0 * e1).sqrt();
    if denom > 0.0 {
        cross / denom
    } else {
        0.0
    }
}

/// Returns `(period_in_samples, peak_correlation)` for a voiced frame.
fn frame_period(x: &[f64], min_lag: usize, max_lag: usize, threshold: f64) -> Option<(f64, f64)> {
    if x.iter().all(|&v| v == 0.0) {
        return None;
    }
    // r[i] holds lag (min_lag - 1 + i) so every candidate has both neighbours.
    let r: Vec<f64> = (min_lag - 1..=max_lag + 1)
        .map(|lag| normalized_acf(x, lag))
        .collect();
    let inner = 1..r.len() - 1;
    let peak = r[inner.clone()].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(peak > threshold) {
        return None;
    }
    let chosen = inner
        .clone()
        .find(|&i| r[i] >= OCTAVE_TOLERANCE * peak && r[i] >= r[i - 1] && r[i] >= r[i + 1])
        .unwrap_or_else(|| inner.clone().find(|&i| r[i] == peak).unwrap());
    let (a, b, c) = (r[chosen - 1], r[chosen], r[chosen + 1]);
    let denom = a - 2.0 * b + c;
    let shift = if denom != 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    let lag = (min_lag - 1 + chosen) as f64 + shift;
    Some((lag, b))
}

/// `n_voiced / max(n_unvoiced, 1)`.
pub fn compute_voicing_ratio(track: &PitchTrack) -> Result<f64, AudioError> {
    if track.is_empty() {
        return Err(AudioError::EmptyTrack);
    }
    let voiced = track.voiced_count();
    let unvoiced = track.len() - voiced;
    Ok(voiced as f64 / unvoiced.max(1) as f64)
}
