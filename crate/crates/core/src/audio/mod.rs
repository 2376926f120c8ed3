//! Waveform-level audio features.
//!
//! Everything here is a pure function of an [`AudioClip`] plus a small config
//! struct. Short-term features (ZCR, energy, spectral centroid) are computed
//! over fixed frames and averaged; pitch-derived features (mean pitch, voicing
//! ratio, jitter, shimmer) go through [`pitch::estimate_pitch`] and
//! [`voice::derive_pulses`].

pub mod pitch;
pub mod short_term;
pub mod voice;

use std::path::Path;

use thiserror::Error;

pub use pitch::{compute_voicing_ratio, estimate_pitch, PitchConfig, PitchTrack};
pub use short_term::{
    compute_energy_stats, compute_spectral_centroid, compute_zcr, EnergyStats, SpectralCentroid,
};
pub use voice::{
    compute_jitter_shimmer, compute_jitter_shimmer_runs, derive_pulses, JitterShimmer,
    PulseSequence,
};

/// Amplitudes may exceed unity by this much before a clip is rejected.
const AMPLITUDE_SLACK: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum AudioError {
    #[error("clip '{0}' has no samples")]
    EmptyClip(String),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
    #[error("sample {index} of clip '{id}' has amplitude {value} outside [-1, 1]")]
    AmplitudeOutOfRange { id: String, index: usize, value: f64 },
    #[error("invalid frame config: {0}")]
    BadFrameConfig(String),
    #[error("clip has {samples} samples but one window needs {needed}")]
    ClipTooShort { samples: usize, needed: usize },
    #[error("pitch track is empty")]
    EmptyTrack,
    #[error("no voiced run of at least two frames")]
    NoVoicedSpeech,
    #[error("need at least 2 periods, got {0}")]
    TooFewPeriods(usize),
    #[error("invalid pulse sequence: {0}")]
    BadPulses(String),
    #[error("failed to read wav '{path}': {reason}")]
    Wav { path: String, reason: String },
}

/// Mono PCM audio in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    id: String,
    samples: Vec<f64>,
    sample_rate: u32,
}

impl AudioClip {
    pub fn new(
        id: impl Into<String>,
        samples: Vec<f64>,
        sample_rate: u32,
    ) -> Result<Self, AudioError> {
        let id = id.into();
        if samples.is_empty() {
            return Err(AudioError::EmptyClip(id));
        }
        if sample_rate == 0 {
            return Err(AudioError::ZeroSampleRate);
        }
        if let Some((index, &value)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| !s.is_finite() || s.abs() > 1.0 + AMPLITUDE_SLACK)
        {
            return Err(AudioError::AmplitudeOutOfRange { id, index, value });
        }
        Ok(Self {
            id,
            samples,
            sample_rate,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Returns a copy with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, AudioError> {
        Self::new(
            self.id.clone(),
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
        )
    }

    /// Reads a 16/24/32-bit integer or float WAV file. Multi-channel input is
    /// downmixed by averaging channels.
    pub fn from_wav(path: &Path, id: impl Into<String>) -> Result<Self, AudioError> {
        let wav_err = |reason: String| AudioError::Wav {
            path: path.display().to_string(),
            reason,
        };
        let mut reader = hound::WavReader::open(path).map_err(|e| wav_err(e.to_string()))?;
        let spec = reader.spec();
        let channels = spec.channels.max(1) as usize;
        let interleaved: Vec<f64> = match spec.sample_format {
            hound::SampleFormat::Float => reader
                .samples::<f32>()
                .map(|s| s.map(f64::from))
                .collect::<Result<_, _>>()
                .map_err(|e| wav_err(e.to_string()))?,
            hound::SampleFormat::Int => {
                let full_scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
                reader
                    .samples::<i32>()
                    .map(|s| s.map(|v| v as f64 / full_scale))
                    .collect::<Result<_, _>>()
                    .map_err(|e| wav_err(e.to_string()))?
            }
        };
        let samples = interleaved
            .chunks_exact(channels)
            .map(|frame| frame.iter().sum::<f64>() / channels as f64)
            .collect();
        Self::new(id, samples, spec.sample_rate)
    }

    /// Writes the clip as 16-bit mono PCM.
    pub fn write_wav(&self, path: &Path) -> Result<(), AudioError> {
        let wav_err = |e: hound::Error| AudioError::Wav {
            path: path.display().to_string(),
            reason: e.to_string(),
        };
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: self.sample_rate,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut writer = hound::WavWriter::create(path, spec).map_err(wav_err)?;
        for &s in &self.samples {
            let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
            writer.write_sample(v).map_err(wav_err)?;
        }
        writer.finalize().map_err(wav_err)
    }
}

/// Short-term analysis framing. Defaults: 50 ms windows, 25 ms hop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameConfig {
    pub window_s: f64,
    pub hop_s: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            window_s: 0.050,
            hop_s: 0.025,
        }
    }
}

impl FrameConfig {
    /// Window and hop lengths in samples at `sample_rate`.
    pub fn lengths(&self, sample_rate: u32) -> Result<(usize, usize), AudioError> {
        if !(self.hop_s > 0.0 && self.hop_s <= self.window_s) {
            return Err(AudioError::BadFrameConfig(format!(
                "need 0 < hop ({}) <= window ({})",
                self.hop_s, self.window_s
            )));
        }
        let window = (self.window_s * sample_rate as f64).round() as usize;
        let hop = ((self.hop_s * sample_rate as f64).round() as usize).max(1);
        if window < 2 {
            return Err(AudioError::BadFrameConfig(format!(
                "window of {} s holds fewer than 2 samples at {} Hz",
                self.window_s, sample_rate
            )));
        }
        Ok((window, hop))
    }
}

/// Splits `samples` into full windows; a trailing partial window is dropped.
pub(crate) fn frames(
    samples: &[f64],
    window: usize,
    hop: usize,
) -> Result<impl Iterator<Item = &[f64]>, AudioError> {
    if samples.len() < window {
        return Err(AudioError::ClipTooShort {
            samples: samples.len(),
            needed: window,
        });
    }
    let count = 1 + (samples.len() - window) / hop;
    Ok((0..count).map(move |i| &samples[i * hop..i * hop + window]))
}

/// Clip duration in seconds.
pub fn compute_duration(clip: &AudioClip) -> f64 {
    clip.samples.len() as f64 / clip.sample_rate as f64
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AudioConfig {
    pub frames: FrameConfig,
    pub pitch: PitchConfig,
}

/// The nine waveform features. Pitch-derived values are `None` when the clip
/// has no (or too little) voiced speech.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioFeatures {
    pub total_duration: f64,
    pub stdev_energy: f64,
    pub mean_pitch: Option<f64>,
    pub voiced_to_unvoiced_ratio: f64,
    pub zero_crossing_rate: f64,
    pub energy_entropy: f64,
    pub spectral_centroid: f64,
    pub local_jitter: Option<f64>,
    pub local_shimmer: Option<f64>,
}

impl AudioFeatures {
    /// Feature values in registry order.
    pub fn values(&self) -> [(&'static str, Option<f64>); 9] {
        [
            ("total_duration", Some(self.total_duration)),
            ("stdev_energy", Some(self.stdev_energy)),
            ("mean_pitch", self.mean_pitch),
            ("voiced_to_unvoiced_ratio", Some(self.voiced_to_unvoiced_ratio)),
            ("zero_crossing_rate", Some(self.zero_crossing_rate)),
            ("energy_entropy", Some(self.energy_entropy)),
            ("spectral_centroid", Some(self.spectral_centroid)),
            ("localJitter", self.local_jitter),
            ("localShimmer", self.local_shimmer),
        ]
    }
}

pub fn extract_audio_features(
    clip: &AudioClip,
    cfg: &AudioConfig,
) -> Result<AudioFeatures, AudioError> {
    let zcr = compute_zcr(clip, &cfg.frames)?;
    let energy = compute_energy_stats(clip, &cfg.frames)?;
    let centroid = compute_spectral_centroid(clip, &cfg.frames)?;
    let track = estimate_pitch(clip, &cfg.pitch)?;
    let voicing = compute_voicing_ratio(&track)?;
    let (local_jitter, local_shimmer) = match derive_pulses(clip, &track) {
        Ok(runs) => match compute_jitter_shimmer_runs(&runs) {
            Ok(js) => (Some(js.local_jitter), js.local_shimmer),
            Err(AudioError::TooFewPeriods(_)) => (None, None),
            Err(e) => return Err(e),
        },
        Err(AudioError::NoVoicedSpeech) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(AudioFeatures {
        total_duration: compute_duration(clip),
        stdev_energy: energy.stdev_energy,
        mean_pitch: track.mean_f0(),
        voiced_to_unvoiced_ratio: voicing,
        zero_crossing_rate: zcr,
        energy_entropy: energy.energy_entropy,
        spectral_centroid: centroid.normalized,
        local_jitter,
        local_shimmer,
    })
}
