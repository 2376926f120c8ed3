//! Frame-averaged short-term features: zero-crossing rate, energy spread,
//! energy entropy and spectral centroid.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::{frames, AudioClip, AudioError, FrameConfig};

/// Sub-frames per frame for the energy entropy.
pub const ENTROPY_SUBFRAMES: usize = 10;
const ENTROPY_EPS: f64 = 1e-12;

/// Mean per-frame zero-crossing rate, in `[0, 1]`.
///
/// Zero samples count as positive.
pub fn compute_zcr(clip: &AudioClip, cfg: &FrameConfig) -> Result<f64, AudioError> {
    let (window, hop) = cfg.lengths(clip.sample_rate())?;
    let rates: Vec<f64> = frames(clip.samples(), window, hop)?
        .map(frame_zcr)
        .collect();
    Ok(rates.iter().sum::<f64>() / rates.len() as f64)
}

fn frame_zcr(frame: &[f64]) -> f64 {
    let changes = frame
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();
    changes as f64 / (frame.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyStats {
    /// Population standard deviation of per-frame mean energy.
    pub stdev_energy: f64,
    /// Mean sub-frame energy entropy in bits, within `[0, log2(10)]`.
    pub energy_entropy: f64,
}

pub fn compute_energy_stats(clip: &AudioClip, cfg: &FrameConfig) -> Result<EnergyStats, AudioError> {
    let (window, hop) = cfg.lengths(clip.sample_rate())?;
    let mut energies = Vec::new();
    let mut entropies = Vec::new();
    for frame in frames(clip.samples(), window, hop)? {
        energies.push(frame.iter().map(|x| x * x).sum::<f64>() / frame.len() as f64);
        entropies.push(subframe_entropy(frame, ENTROPY_SUBFRAMES));
    }
    let n = energies.len() as f64;
    let mean = energies.iter().sum::<f64>() / n;
    let var = energies.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / n;
    Ok(EnergyStats {
        stdev_energy: var.sqrt(),
        energy_entropy: entropies.iter().sum::<f64>() / n,
    })
}

/// Entropy (bits) of the normalized sub-frame energy distribution.
///
/// The frame is split into `k` equal sub-frames of `len / k` samples; any
/// remainder at the end is ignored. A silent frame has entropy 0.
pub fn subframe_entropy(frame: &[f64], k: usize) -> f64 {
    let sub_len = frame.len() / k;
    if sub_len == 0 {
        return 0.0;
    }
    let sub: Vec<f64> = frame[..sub_len * k]
        .chunks_exact(sub_len)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>())
        .collect();
    let total: f64 = sub.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -sub.iter()
        .map(|e| {
            let p = e / total;
            p * (p + ENTROPY_EPS).log2()
        })
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralCentroid {
    /// Mean centroid divided by the Nyquist frequency, in `[0, 1]`.
    pub normalized: f64,
    /// Mean centroid in Hz.
    pub hz: f64,
}

/// Mean spectral centroid of Hann-windowed frames. All-zero frames count as
/// centroid 0.
pub fn compute_spectral_centroid(
    clip: &AudioClip,
    cfg: &FrameConfig,
) -> Result<SpectralCentroid, AudioError> {
    let rate = clip.sample_rate() as f64;
    let (window, hop) = cfg.lengths(clip.sample_rate())?;
    let hann: Vec<f64> = (0..window)
        .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / window as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(window);
    let mut buf = vec![Complex::new(0.0, 0.0); window];
    let bins = window / 2 + 1;
    let bin_hz = rate / window as f64;

    let mut centroids = Vec::new();
    for frame in frames(clip.samples(), window, hop)? {
        for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&hann) {
            *b = Complex::new(x * w, 0.0);
        }
        fft.process(&mut buf);
        let (mut weighted, mut total) = (0.0, 0.0);
        for (k, c) in buf.iter().take(bins).enumerate() {
            let mag = c.norm();
            weighted += k as f64 * bin_hz * mag;
            total += mag;
        }
        centroids.push(if total > 0.0 { weighted / total } else { 0.0 });
    }
    let hz = centroids.iter().sum::<f64>() / centroids.len() as f64;
    Ok(SpectralCentroid {
        normalized: hz / (rate / 2.0),
        hz,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(freq: f64, rate: u32, seconds: f64, amp: f64) -> AudioClip {
        phased_tone(freq, rate, seconds, amp, 0.0)
    }

    fn phased_tone(freq: f64, rate: u32, seconds: f64, amp: f64, phase: f64) -> AudioClip {
        let n = (seconds * rate as f64) as usize;
        let s = (0..n)
            .map(|i| amp * (2.0 * PI * freq * i as f64 / rate as f64 + phase).sin())
            .collect();
        AudioClip::new("tone", s, rate).unwrap()
    }

    /// Direct sign-change count over the same frames, independent of `frame_zcr`.
    fn zcr_oracle(samples: &[f64], window: usize, hop: usize) -> f64 {
        let mut rates = vec![];
        let mut start = 0;
        while start + window <= samples.len() {
            let mut c = 0usize;
            for n in start + 1..start + window {
                let a = if samples[n - 1] >= 0.0 { 1 } else { -1 };
                let b = if samples[n] >= 0.0 { 1 } else { -1 };
                if a * b < 0 {
                    c += 1;
                }
            }
            rates.push(c as f64 / (window - 1) as f64);
            start += hop;
        }
        rates.iter().sum::<f64>() / rates.len() as f64
    }

    #[test]
    fn zcr_alternating_is_one() {
        let s: Vec<f64> = (0..1600).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        let c = AudioClip::new("alt", s, 16000).unwrap();
        assert_eq!(compute_zcr(&c, &FrameConfig::default()).unwrap(), 1.0);
    }

    #[test]
    fn zcr_constant_is_zero() {
        let c = AudioClip::new("k", vec![0.3; 4000], 16000).unwrap();
        assert_eq!(compute_zcr(&c, &FrameConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn zcr_of_100hz_sine() {
        // At zero phase every frame starts on a crossing and sees only 9 of its 10.
        for phase in [0.0, 0.3, 1.0] {
            let c = phased_tone(100.0, 16000, 1.0, 0.8, phase);
            let z = compute_zcr(&c, &FrameConfig::default()).unwrap();
            let oracle = zcr_oracle(c.samples(), 800, 400);
            assert!((z - oracle).abs() < 1e-12);
        }
        let c = phased_tone(100.0, 16000, 1.0, 0.8, 0.3);
        let z = compute_zcr(&c, &FrameConfig::default()).unwrap();
        assert!((z - 0.0125).abs() / 0.0125 < 0.05, "zcr = {z}");
    }

    #[test]
    fn zcr_rejects_short_clip() {
        let c = AudioClip::new("s", vec![0.1; 799], 16000).unwrap();
        assert!(matches!(
            compute_zcr(&c, &FrameConfig::default()),
            Err(AudioError::ClipTooShort { needed: 800, .. })
        ));
    }

    #[test]
    fn entropy_uniform_and_degenerate() {
        let uniform = vec![0.5; 100];
        assert!((subframe_entropy(&uniform, 10) - 10f64.log2()).abs() < 1e-6);
        let mut spike = vec![0.0; 100];
        spike[3] = 1.0;
        assert!(subframe_entropy(&spike, 10).abs() < 1e-9);
        assert_eq!(subframe_entropy(&[0.0; 100], 10), 0.0);
    }

    #[test]
    fn stdev_energy_of_steady_sine() {
        // 200 Hz at 16 kHz: 10 full cycles per 800-sample frame, so every frame
        // has energy exactly amp^2 / 2.
        let c = tone(200.0, 16000, 1.0, 0.7);
        let e = compute_energy_stats(&c, &FrameConfig::default()).unwrap();
        assert!(e.stdev_energy < 1e-3);
        assert!(e.energy_entropy > 3.3 && e.energy_entropy <= 10f64.log2() + 1e-9);
    }

    /// Plain O(n^2) DFT centroid of one Hann-windowed frame.
    fn dft_centroid(frame: &[f64], rate: f64) -> f64 {
        let n = frame.len();
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..=n / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for (t, &x) in frame.iter().enumerate() {
                let w = 0.5 - 0.5 * (2.0 * PI * t as f64 / n as f64).cos();
                let ang = -2.0 * PI * (k * t) as f64 / n as f64;
                re += x * w * ang.cos();
                im += x * w * ang.sin();
            }
            let mag = (re * re + im * im).sqrt();
            num += k as f64 * rate / n as f64 * mag;
            den += mag;
        }
        num / den
    }

    #[test]
    fn centroid_of_pure_tones() {
        for (freq, expected) in [(1000.0, 0.125), (4000.0, 0.5)] {
            let c = tone(freq, 16000, 0.2, 0.5);
            let got = compute_spectral_centroid(&c, &FrameConfig::default()).unwrap();
            let oracle = dft_centroid(&c.samples()[..800], 16000.0) / 8000.0;
            assert!((oracle - expected).abs() / expected < 0.02, "oracle {oracle}");
            assert!((got.normalized - expected).abs() / expected < 0.02);
            assert!((got.hz - got.normalized * 8000.0).abs() < 1e-9);
        }
    }

    #[test]
    fn centroid_of_dc_and_silence() {
        let dc = AudioClip::new("dc", vec![0.5; 1600], 16000).unwrap();
        let got = compute_spectral_centroid(&dc, &FrameConfig::default()).unwrap();
        assert!(got.normalized < 0.005, "{got:?}");
        let silent = AudioClip::new("z", vec![0.0; 1600], 16000).unwrap();
        assert_eq!(
            compute_spectral_centroid(&silent, &FrameConfig::default())
                .unwrap()
                .normalized,
            0.0
        );
    }
}
