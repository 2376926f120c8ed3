//! Glottal pulse marks and cycle-to-cycle perturbation (jitter, shimmer).
//!
//! Pulses are placed by integrating the f0 contour rather than by peak
//! picking on the waveform: within a voiced run the next pulse falls where
//! the accumulated phase `∫ f0(t) dt` reaches one more cycle, with f0
//! interpolated linearly between frame centres. This approximates a Praat
//! point process without depending on waveform polarity.

use super::{AudioClip, AudioError, PitchTrack};

/// Pulse marks for one contiguous voiced run.
#[derive(Debug, Clone, PartialEq)]
pub struct PulseSequence {
    times: Vec<f64>,
    amplitudes: Vec<f64>,
}

impl PulseSequence {
    /// `amplitudes[i]` is the peak absolute amplitude between pulse `i` and
    /// pulse `i + 1`, so there is one fewer amplitude than pulse.
    pub fn new(times: Vec<f64>, amplitudes: Vec<f64>) -> Result<Self, AudioError> {
        if times.len() < 2 {
            return Err(AudioError::BadPulses("need at least 2 pulses".into()));
        }
        if amplitudes.len() + 1 != times.len() {
            return Err(AudioError::BadPulses(format!(
                "{} pulses need {} amplitudes, got {}",
                times.len(),
                times.len() - 1,
                amplitudes.len()
            )));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(AudioError::BadPulses("pulse times must increase".into()));
        }
        if amplitudes.iter().any(|a| !(*a >= 0.0)) {
            return Err(AudioError::BadPulses("amplitudes must be >= 0".into()));
        }
        Ok(Self { times, amplitudes })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn periods(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// One pulse sequence per voiced run of at least two frames.
pub fn derive_pulses(clip: &AudioClip, track: &PitchTrack) -> Result<Vec<PulseSequence>, AudioError> {
    let mut runs = Vec::new();
    let f0 = track.f0();
    let times = track.times();
    let mut i = 0;
    while i < f0.len() {
        if f0[i].is_none() {
            i += 1;
            continue;
        }
        let start = i;
        while i < f0.len() && f0[i].is_some() {
            i += 1;
        }
        if i - start < 2 {
            continue;
        }
        let run_times = &times[start..i];
        let run_f0: Vec<f64> = f0[start..i].iter().map(|f| f.unwrap()).collect();
        let pulse_times = integrate_pulses(run_times, &run_f0);
        if pulse_times.len() < 2 {
            continue;
        }
        let amplitudes = pulse_times
            .windows(2)
            .map(|w| peak_between(clip, w[0], w[1]))
            .collect();
        runs.push(PulseSequence::new(pulse_times, amplitudes)?);
    }
    if runs.is_empty() {
        Err(AudioError::NoVoicedSpeech)
    } else {
        Ok(runs)
    }
}

/// Pulse times from the first to the last frame of a run, spaced by one
/// cycle of the piecewise-linear f0 contour.
pub(crate) fn integrate_pulses(times: &[f64], f0: &[f64]) -> Vec<f64> {
    let mut pulses = vec![times[0]];
    let mut t = times[0];
    let mut seg = 0;
    'outer: loop {
        let mut phase_left = 1.0;
        loop {
            let (t0, t1) = (times[seg], times[seg + 1]);
            let slope = (f0[seg + 1] - f0[seg]) / (t1 - t0);
            let f_at = f0[seg] + slope * (t - t0);
            let span = t1 - t;
            let seg_phase = f_at * span + 0.5 * slope * span * span;
            if seg_phase >= phase_left {
                // Solve f_at*d + slope/2*d^2 = phase_left in a cancellation-free form.
                let d = 2.0 * phase_left
                    / (f_at + (f_at * f_at + 2.0 * slope * phase_left).max(0.0).sqrt());
                t += d;
                pulses.push(t);
                break;
            }
            phase_left -= seg_phase;
            seg += 1;
            t = times[seg];
            if seg + 1 >= times.len() {
                break 'outer;
            }
        }
    }
    pulses
}

fn peak_between(clip: &AudioClip, from: f64, to: f64) -> f64 {
    let rate = clip.sample_rate() as f64;
    let samples = clip.samples();
    let a = ((from * rate).round() as usize).min(samples.len());
    let b = ((to * rate).round() as usize).min(samples.len());
    samples[a..b].iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterShimmer {
    pub local_jitter: f64,
    /// `None` when every period amplitude is zero.
    pub local_shimmer: Option<f64>,
}

/// Local jitter and shimmer of a single pulse sequence.
pub fn compute_jitter_shimmer(pulses: &PulseSequence) -> Result<JitterShimmer, AudioError> {
    compute_jitter_shimmer_runs(std::slice::from_ref(pulses))
}

/// Pools several voiced runs: neighbour differences are only taken within a
/// run, while the normalising means cover every period of every run.
pub fn compute_jitter_shimmer_runs(runs: &[PulseSequence]) -> Result<JitterShimmer, AudioError> {
    let mut period_diffs = Vec::new();
    let mut amp_diffs = Vec::new();
    let mut periods = Vec::new();
    let mut amps = Vec::new();
    for run in runs {
        let p = run.periods();
        period_diffs.extend(p.windows(2).map(|w| (w[0] - w[1]).abs()));
        amp_diffs.extend(run.amplitudes.windows(2).map(|w| (w[0] - w[1]).abs()));
        periods.extend(p);
        amps.extend_from_slice(&run.amplitudes);
    }
    if period_diffs.is_empty() {
        return Err(AudioError::TooFewPeriods(periods.len()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mean_amp = mean(&amps);
    Ok(JitterShimmer {
        local_jitter: mean(&period_diffs) / mean(&periods),
        local_shimmer: (mean_amp > 0.0).then(|| mean(&amp_diffs) / mean_amp),
    })
}
