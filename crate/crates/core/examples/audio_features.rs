//! Waveform features for a WAV file, or for a synthetic voiced clip.
//!
//! ```text
//! cargo run --example audio_features -- [FILE.wav]
//! ```

use probebench::audio::{extract_audio_features, AudioClip, AudioConfig};
use probebench::synth;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let clip = match std::env::args().nth(1) {
        Some(path) => AudioClip::from_wav(path.as_ref(), "input")?,
        None => {
            let rate = 16_000;
            let mut samples = synth::harmonic_glide(110.0, 180.0, rate, 1.5, 0.4);
            let noise = synth::white_noise(samples.len(), 0.01, 7);
            samples.iter_mut().zip(noise).for_each(|(s, n)| *s += n);
            synth::clip("glide", samples, rate)
        }
    };
    let features = extract_audio_features(&clip, &AudioConfig::default())?;
    for (name, value) in features.values() {
        match value {
            Some(v) => println!("{name:<26}{v:.6}"),
            None => println!("{name:<26}NA"),
        }
    }
    Ok(())
}
