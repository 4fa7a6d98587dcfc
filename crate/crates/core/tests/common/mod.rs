#![allow(dead_code)]

use std::f64::consts::TAU;
use std::path::Path;

use photism::audio::{HOP_SIZE, SAMPLE_RATE};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Writes mono 16-bit PCM at 44.1 kHz.
pub fn write_wav(path: &Path, samples: &[f32]) {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: SAMPLE_RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &s in samples {
        w.write_sample((s.clamp(-1.0, 1.0) * 32767.0).round() as i16).unwrap();
    }
    w.finalize().unwrap();
}

/// A busy test signal: a few drifting tones, a pulsed bass line, and noise.
pub fn music_like(seconds: f64, seed: u64) -> Vec<f32> {
    let n = (seconds * SAMPLE_RATE as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sr = SAMPLE_RATE as f64;
    (0..n)
        .map(|i| {
            let t = i as f64 / sr;
            let beat = if (t * 2.0).fract() < 0.15 { 1.0 } else { 0.2 };
            let bass = 0.35 * beat * (TAU * 55.0 * t).sin();
            let lead = 0.2 * (TAU * (440.0 + 220.0 * (0.3 * t).sin()) * t).sin();
            let hat = if (t * 8.0).fract() < 0.02 { 0.15 * rng.random_range(-1.0..1.0) } else { 0.0 };
            let hiss = 0.01 * rng.random_range(-1.0..1.0);
            (bass + lead + hat + hiss) as f32
        })
        .collect()
}

/// Full-scale cosine with exactly `cycles` periods per hop.
pub fn hop_cosine(cycles: usize, amplitude: f64) -> Vec<f32> {
    (0..HOP_SIZE).map(|n| (amplitude * (TAU * cycles as f64 * n as f64 / HOP_SIZE as f64).cos()) as f32).collect()
}
