use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::audio::{SampleHop, HOP_SIZE, SAMPLE_RATE};

/// Number of folded magnitudes kept per hop.
pub const SPECTRUM_LEN: usize = HOP_SIZE / 2;

/// Frequency spacing of adjacent spectrum indices (44100 / 1024 ≈ 43.066 Hz).
pub const BIN_WIDTH_HZ: f64 = SAMPLE_RATE as f64 / HOP_SIZE as f64;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Window {
    #[default]
    Rectangular,
    /// Periodic Hann window.
    Hann,
}

impl FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rect" | "rectangular" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(format!("unknown window '{other}' (expected rect or hann)")),
        }
    }
}

impl fmt::Display for Window {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Window::Rectangular => "rect",
            Window::Hann => "hann",
        })
    }
}

/// Folded FFT magnitudes: indices `0..512` of the 1024-point transform, each doubled.
#[derive(Debug, Clone, PartialEq)]
pub struct MagnitudeSpectrum {
    magnitudes: Box<[f64; SPECTRUM_LEN]>,
}

impl MagnitudeSpectrum {
    pub fn zero() -> Self {
        Self { magnitudes: Box::new([0.0; SPECTRUM_LEN]) }
    }

    /// Wraps precomputed magnitudes; `None` if any value is negative or not finite.
    pub fn from_magnitudes(values: [f64; SPECTRUM_LEN]) -> Option<Self> {
        values.iter().all(|v| v.is_finite() && *v >= 0.0).then(|| Self { magnitudes: Box::new(values) })
    }

    pub fn magnitudes(&self) -> &[f64; SPECTRUM_LEN] {
        &self.magnitudes
    }

    pub fn bin_width_hz(&self) -> f64 {
        BIN_WIDTH_HZ
    }
}

/// Reusable FFT plan and scratch buffers.
pub struct SpectrumAnalyzer {
    fft: Arc<dyn Fft<f64>>,
    buffer: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
    hann: Vec<f64>,
}

impl Default for SpectrumAnalyzer {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for SpectrumAnalyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectrumAnalyzer").finish_non_exhaustive()
    }
}

impl SpectrumAnalyzer {
    pub fn new() -> Self {
        let fft = FftPlanner::new().plan_fft_forward(HOP_SIZE);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        let hann = (0..HOP_SIZE).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / HOP_SIZE as f64).cos()).collect();
        Self { fft, buffer: vec![Complex::default(); HOP_SIZE], scratch, hann }
    }

    /// Full 1024-point complex transform of the (windowed) hop.
    pub fn transform(&mut self, hop: &SampleHop, window: Window) -> &[Complex<f64>] {
        for (n, (slot, &x)) in self.buffer.iter_mut().zip(hop.samples().iter()).enumerate() {
            let w = match window {
                Window::Rectangular => 1.0,
                Window::Hann => self.hann[n],
            };
            *slot = Complex::new(f64::from(x) * w, 0.0);
        }
        self.fft.process_with_scratch(&mut self.buffer, &mut self.scratch);
        &self.buffer
    }

    pub fn magnitude(&mut self, hop: &SampleHop, window: Window) -> MagnitudeSpectrum {
        let bins = self.transform(hop, window);
        let mut out = Box::new([0.0; SPECTRUM_LEN]);
        // Real input: the upper half mirrors the lower, so keep the lower half
        // doubled. DC is doubled too, matching the fold applied to every kept point.
        for (m, c) in out.iter_mut().zip(bins.iter()) {
            *m = 2.0 * c.norm();
        }
        MagnitudeSpectrum { magnitudes: out }
    }
}

/// One-shot folded magnitude spectrum. Plans a fresh FFT; prefer
/// [`SpectrumAnalyzer`] in loops.
pub fn fft_magnitude(hop: &SampleHop, window: Window) -> MagnitudeSpectrum {
    SpectrumAnalyzer::new().magnitude(hop, window)
}
