use std::ops::{Index, Range};

use super::spectrum::{MagnitudeSpectrum, BIN_WIDTH_HZ};
use super::AnalysisConfig;
use crate::audio::HOP_SIZE;

pub const NUM_BINS: usize = 12;

/// Widths of the twelve contiguous spectrum groups, low to high. Roughly
/// geometric (ratio ≈ 1.5) and summing to 512; the first group is DC plus
/// one index, i.e. 0 to 86.13 Hz.
pub const GROUP_SIZES: [usize; NUM_BINS] = [2, 3, 5, 7, 10, 15, 23, 34, 51, 77, 115, 170];

const fn group_starts() -> [usize; NUM_BINS + 1] {
    let mut starts = [0; NUM_BINS + 1];
    let mut i = 0;
    while i < NUM_BINS {
        starts[i + 1] = starts[i] + GROUP_SIZES[i];
        i += 1;
    }
    starts
}

const GROUP_STARTS: [usize; NUM_BINS + 1] = group_starts();

/// Spectrum indices belonging to `group`.
pub fn group_range(group: usize) -> Range<usize> {
    GROUP_STARTS[group]..GROUP_STARTS[group + 1]
}

/// Group that owns spectrum index `index` (`0..512`).
pub fn group_of_index(index: usize) -> Option<usize> {
    (0..NUM_BINS).find(|&g| group_range(g).contains(&index))
}

/// Representative index of a group: the upper middle, which is never DC.
pub fn center_index(group: usize) -> usize {
    let r = group_range(group);
    (r.start + r.end) / 2
}

/// Frequency at the centre index of a group.
pub fn center_frequency_hz(group: usize) -> f64 {
    center_index(group) as f64 * BIN_WIDTH_HZ
}

/// Lower and upper band edges in Hz covered by a group.
pub fn group_span_hz(group: usize) -> (f64, f64) {
    let r = group_range(group);
    (r.start as f64 * BIN_WIDTH_HZ, r.end as f64 * BIN_WIDTH_HZ)
}

/// Twelve per-bin values in `[0, 1]`, ordered low to high frequency.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BinFrame([f64; NUM_BINS]);

impl BinFrame {
    pub const ZERO: BinFrame = BinFrame([0.0; NUM_BINS]);

    /// `None` unless every value lies in `[0, 1]`.
    pub fn new(values: [f64; NUM_BINS]) -> Option<Self> {
        values.iter().all(|v| (0.0..=1.0).contains(v)).then_some(Self(values))
    }

    pub fn splat(value: f64) -> Option<Self> {
        Self::new([value; NUM_BINS])
    }

    pub(crate) fn from_unchecked(values: [f64; NUM_BINS]) -> Self {
        debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)), "{values:?}");
        Self(values)
    }

    pub fn values(&self) -> &[f64; NUM_BINS] {
        &self.0
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }

    pub fn low(&self) -> &[f64] {
        &self.0[0..4]
    }

    pub fn middle(&self) -> &[f64] {
        &self.0[4..8]
    }

    pub fn high(&self) -> &[f64] {
        &self.0[8..12]
    }
}

impl Index<usize> for BinFrame {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Un-normalized group values: sum of folded magnitudes divided by 1024.
///
/// A full-scale cosine sitting on any non-DC index folds to a magnitude of
/// exactly 1024, so every group reads 1.0 for a full-scale tone no matter
/// how many indices it spans.
pub fn raw_bins(spectrum: &MagnitudeSpectrum) -> [f64; NUM_BINS] {
    let mags = spectrum.magnitudes();
    std::array::from_fn(|g| mags[group_range(g)].iter().sum::<f64>() / HOP_SIZE as f64)
}

pub fn make_bins(spectrum: &MagnitudeSpectrum, cfg: &AnalysisConfig) -> BinFrame {
    let raw = raw_bins(spectrum);
    BinFrame::from_unchecked(raw.map(|v| (v / cfg.range_max).min(1.0)))
}
