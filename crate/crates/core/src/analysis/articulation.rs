//! Running averages, volatility, and volatility triggers.
//!
//! Volatility is the per-bin absolute deviation of the current bins from
//! their running mean. A quick staccato attack moves a bin far from its
//! recent average; a sustained legato note does not.

use std::collections::VecDeque;

use super::bins::{BinFrame, NUM_BINS};
use super::AnalysisConfig;
use crate::audio::HOP_SECONDS;

/// Arithmetic mean of frames, oldest first. Accumulation order is fixed so
/// every caller gets bit-identical results.
fn mean<'a>(frames: impl Iterator<Item = &'a BinFrame>) -> BinFrame {
    let mut sum = [0.0; NUM_BINS];
    let mut count = 0usize;
    for f in frames {
        for (s, v) in sum.iter_mut().zip(f.iter()) {
            *s += v;
        }
        count += 1;
    }
    if count == 0 {
        return BinFrame::ZERO;
    }
    BinFrame::from_unchecked(sum.map(|s| (s / count as f64).clamp(0.0, 1.0)))
}

/// Mean of the most recent `min(n, history.len() + 1)` frames, `current` included.
///
/// `history` is ordered oldest to newest and excludes `current`.
pub fn update_running_avg(history: &[BinFrame], current: &BinFrame, n: usize) -> BinFrame {
    assert!(n >= 1, "averaging window must hold at least one frame");
    let keep = (n - 1).min(history.len());
    mean(history[history.len() - keep..].iter().chain(std::iter::once(current)))
}

pub fn volatility(current: &BinFrame, avg: &BinFrame) -> BinFrame {
    BinFrame::from_unchecked(std::array::from_fn(|i| (current[i] - avg[i]).abs()))
}

/// Mean of the most recent `min(n, history.len())` volatility frames.
/// `history` is ordered oldest to newest and already includes the current frame.
pub fn avg_volatility(history: &[BinFrame], n: usize) -> BinFrame {
    assert!(n >= 1, "averaging window must hold at least one frame");
    let keep = n.min(history.len());
    mean(history[history.len() - keep..].iter())
}

/// Seconds of audio spanned by an `n`-hop window: `n · 1024 / 44100`.
pub fn window_duration_s(n: usize) -> f64 {
    n as f64 * HOP_SECONDS
}

/// Volatility level a bin must strictly exceed to fire.
pub fn trigger_threshold(cfg: &AnalysisConfig) -> f64 {
    cfg.trigger_val / 100.0 * cfg.max_trigger
}

/// Per-bin trigger flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Triggers([bool; NUM_BINS]);

impl Triggers {
    pub const NONE: Triggers = Triggers([false; NUM_BINS]);

    pub fn new(flags: [bool; NUM_BINS]) -> Self {
        Self(flags)
    }

    pub fn flags(&self) -> &[bool; NUM_BINS] {
        &self.0
    }

    pub fn get(&self, bin: usize) -> bool {
        self.0[bin]
    }

    pub fn set(&mut self, bin: usize, on: bool) {
        self.0[bin] = on;
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&t| t)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&t| t).count()
    }

    /// Bit `i` set when bin `i` fired.
    pub fn bitmask(&self) -> u16 {
        self.0.iter().enumerate().fold(0, |m, (i, &t)| m | (u16::from(t) << i))
    }

    /// Inverse of [`bitmask`](Self::bitmask); `None` if bits above 11 are set.
    pub fn from_bitmask(mask: u16) -> Option<Self> {
        (mask >> NUM_BINS == 0).then(|| Self(std::array::from_fn(|i| mask & (1 << i) != 0)))
    }
}

pub fn compute_triggers(volatility: &BinFrame, cfg: &AnalysisConfig) -> Triggers {
    let threshold = trigger_threshold(cfg);
    Triggers(std::array::from_fn(|i| volatility[i] > threshold))
}

/// Bounded history that yields the running mean as frames are pushed.
#[derive(Debug, Clone)]
pub struct RollingMean {
    window: usize,
    history: VecDeque<BinFrame>,
}

impl RollingMean {
    pub fn new(window: usize) -> Self {
        assert!(window >= 1, "averaging window must hold at least one frame");
        Self { window, history: VecDeque::new() }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Changes the window length. Shrinking drops the oldest frames; growing
    /// keeps what exists and averages over it until the window fills.
    pub fn set_window(&mut self, window: usize) {
        assert!(window >= 1, "averaging window must hold at least one frame");
        self.window = window;
        while self.history.len() > window {
            self.history.pop_front();
        }
    }

    /// Appends `frame` and returns the mean over the window including it.
    pub fn push(&mut self, frame: BinFrame) -> BinFrame {
        if self.history.len() == self.window {
            self.history.pop_front();
        }
        self.history.push_back(frame);
        mean(self.history.iter())
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    pub fn clear(&mut self) {
        self.history.clear();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(v: f64) -> BinFrame {
        BinFrame::splat(v).unwrap()
    }

    #[test]
    fn running_avg_examples() {
        assert_eq!(update_running_avg(&[frame(0.2); 7], &frame(0.2), 4), frame(0.2));
        assert_eq!(update_running_avg(&[], &frame(0.8), 4), frame(0.8));
        let hist = [frame(0.0), frame(0.2), frame(0.4)];
        let avg = update_running_avg(&hist, &frame(0.6), 4);
        assert!((avg[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn running_avg_only_uses_the_window() {
        let hist = [frame(1.0), frame(1.0), frame(0.0), frame(0.0), frame(0.0)];
        assert_eq!(update_running_avg(&hist, &frame(0.0), 4), frame(0.0));
        assert_eq!(update_running_avg(&hist, &frame(0.5), 1), frame(0.5));
    }

    #[test]
    fn volatility_is_absolute_difference() {
        assert_eq!(volatility(&frame(0.4), &frame(0.4)), BinFrame::ZERO);
        assert!((volatility(&frame(0.5), &frame(0.3))[0] - 0.2).abs() < 1e-15);
        assert!((volatility(&frame(0.1), &frame(0.4))[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn avg_volatility_examples() {
        assert!((window_duration_s(8) - 0.185_759_637).abs() < 1e-9);
        assert_eq!(format!("{:.3}", window_duration_s(8)), "0.186");
        for v in avg_volatility(&[frame(0.05); 3], 8).iter() {
            assert!((v - 0.05).abs() < 1e-15);
        }
        let mut hist = vec![frame(0.0); 7];
        hist.push(frame(0.16));
        assert!((avg_volatility(&hist, 8)[5] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn trigger_boundary_is_strict() {
        let cfg = AnalysisConfig::default();
        assert_eq!(trigger_threshold(&cfg), 0.105);
        assert!(compute_triggers(&frame(0.12), &cfg).get(0));
        assert!(!compute_triggers(&frame(0.105), &cfg).any());
        assert_eq!(compute_triggers(&BinFrame::ZERO, &cfg), Triggers::NONE);
    }

    #[test]
    fn bitmask_round_trips() {
        let mut t = Triggers::NONE;
        t.set(3, true);
        t.set(11, true);
        assert_eq!(t.bitmask(), 0b1000_0000_1000);
        assert_eq!(Triggers::from_bitmask(t.bitmask()), Some(t));
        assert_eq!(Triggers::from_bitmask(1 << 12), None);
    }

    #[test]
    fn rolling_mean_matches_pure_function() {
        let values = [0.1, 0.9, 0.3, 0.0, 0.7, 0.2, 0.5];
        let mut roll = RollingMean::new(4);
        let mut hist: Vec<BinFrame> = Vec::new();
        for v in values {
            let expect = update_running_avg(&hist, &frame(v), 4);
            assert_eq!(roll.push(frame(v)), expect);
            hist.push(frame(v));
        }
        roll.set_window(2);
        assert_eq!(roll.len(), 2);
        assert_eq!(roll.push(frame(0.0)), update_running_avg(&hist, &frame(0.0), 2));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn bin_frame() -> impl Strategy<Value = BinFrame> {
            proptest::array::uniform12(0.0f64..=1.0).prop_map(|v| BinFrame::new(v).unwrap())
        }

        proptest! {
            #[test]
            fn volatility_is_symmetric(a in bin_frame(), b in bin_frame()) {
                prop_assert_eq!(volatility(&a, &b), volatility(&b, &a));
            }

            #[test]
            fn raising_trigger_val_never_adds_triggers(
                v in bin_frame(), lo in 0.0f64..=100.0, hi in 0.0f64..=100.0,
            ) {
                let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
                let low = compute_triggers(&v, &AnalysisConfig { trigger_val: lo, ..Default::default() });
                let high = compute_triggers(&v, &AnalysisConfig { trigger_val: hi, ..Default::default() });
                for i in 0..NUM_BINS {
                    prop_assert!(!high.get(i) || low.get(i));
                }
            }
        }
    }
}
