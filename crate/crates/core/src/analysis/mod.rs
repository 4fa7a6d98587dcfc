//! Per-hop audio analysis.
//!
//! Each hop flows through: folded FFT magnitudes → twelve normalized bins →
//! running average → volatility → averaged volatility → triggers, with the
//! hop's dBFS level mapped to a dynamics percentage alongside.

pub mod articulation;
pub mod bins;
pub mod dynamics;
pub mod spectrum;

pub use articulation::{
    avg_volatility, compute_triggers, trigger_threshold, update_running_avg, volatility, window_duration_s,
    RollingMean, Triggers,
};
pub use bins::{make_bins, raw_bins, BinFrame, NUM_BINS};
pub use dynamics::dynamics_percent;
pub use spectrum::{fft_magnitude, MagnitudeSpectrum, SpectrumAnalyzer, Window, BIN_WIDTH_HZ, SPECTRUM_LEN};

use crate::audio::{rms_db, SampleHop};
use crate::InvalidValue;

/// Tunables of the analysis stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    /// Hops in the bin running average (`num-points-to-average`).
    pub n_avg: usize,
    /// Hops in the volatility running average (`num-points-to-average-vol`).
    pub n_vol: usize,
    /// Trigger level as a percentage of `max_trigger` (`trigger-val`).
    pub trigger_val: f64,
    /// Volatility treated as 100% for triggering (`max-trigger`).
    pub max_trigger: f64,
    /// Averaged bin value treated as full colour magnitude (`max-average`).
    pub max_average: f64,
    /// Raw bin value mapped to 1.0 (`range_max`).
    pub range_max: f64,
    /// Level mapped to 0% dynamics.
    pub min_db: f64,
    /// Level mapped to 100% dynamics.
    pub max_db: f64,
    pub window: Window,
}

pub const DEFAULT_N_AVG: usize = 4;
pub const DEFAULT_N_VOL: usize = 8;
pub const DEFAULT_TRIGGER_VAL: f64 = 70.0;
pub const DEFAULT_MAX_AVERAGE: f64 = 0.3;
pub const DEFAULT_MAX_TRIGGER: f64 = 0.15;
pub const DEFAULT_RANGE_MAX: f64 = 0.3;
pub const DEFAULT_MIN_DB: f64 = -60.0;
pub const DEFAULT_MAX_DB: f64 = 0.0;

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            n_avg: DEFAULT_N_AVG,
            n_vol: DEFAULT_N_VOL,
            trigger_val: DEFAULT_TRIGGER_VAL,
            max_trigger: DEFAULT_MAX_TRIGGER,
            max_average: DEFAULT_MAX_AVERAGE,
            range_max: DEFAULT_RANGE_MAX,
            min_db: DEFAULT_MIN_DB,
            max_db: DEFAULT_MAX_DB,
            window: Window::Rectangular,
        }
    }
}

impl AnalysisConfig {
    pub fn validate(&self) -> Result<(), InvalidValue> {
        if self.n_avg < 1 {
            return Err(InvalidValue::new("num-points-to-average", "must be at least 1"));
        }
        if self.n_vol < 1 {
            return Err(InvalidValue::new("num-points-to-average-vol", "must be at least 1"));
        }
        if !(0.0..=100.0).contains(&self.trigger_val) {
            return Err(InvalidValue::new("trigger-val", format!("{} is outside [0, 100]", self.trigger_val)));
        }
        if !(self.max_trigger.is_finite() && self.max_trigger > 0.0) {
            return Err(InvalidValue::new("max-trigger", format!("{} must be positive", self.max_trigger)));
        }
        if !(self.max_average.is_finite() && self.max_average > 0.0) {
            return Err(InvalidValue::new("max-average", format!("{} must be positive", self.max_average)));
        }
        if !(self.range_max > 0.0 && self.range_max <= 1.0) {
            return Err(InvalidValue::new("range_max", format!("{} is outside (0, 1]", self.range_max)));
        }
        if !(self.min_db.is_finite() && self.max_db.is_finite() && self.max_db > self.min_db) {
            return Err(InvalidValue::new(
                "max-db",
                format!("max-db ({}) must exceed min-db ({})", self.max_db, self.min_db),
            ));
        }
        Ok(())
    }

    /// Seconds spanned by the volatility averaging window.
    pub fn volatility_window_s(&self) -> f64 {
        window_duration_s(self.n_vol)
    }
}

/// Everything extracted from one hop.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisFrame {
    pub hop_index: u64,
    pub bins: BinFrame,
    pub avg_bins: BinFrame,
    pub volatility: BinFrame,
    pub avg_volatility: BinFrame,
    pub triggers: Triggers,
    pub dynamics_percent: f64,
}

impl AnalysisFrame {
    /// All-zero frame: what continuous silence settles to.
    pub fn silent(hop_index: u64) -> Self {
        Self {
            hop_index,
            bins: BinFrame::ZERO,
            avg_bins: BinFrame::ZERO,
            volatility: BinFrame::ZERO,
            avg_volatility: BinFrame::ZERO,
            triggers: Triggers::NONE,
            dynamics_percent: 0.0,
        }
    }
}

/// Stateful per-stream analyzer owning the rolling windows.
#[derive(Debug)]
pub struct Analyzer {
    cfg: AnalysisConfig,
    spectrum: SpectrumAnalyzer,
    bin_history: RollingMean,
    volatility_history: RollingMean,
}

impl Analyzer {
    pub fn new(cfg: AnalysisConfig) -> Result<Self, InvalidValue> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            spectrum: SpectrumAnalyzer::new(),
            bin_history: RollingMean::new(cfg.n_avg),
            volatility_history: RollingMean::new(cfg.n_vol),
        })
    }

    pub fn config(&self) -> &AnalysisConfig {
        &self.cfg
    }

    /// Swaps in a new configuration; window histories are kept and trimmed.
    pub fn set_config(&mut self, cfg: AnalysisConfig) -> Result<(), InvalidValue> {
        cfg.validate()?;
        self.bin_history.set_window(cfg.n_avg);
        self.volatility_history.set_window(cfg.n_vol);
        self.cfg = cfg;
        Ok(())
    }

    /// Forgets all history, as at the start of a new song.
    pub fn reset(&mut self) {
        self.bin_history.clear();
        self.volatility_history.clear();
    }

    pub fn analyze(&mut self, hop: &SampleHop) -> AnalysisFrame {
        let spectrum = self.spectrum.magnitude(hop, self.cfg.window);
        let bins = make_bins(&spectrum, &self.cfg);
        let avg_bins = self.bin_history.push(bins);
        let vol = volatility(&bins, &avg_bins);
        let avg_vol = self.volatility_history.push(vol);
        AnalysisFrame {
            hop_index: hop.index(),
            bins,
            avg_bins,
            volatility: vol,
            avg_volatility: avg_vol,
            triggers: compute_triggers(&vol, &self.cfg),
            dynamics_percent: dynamics_percent(rms_db(hop), &self.cfg),
        }
    }
}
