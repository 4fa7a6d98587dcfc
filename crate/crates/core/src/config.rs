//! Engine configuration files.
//!
//! A config file is UTF-8 text of `key = value` lines. Lines starting with
//! `#` are comments. Unspecified keys keep their defaults; unknown keys are
//! errors. Keys are the control parameter names plus a few engine settings:
//!
//! ```text
//! # analysis
//! num-points-to-average = 4
//! num-points-to-average-vol = 8
//! trigger-val = 70
//! max-average = 0.3
//! max-trigger = 0.15
//! color-sensitivity = 2
//! range_max = 0.3
//! min-db = -60
//! max-db = 0
//! window = rect
//! # palette
//! preset = default
//! bin-color-0 = #0b1033
//! # simulation
//! seed = 0
//! particles = 100000
//! # io
//! input = song.wav
//! mode = headless
//! port = 7878
//! frames-out = out.synframes
//! csv-out = analysis.csv
//! resample = false
//! ```
//!
//! `dt`, `drag`, `base-force`, and `target-walk-scale` tune the particle
//! integrator and are rarely changed.

use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::analysis::{AnalysisConfig, NUM_BINS};
use crate::control::{LiveSettings, Param};
use crate::engine::SimConfig;
use crate::kv::{self, KvError};
use crate::palette::{bin_color_index, validate_sensitivity, PaletteError, Preset, Rgb};
use crate::InvalidValue;

pub const DEFAULT_PORT: u16 = 7878;
pub const DEFAULT_PRESET: &str = "default";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    #[default]
    Headless,
    Serve,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Headless => "headless",
            Mode::Serve => "serve",
        })
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "headless" => Ok(Mode::Headless),
            "serve" => Ok(Mode::Serve),
            _ => Err(format!("'{s}' is not headless or serve")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {}: {}", .0.line, .0.message)]
    Syntax(#[from] KvError),
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    DuplicateKey { line: usize, key: String },
    #[error("{}{key}: {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    BadValue { line: Option<usize>, key: String, message: String },
    #[error("{}range error: {source}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Range { line: Option<usize>, source: InvalidValue },
    #[error(transparent)]
    Palette(#[from] PaletteError),
}

impl ConfigError {
    /// The key an invalid or out-of-range value was given for.
    pub fn key(&self) -> Option<&str> {
        match self {
            ConfigError::UnknownKey { key, .. } | ConfigError::DuplicateKey { key, .. } => Some(key),
            ConfigError::BadValue { key, .. } => Some(key),
            ConfigError::Range { source, .. } => Some(&source.name),
            _ => None,
        }
    }
}

/// Everything needed to run the engine.
#[derive(Debug, Clone, PartialEq)]
pub struct EngineConfig {
    pub analysis: AnalysisConfig,
    pub sim: SimConfig,
    /// Built-in preset name or path to a `.preset` file.
    pub preset: String,
    /// Overrides the preset's colour sensitivity when set.
    pub color_sensitivity: Option<f64>,
    /// Per-bin overrides applied on top of the preset.
    pub bin_colors: [Option<Rgb>; NUM_BINS],
    pub input: Option<PathBuf>,
    pub mode: Mode,
    pub port: u16,
    pub frames_out: Option<PathBuf>,
    pub csv_out: Option<PathBuf>,
    /// Accept sample rates other than 44.1 kHz by resampling.
    pub resample: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            analysis: AnalysisConfig::default(),
            sim: SimConfig::default(),
            preset: DEFAULT_PRESET.to_string(),
            color_sensitivity: None,
            bin_colors: [None; NUM_BINS],
            input: None,
            mode: Mode::default(),
            port: DEFAULT_PORT,
            frames_out: None,
            csv_out: None,
            resample: false,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str, what: &str) -> Result<T, ConfigError> {
    value.trim().parse().map_err(|_| ConfigError::BadValue {
        line: None,
        key: key.to_string(),
        message: format!("'{value}' is not {what}"),
    })
}

fn parse_bool(key: &str, value: &str) -> Result<bool, ConfigError> {
    match value.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError::BadValue { line: None, key: key.into(), message: format!("'{value}' is not a boolean") }),
    }
}

fn with_line(err: ConfigError, at: usize) -> ConfigError {
    match err {
        ConfigError::BadValue { key, message, .. } => ConfigError::BadValue { line: Some(at), key, message },
        ConfigError::Range { source, .. } => ConfigError::Range { line: Some(at), source },
        other => other,
    }
}

impl EngineConfig {
    /// Sets one key from its text form, as read from a file or a flag.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let a = &mut self.analysis;
        let s = &mut self.sim;
        let path = || Some(PathBuf::from(value));
        match key {
            "num-points-to-average" => a.n_avg = parse_value(key, value, "a whole number")?,
            "num-points-to-average-vol" => a.n_vol = parse_value(key, value, "a whole number")?,
            "trigger-val" => a.trigger_val = parse_value(key, value, "a number")?,
            "max-average" => a.max_average = parse_value(key, value, "a number")?,
            "max-trigger" => a.max_trigger = parse_value(key, value, "a number")?,
            "range_max" => a.range_max = parse_value(key, value, "a number")?,
            "min-db" => a.min_db = parse_value(key, value, "a number")?,
            "max-db" => a.max_db = parse_value(key, value, "a number")?,
            "window" => a.window = parse_value(key, value, "rect or hann")?,
            "color-sensitivity" => {
                let v = parse_value(key, value, "a number")?;
                validate_sensitivity(v).map_err(|source| ConfigError::Range { line: None, source })?;
                self.color_sensitivity = Some(v);
            }
            "seed" => s.seed = parse_value(key, value, "an unsigned integer")?,
            "particles" => s.n_particles = parse_value(key, value, "a whole number")?,
            "dt" => s.dt = parse_value(key, value, "a number")?,
            "drag" => s.drag = parse_value(key, value, "a number")?,
            "base-force" => s.base_force = parse_value(key, value, "a number")?,
            "target-walk-scale" => s.target_walk_scale = parse_value(key, value, "a number")?,
            "preset" => self.preset = value.to_string(),
            "input" => self.input = path(),
            "mode" => self.mode = parse_value(key, value, "headless or serve")?,
            "port" => self.port = parse_value(key, value, "a port number")?,
            "frames-out" => self.frames_out = path(),
            "csv-out" => self.csv_out = path(),
            "resample" => self.resample = parse_bool(key, value)?,
            _ => match bin_color_index(key) {
                Some(i) => self.bin_colors[i] = Some(Rgb::from_hex(value)?),
                None => return Err(ConfigError::UnknownKey { line: 0, key: key.to_string() }),
            },
        }
        Ok(())
    }

    /// Checks every range constraint, naming the offending key.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |source| ConfigError::Range { line: None, source };
        self.analysis.validate().map_err(range)?;
        self.sim.validate().map_err(range)?;
        if let Some(v) = self.color_sensitivity {
            validate_sensitivity(v).map_err(range)?;
        }
        Ok(())
    }

    /// Parses config text on top of the defaults.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for e in kv::parse(text)? {
            if seen.insert(e.key.clone(), e.line).is_some() {
                return Err(ConfigError::DuplicateKey { line: e.line, key: e.key });
            }
            cfg.set(&e.key, &e.value).map_err(|err| match err {
                ConfigError::UnknownKey { key, .. } => ConfigError::UnknownKey { line: e.line, key },
                other => with_line(other, e.line),
            })?;
        }
        if let Err(err) = cfg.validate() {
            let line = err.key().and_then(|k| seen.get(k).copied());
            return Err(match line {
                Some(l) => with_line(err, l),
                None => err,
            });
        }
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    /// Every setting as config text. Parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let a = &self.analysis;
        let s = &self.sim;
        let mut out = String::new();
        let mut put = |k: &str, v: &dyn fmt::Display| writeln!(out, "{k} = {v}").expect("writing to a String");
        put("num-points-to-average", &a.n_avg);
        put("num-points-to-average-vol", &a.n_vol);
        put("trigger-val", &a.trigger_val);
        put("max-average", &a.max_average);
        put("max-trigger", &a.max_trigger);
        if let Some(v) = self.color_sensitivity {
            put("color-sensitivity", &v);
        }
        put("range_max", &a.range_max);
        put("min-db", &a.min_db);
        put("max-db", &a.max_db);
        put("window", &a.window);
        put("preset", &self.preset);
        for (i, c) in self.bin_colors.iter().enumerate() {
            if let Some(c) = c {
                put(&format!("bin-color-{i}"), c);
            }
        }
        put("seed", &s.seed);
        put("particles", &s.n_particles);
        put("dt", &s.dt);
        put("drag", &s.drag);
        put("base-force", &s.base_force);
        put("target-walk-scale", &s.target_walk_scale);
        if let Some(p) = &self.input {
            put("input", &p.display());
        }
        put("mode", &self.mode);
        put("port", &self.port);
        if let Some(p) = &self.frames_out {
            put("frames-out", &p.display());
        }
        if let Some(p) = &self.csv_out {
            put("csv-out", &p.display());
        }
        put("resample", &self.resample);
        out
    }

    /// The configured preset: a built-in name, or a path to a preset file.
    pub fn load_preset(&self) -> Result<Preset, ConfigError> {
        if Preset::builtin_names().any(|n| n == self.preset) {
            return Ok(Preset::builtin(&self.preset)?);
        }
        let path = Path::new(&self.preset);
        if path.extension().is_some_and(|e| e == "preset") {
            let text =
                std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
            return Ok(Preset::parse(&text)?);
        }
        Err(PaletteError::UnknownPreset(self.preset.clone()).into())
    }

    /// Preset colours with per-bin and sensitivity overrides applied.
    pub fn live_settings(&self) -> Result<LiveSettings, ConfigError> {
        let preset = self.load_preset()?;
        let mut live = LiveSettings::from_preset(self.analysis, &preset);
        for (slot, c) in live.base_colors.iter_mut().zip(&self.bin_colors) {
            if let Some(c) = c {
                *slot = *c;
            }
        }
        if let Some(v) = self.color_sensitivity {
            live.color_sensitivity = v;
        }
        Ok(live)
    }
}

/// The seven tunable defaults, one `name = value` line each.
pub fn defaults_dump() -> String {
    let live = LiveSettings::from_preset(AnalysisConfig::default(), &Preset::builtin(DEFAULT_PRESET).expect("bundled"));
    Param::SCALARS
        .iter()
        .map(|&p| {
            let v = live.value_of(p).as_f64().expect("scalar tunables are numbers");
            format!("{} = {v}\n", p.name())
        })
        .collect()
}
