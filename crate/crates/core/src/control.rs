//! Control messages and the live settings they retune.
//!
//! Messages are JSON objects tagged by `type`:
//!
//! ```json
//! {"type": "set_param", "name": "trigger-val", "value": 50}
//! {"type": "set_param", "name": "bin-color-3", "value": "#14515f"}
//! {"type": "load_song", "path": "songs/intro.wav"}
//! {"type": "play"}
//! {"type": "pause"}
//! {"type": "reset_sim"}
//! {"type": "set_preset", "name": "oceanic"}
//! ```
//!
//! Every message is answered with either `{"type": "ack", "name", "value"}`
//! carrying the applied value, or `{"type": "error", "message"}`.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::analysis::{AnalysisConfig, NUM_BINS};
use crate::palette::{bin_color_index, validate_sensitivity, PaletteError, Preset, Rgb};
use crate::InvalidValue;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlMessage {
    SetParam { name: String, value: ParamValue },
    LoadSong { path: PathBuf },
    Play,
    Pause,
    ResetSim,
    SetPreset { name: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Text(String),
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Number(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

impl ControlMessage {
    pub fn from_json(text: &str) -> Result<Self, ControlError> {
        serde_json::from_str(text).map_err(|e| ControlError::Malformed(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("control messages serialize")
    }

    pub fn set_param(name: &str, value: impl Into<ParamValue>) -> Self {
        ControlMessage::SetParam { name: name.to_string(), value: value.into() }
    }
}

/// A tunable exposed over the control channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Param {
    NumPointsToAverage,
    NumPointsToAverageVol,
    TriggerVal,
    MaxAverage,
    MaxTrigger,
    ColorSensitivity,
    RangeMax,
    BinColor(usize),
}

impl Param {
    /// The seven scalar tunables, in the order of the defaults block.
    pub const SCALARS: [Param; 7] = [
        Param::NumPointsToAverage,
        Param::NumPointsToAverageVol,
        Param::TriggerVal,
        Param::MaxAverage,
        Param::MaxTrigger,
        Param::ColorSensitivity,
        Param::RangeMax,
    ];

    pub fn name(self) -> String {
        match self {
            Param::NumPointsToAverage => "num-points-to-average".into(),
            Param::NumPointsToAverageVol => "num-points-to-average-vol".into(),
            Param::TriggerVal => "trigger-val".into(),
            Param::MaxAverage => "max-average".into(),
            Param::MaxTrigger => "max-trigger".into(),
            Param::ColorSensitivity => "color-sensitivity".into(),
            Param::RangeMax => "range_max".into(),
            Param::BinColor(i) => format!("bin-color-{i}"),
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Param {
    type Err = ControlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(p) = Param::SCALARS.into_iter().find(|p| p.name() == s) {
            return Ok(p);
        }
        bin_color_index(s).map(Param::BinColor).ok_or_else(|| ControlError::UnknownParam(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unknown parameter '{0}'")]
    UnknownParam(String),
    #[error("{name}: expected {expected}")]
    WrongType { name: String, expected: &'static str },
    #[error("range error: {0}")]
    Invalid(#[from] InvalidValue),
    #[error(transparent)]
    Palette(#[from] PaletteError),
}

/// Everything a control message can change without touching the audio source.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveSettings {
    pub analysis: AnalysisConfig,
    pub base_colors: [Rgb; NUM_BINS],
    pub color_sensitivity: f64,
    /// Name of the last preset applied.
    pub preset: String,
}

impl LiveSettings {
    pub fn from_preset(analysis: AnalysisConfig, preset: &Preset) -> Self {
        Self {
            analysis,
            base_colors: preset.base,
            color_sensitivity: preset.color_sensitivity,
            preset: preset.name.clone(),
        }
    }

    /// Current value of `param` as it appears in an ack.
    pub fn value_of(&self, param: Param) -> Value {
        let a = &self.analysis;
        match param {
            Param::NumPointsToAverage => json!(a.n_avg),
            Param::NumPointsToAverageVol => json!(a.n_vol),
            Param::TriggerVal => json!(a.trigger_val),
            Param::MaxAverage => json!(a.max_average),
            Param::MaxTrigger => json!(a.max_trigger),
            Param::ColorSensitivity => json!(self.color_sensitivity),
            Param::RangeMax => json!(a.range_max),
            Param::BinColor(i) => json!(self.base_colors[i].to_hex()),
        }
    }

    /// Returns a copy with `param` set to `value`, or an error leaving `self` as is.
    pub fn with_param(&self, param: Param, value: &ParamValue) -> Result<Self, ControlError> {
        let mut next = self.clone();
        let name = param.name();
        let number = || match value {
            ParamValue::Number(v) => Ok(*v),
            ParamValue::Text(_) => Err(ControlError::WrongType { name: name.clone(), expected: "a number" }),
        };
        let count = || {
            let v = number()?;
            if v.fract() != 0.0 || !(1.0..=u32::MAX as f64).contains(&v) {
                return Err(ControlError::Invalid(InvalidValue::new(&name, format!("{v} is not a whole number >= 1"))));
            }
            Ok(v as usize)
        };
        let a = &mut next.analysis;
        match param {
            Param::NumPointsToAverage => a.n_avg = count()?,
            Param::NumPointsToAverageVol => a.n_vol = count()?,
            Param::TriggerVal => a.trigger_val = number()?,
            Param::MaxAverage => a.max_average = number()?,
            Param::MaxTrigger => a.max_trigger = number()?,
            Param::RangeMax => a.range_max = number()?,
            Param::ColorSensitivity => {
                let v = number()?;
                validate_sensitivity(v)?;
                next.color_sensitivity = v;
            }
            Param::BinColor(i) => match value {
                ParamValue::Text(hex) => next.base_colors[i] = Rgb::from_hex(hex)?,
                ParamValue::Number(_) => return Err(ControlError::WrongType { name, expected: "a hex colour string" }),
            },
        }
        next.analysis.validate()?;
        Ok(next)
    }

    /// Replaces all twelve base colours and the sensitivity with the preset's.
    pub fn with_preset(&self, preset: &Preset) -> Self {
        Self { analysis: self.analysis, ..Self::from_preset(self.analysis, preset) }
    }

    pub fn preset_ack_value(&self) -> Value {
        json!({
            "name": self.preset,
            "colors": self.base_colors.iter().map(Rgb::to_hex).collect::<Vec<_>>(),
            "color-sensitivity": self.color_sensitivity,
        })
    }
}

/// Work beyond a settings change that a message asks of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum Effect {
    None,
    LoadSong(PathBuf),
    Play,
    Pause,
    ResetSim,
}

/// Result of applying one message.
#[derive(Debug, Clone, PartialEq)]
pub struct Applied {
    pub settings: LiveSettings,
    pub effect: Effect,
    pub ack: Reply,
}

/// Pure transition of the live settings. Callers apply the result between hops.
pub fn apply_control(settings: &LiveSettings, msg: &ControlMessage) -> Result<Applied, ControlError> {
    let unchanged =
        |effect, name: &str, value| Applied { settings: settings.clone(), effect, ack: Reply::ack(name, value) };
    Ok(match msg {
        ControlMessage::SetParam { name, value } => {
            let param: Param = name.parse()?;
            let next = settings.with_param(param, value)?;
            let ack = Reply::ack(&param.name(), next.value_of(param));
            Applied { settings: next, effect: Effect::None, ack }
        }
        ControlMessage::SetPreset { name } => {
            let next = settings.with_preset(&Preset::builtin(name)?);
            let ack = Reply::ack("set_preset", next.preset_ack_value());
            Applied { settings: next, effect: Effect::None, ack }
        }
        ControlMessage::LoadSong { path } => {
            unchanged(Effect::LoadSong(path.clone()), "load_song", json!(path.display().to_string()))
        }
        ControlMessage::Play => unchanged(Effect::Play, "play", Value::Bool(true)),
        ControlMessage::Pause => unchanged(Effect::Pause, "pause", Value::Bool(true)),
        ControlMessage::ResetSim => unchanged(Effect::ResetSim, "reset_sim", Value::Bool(true)),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Reply {
    Ack { name: String, value: Value },
    Error { message: String },
}

impl Reply {
    pub fn ack(name: &str, value: Value) -> Self {
        Reply::Ack { name: name.to_string(), value }
    }

    pub fn error(message: impl fmt::Display) -> Self {
        Reply::Error { message: message.to_string() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("replies serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, ControlError> {
        serde_json::from_str(text).map_err(|e| ControlError::Malformed(e.to_string()))
    }

    pub fn is_ack(&self) -> bool {
        matches!(self, Reply::Ack { .. })
    }
}
