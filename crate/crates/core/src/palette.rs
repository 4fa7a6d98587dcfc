//! Colour tables and presets.
//!
//! The lookup tables (pitch class → colour, emotion → colour, key → emotion)
//! name colours in words; [`named_color`] binds each name to a fixed RGB
//! value from `data/named-colors.txt`. Presets assign a base colour to each
//! of the twelve frequency bins and live in `data/presets/`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use thiserror::Error;

use crate::analysis::bins::{center_frequency_hz, NUM_BINS};
use crate::kv::{self, KvError};
use crate::InvalidValue;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PaletteError {
    #[error("unknown pitch class '{0}'")]
    UnknownPitchClass(String),
    #[error("unknown emotion '{0}'")]
    UnknownEmotion(String),
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("unknown preset '{0}'")]
    UnknownPreset(String),
    #[error("invalid colour '{0}' (expected #rrggbb)")]
    BadHex(String),
    #[error(transparent)]
    Syntax(#[from] KvError),
    #[error("preset is missing '{0}'")]
    MissingKey(String),
    #[error("line {line}: unexpected key '{key}' in preset")]
    UnexpectedKey { line: usize, key: String },
    #[error(transparent)]
    Invalid(#[from] InvalidValue),
}

/// An RGB colour with channels in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rgb {
    r: f64,
    g: f64,
    b: f64,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb { r: 0.0, g: 0.0, b: 0.0 };
    pub const WHITE: Rgb = Rgb { r: 1.0, g: 1.0, b: 1.0 };

    pub fn new(r: f64, g: f64, b: f64) -> Result<Self, InvalidValue> {
        for (name, c) in [("r", r), ("g", g), ("b", b)] {
            if !(0.0..=1.0).contains(&c) {
                return Err(InvalidValue::new("color", format!("channel {name} = {c} is outside [0, 1]")));
            }
        }
        Ok(Self { r, g, b })
    }

    pub fn from_u8(r: u8, g: u8, b: u8) -> Self {
        Self { r: f64::from(r) / 255.0, g: f64::from(g) / 255.0, b: f64::from(b) / 255.0 }
    }

    /// Parses `#rrggbb` (either case).
    pub fn from_hex(text: &str) -> Result<Self, PaletteError> {
        let bad = || PaletteError::BadHex(text.to_string());
        let hex = text.strip_prefix('#').ok_or_else(bad)?;
        if hex.len() != 6 || !hex.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(bad());
        }
        let channel = |i: usize| u8::from_str_radix(&hex[i..i + 2], 16).map_err(|_| bad());
        Ok(Self::from_u8(channel(0)?, channel(2)?, channel(4)?))
    }

    /// Lowercase `#rrggbb`, each channel rounded to the nearest 1/255.
    pub fn to_hex(&self) -> String {
        let q = |c: f64| (c * 255.0).round() as u8;
        format!("#{:02x}{:02x}{:02x}", q(self.r), q(self.g), q(self.b))
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn channels(&self) -> [f64; 3] {
        [self.r, self.g, self.b]
    }

    /// Rec. 709 luma of the channel values.
    pub fn luma(&self) -> f64 {
        0.2126 * self.r + 0.7152 * self.g + 0.0722 * self.b
    }

    /// Hue in degrees `[0, 360)`; 0 for greys.
    pub fn hue_degrees(&self) -> f64 {
        let max = self.r.max(self.g).max(self.b);
        let min = self.r.min(self.g).min(self.b);
        let d = max - min;
        if d == 0.0 {
            return 0.0;
        }
        let h = if max == self.r {
            ((self.g - self.b) / d).rem_euclid(6.0)
        } else if max == self.g {
            (self.b - self.r) / d + 2.0
        } else {
            (self.r - self.g) / d + 4.0
        };
        h * 60.0
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for Rgb {
    type Err = PaletteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rgb::from_hex(s)
    }
}

const NAMED_COLORS: &str = include_str!("../data/named-colors.txt");

fn named_colors() -> &'static BTreeMap<String, Rgb> {
    static TABLE: OnceLock<BTreeMap<String, Rgb>> = OnceLock::new();
    TABLE.get_or_init(|| {
        kv::parse(NAMED_COLORS)
            .expect("named-colors.txt is well formed")
            .into_iter()
            .filter(|e| e.key != "data-version")
            .map(|e| {
                let rgb = Rgb::from_hex(&e.value).expect("named-colors.txt holds #rrggbb values");
                (e.key, rgb)
            })
            .collect()
    })
}

/// RGB binding of a colour name such as `"Dark Red"`.
pub fn named_color(name: &str) -> Option<Rgb> {
    named_colors().get(name).copied()
}

/// The twelve pitch classes, chromatic from C.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PitchClass {
    C,
    Db,
    D,
    Eb,
    E,
    F,
    FSharp,
    G,
    Ab,
    A,
    Bb,
    B,
}

impl PitchClass {
    pub const ALL: [PitchClass; 12] = [
        PitchClass::C,
        PitchClass::Db,
        PitchClass::D,
        PitchClass::Eb,
        PitchClass::E,
        PitchClass::F,
        PitchClass::FSharp,
        PitchClass::G,
        PitchClass::Ab,
        PitchClass::A,
        PitchClass::Bb,
        PitchClass::B,
    ];

    pub fn semitone(self) -> usize {
        self as usize
    }

    pub fn from_semitone(semitone: usize) -> Self {
        Self::ALL[semitone % 12]
    }

    pub fn name(self) -> &'static str {
        ["C", "Db", "D", "Eb", "E", "F", "F#", "G", "Ab", "A", "Bb", "B"][self as usize]
    }

    /// Nearest equal-tempered pitch class (A4 = 440 Hz); `None` for non-positive input.
    pub fn nearest_to_frequency(hz: f64) -> Option<Self> {
        if !(hz > 0.0 && hz.is_finite()) {
            return None;
        }
        let midi = 69.0 + 12.0 * (hz / 440.0).log2();
        Some(Self::from_semitone(midi.round().rem_euclid(12.0) as usize))
    }
}

impl fmt::Display for PitchClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PitchClass {
    type Err = PaletteError;

    /// Accepts the table spellings and their enharmonic equivalents.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        use PitchClass::*;
        Ok(match s.trim() {
            "C" | "B#" => C,
            "Db" | "C#" => Db,
            "D" => D,
            "Eb" | "D#" => Eb,
            "E" | "Fb" => E,
            "F" | "E#" => F,
            "F#" | "Gb" => FSharp,
            "G" => G,
            "Ab" | "G#" => Ab,
            "A" => A,
            "Bb" | "A#" => Bb,
            "B" | "Cb" => B,
            other => return Err(PaletteError::UnknownPitchClass(other.to_string())),
        })
    }
}

/// Scriabin's pitch-class colour names, indexed by semitone from C.
const SCRIABIN: [&str; 12] = [
    "Orange Red",   // C
    "Dark Purple",  // Db
    "Yellow",       // D
    "Red Violet",   // Eb
    "Light Blue",   // E
    "Dark Red",     // F
    "Royal Blue",   // F#
    "Orange",       // G
    "Light Purple", // Ab
    "Green",        // A
    "Rosy Brown",   // Bb
    "Medium Blue",  // B
];

pub fn scriabin_color_name(pitch: PitchClass) -> &'static str {
    SCRIABIN[pitch.semitone()]
}

pub fn scriabin_color(pitch_class: &str) -> Result<Rgb, PaletteError> {
    let pc: PitchClass = pitch_class.parse()?;
    Ok(named_color(scriabin_color_name(pc)).expect("every Scriabin colour is bound"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Emotion {
    Anger,
    Calmness,
    Disgust,
    Fear,
    Envy,
    Happiness,
    Jealousy,
    Sadness,
}

impl Emotion {
    pub const ALL: [Emotion; 8] = [
        Emotion::Anger,
        Emotion::Calmness,
        Emotion::Disgust,
        Emotion::Fear,
        Emotion::Envy,
        Emotion::Happiness,
        Emotion::Jealousy,
        Emotion::Sadness,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Emotion::Anger => "Anger",
            Emotion::Calmness => "Calmness",
            Emotion::Disgust => "Disgust",
            Emotion::Fear => "Fear",
            Emotion::Envy => "Envy",
            Emotion::Happiness => "Happiness",
            Emotion::Jealousy => "Jealousy",
            Emotion::Sadness => "Sadness",
        }
    }

    /// Dominant colour name. Where two colours share the top spot, the first
    /// listed is used (Disgust: brownish green over yellow; Fear: black over red).
    pub fn color_name(self) -> &'static str {
        match self {
            Emotion::Anger => "Red",
            Emotion::Calmness => "Light Blue",
            Emotion::Disgust => "Brownish Green",
            Emotion::Fear => "Black",
            Emotion::Envy => "Green",
            Emotion::Happiness => "Yellow",
            Emotion::Jealousy => "Green",
            Emotion::Sadness => "Dark Blue",
        }
    }

    pub fn color(self) -> Rgb {
        named_color(self.color_name()).expect("every emotion colour is bound")
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Emotion {
    type Err = PaletteError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| PaletteError::UnknownEmotion(s.to_string()))
    }
}

pub fn emotion_color(emotion: &str) -> Result<Rgb, PaletteError> {
    Ok(emotion.parse::<Emotion>()?.color())
}

const KEY_EMOTIONS: [(&str, &str); 8] = [
    ("C Major", "Innocently Happy"),
    ("C Minor", "Innocently Sad"),
    ("C# Minor", "Despair"),
    ("D Major", "Triumphant"),
    ("D Minor", "Serious"),
    ("D# Minor", "Deep Distress"),
    ("F Major", "Furious"),
    ("A Major", "Joyful"),
];

/// Character associated with a musical key, e.g. `"D Major"` → `"Triumphant"`.
pub fn key_emotion(key: &str) -> Result<&'static str, PaletteError> {
    KEY_EMOTIONS
        .iter()
        .find(|(k, _)| k.eq_ignore_ascii_case(key.trim()))
        .map(|&(_, e)| e)
        .ok_or_else(|| PaletteError::UnknownKey(key.to_string()))
}

pub fn tabulated_keys() -> impl Iterator<Item = &'static str> {
    KEY_EMOTIONS.iter().map(|&(k, _)| k)
}

/// Twelve base colours plus a colour sensitivity.
#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub base: [Rgb; NUM_BINS],
    pub color_sensitivity: f64,
    pub emotion: Option<Emotion>,
}

pub const DEFAULT_COLOR_SENSITIVITY: f64 = 2.0;

const BUILTIN_PRESETS: [(&str, &str); 3] = [
    ("default", include_str!("../data/presets/default.preset")),
    ("oceanic", include_str!("../data/presets/oceanic.preset")),
    ("scriabin", include_str!("../data/presets/scriabin.preset")),
];

impl Preset {
    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTIN_PRESETS.iter().map(|&(n, _)| n)
    }

    pub fn builtin(name: &str) -> Result<Self, PaletteError> {
        let (_, text) = BUILTIN_PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| PaletteError::UnknownPreset(name.to_string()))?;
        Self::parse(text)
    }

    pub fn parse(text: &str) -> Result<Self, PaletteError> {
        let mut name = None;
        let mut sensitivity = DEFAULT_COLOR_SENSITIVITY;
        let mut emotion = None;
        let mut base: [Option<Rgb>; NUM_BINS] = [None; NUM_BINS];
        for e in kv::parse(text)? {
            match e.key.as_str() {
                "name" => name = Some(e.value),
                "color-sensitivity" => {
                    sensitivity = e.value.parse().map_err(|_| {
                        InvalidValue::new("color-sensitivity", format!("'{}' is not a number", e.value))
                    })?;
                }
                "emotion" => emotion = Some(e.value.parse()?),
                key => match bin_color_index(key) {
                    Some(i) => base[i] = Some(Rgb::from_hex(&e.value)?),
                    None => return Err(PaletteError::UnexpectedKey { line: e.line, key: e.key }),
                },
            }
        }
        let name = name.ok_or_else(|| PaletteError::MissingKey("name".into()))?;
        validate_sensitivity(sensitivity)?;
        let mut colors = [Rgb::BLACK; NUM_BINS];
        for (i, c) in base.into_iter().enumerate() {
            colors[i] = c.ok_or_else(|| PaletteError::MissingKey(format!("bin-color-{i}")))?;
        }
        Ok(Self { name, base: colors, color_sensitivity: sensitivity, emotion })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("name = {}\ncolor-sensitivity = {}\n", self.name, self.color_sensitivity);
        if let Some(e) = self.emotion {
            out.push_str(&format!("emotion = {e}\n"));
        }
        for (i, c) in self.base.iter().enumerate() {
            out.push_str(&format!("bin-color-{i} = {c}\n"));
        }
        out
    }

    /// Bins coloured by the Scriabin colour of the pitch class nearest each
    /// bin's centre frequency.
    pub fn scriabin_by_center_frequency() -> [Rgb; NUM_BINS] {
        std::array::from_fn(|g| {
            let pc = PitchClass::nearest_to_frequency(center_frequency_hz(g)).expect("centre frequencies are positive");
            named_color(scriabin_color_name(pc)).expect("bound")
        })
    }
}

pub(crate) fn validate_sensitivity(value: f64) -> Result<(), InvalidValue> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(InvalidValue::new("color-sensitivity", format!("{value} must be positive")))
    }
}

/// Parses `bin-color-<i>` into `i` for `i` in `0..12`.
pub fn bin_color_index(key: &str) -> Option<usize> {
    let i: usize = key.strip_prefix("bin-color-")?.parse().ok()?;
    (i < NUM_BINS).then_some(i)
}

/// Base colours of the default preset: a dark-to-bright gradient.
pub fn default_bin_palette() -> [Rgb; NUM_BINS] {
    Preset::builtin("default").expect("default preset ships with the crate").base
}
