//! Audio-driven particle visualization.
//!
//! Mono audio is cut into hops of 1024 samples, each hop is reduced to twelve
//! logarithmic frequency bins plus loudness, and those features steer a
//! particle system through twelve moving gravity points. Every hop yields one
//! [`packet::FramePacket`] that can be streamed to clients or written to a
//! `.synframes` file.

use thiserror::Error;

pub mod analysis;
pub mod audio;
pub mod config;
pub mod control;
pub mod engine;
pub mod frames;
pub mod kv;
pub mod packet;
pub mod palette;
pub mod pipeline;

pub use analysis::{AnalysisConfig, AnalysisFrame, Analyzer, BinFrame, Triggers};
pub use audio::{AudioError, AudioSource, SampleHop, HOP_SECONDS, HOP_SIZE, SAMPLE_RATE};
pub use config::EngineConfig;
pub use control::{ControlMessage, LiveSettings, Reply};
pub use engine::{EngineParams, ParticleState, SimConfig};
pub use packet::FramePacket;
pub use palette::{Preset, Rgb};
pub use pipeline::{Deck, Pipeline};

/// A setting rejected because its value is outside the accepted range.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{name}: {reason}")]
pub struct InvalidValue {
    pub name: String,
    pub reason: String,
}

impl InvalidValue {
    pub fn new(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self { name: name.into(), reason: reason.into() }
    }
}
