//! Hop-by-hop driver tying analysis, gravity points, and particles together.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::analysis::{AnalysisFrame, Analyzer, NUM_BINS};
use crate::audio::{AudioError, AudioSource, SampleHop, SourceOptions, HOP_SECONDS};
use crate::config::{ConfigError, EngineConfig};
use crate::control::{apply_control, ControlMessage, Effect, LiveSettings, Reply};
use crate::engine::{init_particles, step, EngineParams, GravityPoints, ParticleState, SimConfig};
use crate::frames::FrameWriter;
use crate::packet::{snapshot, FramePacket};
use crate::InvalidValue;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Audio(#[from] AudioError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid setting {0}")]
    Invalid(#[from] InvalidValue),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("no input given")]
    NoInput,
}

/// Everything produced for one hop.
#[derive(Debug, Clone)]
pub struct FrameOutput {
    pub analysis: AnalysisFrame,
    pub params: EngineParams,
    pub packet: FramePacket,
}

/// The engine state advanced once per hop.
///
/// Settings changes take effect only between calls to [`Pipeline::process_hop`],
/// so every frame is computed under a single settings snapshot.
#[derive(Debug)]
pub struct Pipeline {
    live: LiveSettings,
    sim: SimConfig,
    analyzer: Analyzer,
    gravity: GravityPoints,
    particles: ParticleState,
    next_frame: u64,
}

impl Pipeline {
    pub fn new(live: LiveSettings, sim: SimConfig) -> Result<Self, InvalidValue> {
        sim.validate()?;
        let analyzer = Analyzer::new(live.analysis)?;
        Ok(Self {
            gravity: GravityPoints::new(sim.seed),
            particles: init_particles(&sim, &live.base_colors),
            live,
            sim,
            analyzer,
            next_frame: 0,
        })
    }

    pub fn from_config(cfg: &EngineConfig) -> Result<Self, RunError> {
        Ok(Self::new(cfg.live_settings()?, cfg.sim)?)
    }

    pub fn settings(&self) -> &LiveSettings {
        &self.live
    }

    pub fn sim(&self) -> &SimConfig {
        &self.sim
    }

    pub fn particles(&self) -> &ParticleState {
        &self.particles
    }

    pub fn gravity(&self) -> &GravityPoints {
        &self.gravity
    }

    /// Index the next frame will carry.
    pub fn next_frame_index(&self) -> u64 {
        self.next_frame
    }

    /// Installs new settings for all following hops.
    pub fn set_settings(&mut self, live: LiveSettings) -> Result<(), InvalidValue> {
        self.analyzer.set_config(live.analysis)?;
        self.live = live;
        Ok(())
    }

    /// Re-seeds particles and gravity points. Frame numbering carries on.
    pub fn reset_sim(&mut self) {
        self.particles = init_particles(&self.sim, &self.live.base_colors);
        self.gravity = GravityPoints::new(self.sim.seed);
    }

    /// Drops analysis history, as when a new song starts.
    pub fn reset_analysis(&mut self) {
        self.analyzer.reset();
    }

    /// Analyzes `hop`, moves the gravity points, steps the particles, and
    /// captures the result. The packet timestamp is the hop's start time.
    pub fn process_hop(&mut self, hop: &SampleHop) -> FrameOutput {
        let analysis = self.analyzer.analyze(hop);
        let params = self.gravity.advance(
            &analysis,
            &self.live.base_colors,
            self.live.color_sensitivity,
            &self.live.analysis,
            &self.sim,
        );
        step(&mut self.particles, &params, &self.sim);
        let frame_index = self.next_frame;
        self.next_frame += 1;
        let packet = snapshot(frame_index, hop.index() as f64 * HOP_SECONDS, &analysis, &params, &self.particles);
        FrameOutput { analysis, params, packet }
    }
}

/// A pipeline plus the song it is playing, as driven by a live session.
///
/// Files load paused at their first hop and start on `play`.
#[derive(Debug)]
pub struct Deck {
    pipeline: Pipeline,
    source: Option<AudioSource>,
    playing: bool,
    options: SourceOptions,
}

impl Deck {
    pub fn new(pipeline: Pipeline, options: SourceOptions) -> Self {
        Self { pipeline, source: None, playing: false, options }
    }

    pub fn pipeline(&self) -> &Pipeline {
        &self.pipeline
    }

    pub fn is_playing(&self) -> bool {
        self.playing
    }

    pub fn has_source(&self) -> bool {
        self.source.is_some()
    }

    /// Replaces the current song. History from the previous song is dropped.
    pub fn load(&mut self, source: AudioSource, play: bool) {
        self.pipeline.reset_analysis();
        self.source = Some(source);
        self.playing = play;
    }

    pub fn load_path(&mut self, path: &Path) -> Result<(), AudioError> {
        let source = AudioSource::open(path, self.options)?;
        self.load(source, false);
        Ok(())
    }

    /// Applies `msg` to the deck. Call only between hops.
    pub fn handle(&mut self, msg: &ControlMessage) -> Reply {
        let applied = match apply_control(self.pipeline.settings(), msg) {
            Ok(a) => a,
            Err(e) => return Reply::error(e),
        };
        match &applied.effect {
            Effect::None => {}
            Effect::Play => self.playing = true,
            Effect::Pause => self.playing = false,
            Effect::ResetSim => self.pipeline.reset_sim(),
            Effect::LoadSong(path) => {
                if let Err(e) = self.load_path(path) {
                    return Reply::error(e);
                }
            }
        }
        if let Err(e) = self.pipeline.set_settings(applied.settings) {
            return Reply::error(e);
        }
        applied.ack
    }

    /// Produces the next frame if playing. Reaching the end of the song
    /// pauses the deck; a padded final hop is not rendered.
    pub fn tick(&mut self) -> Result<Option<FrameOutput>, AudioError> {
        if !self.playing {
            return Ok(None);
        }
        let Some(source) = self.source.as_mut() else {
            return Ok(None);
        };
        match source.next_hop() {
            Ok(Some(hop)) if !hop.is_padded() => Ok(Some(self.pipeline.process_hop(&hop))),
            Ok(_) => {
                self.source = None;
                self.playing = false;
                Ok(None)
            }
            Err(e) => {
                self.source = None;
                self.playing = false;
                Err(e)
            }
        }
    }
}

/// Column names of the analysis CSV.
pub fn csv_header() -> String {
    let mut cols = vec!["hop_index".to_string(), "timestamp_s".to_string()];
    for series in ["bin", "avg_bin", "volatility", "avg_volatility", "trigger"] {
        cols.extend((0..NUM_BINS).map(|i| format!("{series}_{i}")));
    }
    cols.push("dynamics_percent".into());
    cols.join(",")
}

/// One CSV row for `frame`.
pub fn csv_row(frame: &AnalysisFrame) -> String {
    let mut cols = vec![frame.hop_index.to_string(), (frame.hop_index as f64 * HOP_SECONDS).to_string()];
    for series in [&frame.bins, &frame.avg_bins, &frame.volatility, &frame.avg_volatility] {
        cols.extend(series.iter().map(|v| v.to_string()));
    }
    cols.extend(frame.triggers.flags().iter().map(|&t| u8::from(t).to_string()));
    cols.push(frame.dynamics_percent.to_string());
    cols.join(",")
}

/// Renders every full hop of `source`. Returns the number of frames.
pub fn run_headless(
    pipeline: &mut Pipeline,
    source: AudioSource,
    mut frames: Option<&mut dyn Write>,
    mut csv: Option<&mut dyn Write>,
) -> Result<u64, RunError> {
    let mut writer = frames.as_mut().map(|w| FrameWriter::new(&mut **w));
    if let Some(w) = csv.as_mut() {
        writeln!(w, "{}", csv_header())?;
    }
    let mut count = 0;
    for hop in source {
        let hop = hop?;
        if hop.is_padded() {
            break;
        }
        let out = pipeline.process_hop(&hop);
        if let Some(w) = writer.as_mut() {
            w.write(&out.packet)?;
        }
        if let Some(w) = csv.as_mut() {
            writeln!(w, "{}", csv_row(&out.analysis))?;
        }
        count += 1;
    }
    if let Some(w) = writer {
        w.finish()?;
    }
    if let Some(w) = csv {
        w.flush()?;
    }
    Ok(count)
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Output { path: path.to_path_buf(), source })
}

/// Headless run driven entirely by `cfg`: reads `cfg.input`, writes
/// `cfg.frames_out` and `cfg.csv_out` when set.
pub fn run_headless_config(cfg: &EngineConfig) -> Result<u64, RunError> {
    let input = cfg.input.as_ref().ok_or(RunError::NoInput)?;
    let source = AudioSource::open(input, SourceOptions { resample: cfg.resample })?;
    run_headless_source(cfg, source)
}

/// Like [`run_headless_config`] with an already opened source.
pub fn run_headless_source(cfg: &EngineConfig, source: AudioSource) -> Result<u64, RunError> {
    let mut pipeline = Pipeline::from_config(cfg)?;
    let mut frames = cfg.frames_out.as_deref().map(create).transpose()?;
    let mut csv = cfg.csv_out.as_deref().map(create).transpose()?;
    run_headless(
        &mut pipeline,
        source,
        frames.as_mut().map(|w| w as &mut dyn Write),
        csv.as_mut().map(|w| w as &mut dyn Write),
    )
}
