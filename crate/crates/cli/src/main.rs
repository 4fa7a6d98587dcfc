//! `photism`: render audio to particle frames, or serve them live.

use std::io::{self, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use photism::audio::{AudioSource, SourceOptions};
use photism::config::{defaults_dump, EngineConfig, Mode};
use photism::pipeline::{run_headless_config, run_headless_source};
use photism::{Deck, Pipeline};

/// Audio-reactive particle visualization engine.
///
/// Settings are resolved in order: built-in defaults, then `--config`, then
/// flags. Tuning flags use the same names as control messages.
#[derive(Debug, Parser)]
#[command(name = "photism", version)]
struct Args {
    /// WAV file to analyze (16/24-bit integer or 32-bit float PCM).
    #[arg(long, value_name = "PATH", conflicts_with = "stdin_pcm")]
    input: Option<PathBuf>,
    /// Read raw interleaved 32-bit float little-endian PCM at 44.1 kHz from stdin.
    #[arg(long, value_name = "CHANNELS", value_parser = clap::value_parser!(u16).range(1..))]
    stdin_pcm: Option<u16>,
    /// Render every hop as fast as possible and exit.
    #[arg(long, conflicts_with = "serve")]
    headless: bool,
    /// Serve frames and accept control messages over WebSocket until interrupted.
    #[arg(long)]
    serve: bool,
    /// Where to write the `.synframes` file in headless mode.
    #[arg(long, value_name = "PATH")]
    frames_out: Option<PathBuf>,
    /// Where to write the per-hop analysis CSV in headless mode.
    #[arg(long, value_name = "PATH")]
    csv_out: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    /// Key-value config file.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Built-in preset (default, oceanic, scriabin) or a `.preset` file.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    particles: Option<usize>,
    /// FFT window: rect or hann.
    #[arg(long, value_name = "rect|hann")]
    window: Option<String>,
    /// Resample inputs that are not 44.1 kHz instead of rejecting them.
    #[arg(long)]
    resample: bool,
    /// Print the seven tuning defaults and exit.
    #[arg(long)]
    defaults_dump: bool,
    /// Print the fully resolved config and exit.
    #[arg(long)]
    print_config: bool,

    #[arg(long = "num-points-to-average", value_name = "N")]
    num_points_to_average: Option<String>,
    #[arg(long = "num-points-to-average-vol", value_name = "N")]
    num_points_to_average_vol: Option<String>,
    #[arg(long = "trigger-val", value_name = "PERCENT", allow_hyphen_values = true)]
    trigger_val: Option<String>,
    #[arg(long = "max-average", allow_hyphen_values = true)]
    max_average: Option<String>,
    #[arg(long = "max-trigger", allow_hyphen_values = true)]
    max_trigger: Option<String>,
    #[arg(long = "color-sensitivity", allow_hyphen_values = true)]
    color_sensitivity: Option<String>,
    #[arg(long = "range_max", allow_hyphen_values = true)]
    range_max: Option<String>,
}

impl Args {
    /// Flag values as config keys, applied after the config file.
    fn overrides(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut put = |k, v: Option<String>| {
            if let Some(v) = v {
                out.push((k, v));
            }
        };
        put("input", self.input.as_ref().map(|p| p.display().to_string()));
        put("frames-out", self.frames_out.as_ref().map(|p| p.display().to_string()));
        put("csv-out", self.csv_out.as_ref().map(|p| p.display().to_string()));
        put("port", self.port.map(|v| v.to_string()));
        put("preset", self.preset.clone());
        put("seed", self.seed.map(|v| v.to_string()));
        put("particles", self.particles.map(|v| v.to_string()));
        put("window", self.window.clone());
        put("resample", self.resample.then(|| "true".into()));
        put("mode", self.headless.then(|| "headless".into()));
        put("mode", self.serve.then(|| "serve".into()));
        put("num-points-to-average", self.num_points_to_average.clone());
        put("num-points-to-average-vol", self.num_points_to_average_vol.clone());
        put("trigger-val", self.trigger_val.clone());
        put("max-average", self.max_average.clone());
        put("max-trigger", self.max_trigger.clone());
        put("color-sensitivity", self.color_sensitivity.clone());
        put("range_max", self.range_max.clone());
        out
    }

    fn resolve(&self) -> Result<EngineConfig> {
        let mut cfg = match &self.config {
            Some(path) => EngineConfig::load(path)?,
            None => EngineConfig::default(),
        };
        for (key, value) in self.overrides() {
            cfg.set(key, &value).with_context(|| format!("--{key} {value}"))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn stdin_source(channels: u16) -> Result<AudioSource> {
    Ok(AudioSource::from_raw_f32le(io::stdin(), channels)?)
}

fn run(args: Args) -> Result<()> {
    if args.defaults_dump {
        print!("{}", defaults_dump());
        return Ok(());
    }
    let cfg = args.resolve()?;
    if args.print_config {
        print!("{}", cfg.to_text());
        return Ok(());
    }
    // Fail on a bad preset before any input is touched.
    cfg.live_settings()?;
    match cfg.mode {
        Mode::Headless => {
            if cfg.frames_out.is_none() && cfg.csv_out.is_none() {
                log::warn!("no --frames-out or --csv-out given; frames are computed and discarded");
            }
            let frames = match (args.stdin_pcm, &cfg.input) {
                (Some(ch), _) => run_headless_source(&cfg, stdin_source(ch)?)?,
                (None, Some(_)) => run_headless_config(&cfg)?,
                (None, None) => bail!("headless mode needs --input or --stdin-pcm"),
            };
            log::info!("rendered {frames} frames");
            if let Some(path) = &cfg.frames_out {
                let mut out = io::stdout().lock();
                writeln!(out, "{frames} frames written to {}", path.display())?;
            }
        }
        Mode::Serve => {
            let options = SourceOptions { resample: cfg.resample };
            let mut deck = Deck::new(Pipeline::from_config(&cfg)?, options);
            if let Some(ch) = args.stdin_pcm {
                deck.load(stdin_source(ch)?, true);
            } else if let Some(path) = &cfg.input {
                deck.load_path(path)?;
            }
            let addr = SocketAddr::from(([0, 0, 0, 0], cfg.port));
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(photism_session::serve(deck, addr)).with_context(|| format!("serving on {addr}"))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args = Args::parse();
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Skip causes already quoted by the message above them.
            let mut msg = e.to_string();
            for cause in e.chain().skip(1).map(ToString::to_string) {
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
