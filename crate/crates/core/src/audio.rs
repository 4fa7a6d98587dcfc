//! Audio ingest: decode PCM sources into fixed-size mono hops.
//!
//! Every source is reduced to a stream of [`SampleHop`]s of exactly
//! [`HOP_SIZE`] samples at [`SAMPLE_RATE`]. Multichannel input is mixed down
//! by averaging channels, and the final partial hop is zero-padded and
//! flagged as the last one.

use std::fmt;
use std::fs::File;
use std::io::{self, BufReader, Read};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Sample rate every hop is expressed in.
pub const SAMPLE_RATE: u32 = 44_100;

/// Samples per hop. Hops are disjoint: the read position advances by this much.
pub const HOP_SIZE: usize = 1024;

/// Duration of one hop in seconds (about 23.22 ms).
pub const HOP_SECONDS: f64 = HOP_SIZE as f64 / SAMPLE_RATE as f64;

/// Level reported for digital silence instead of negative infinity.
pub const DEFAULT_SILENCE_FLOOR_DB: f64 = -120.0;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("cannot read '{path}': {source}")]
    Unreadable { path: PathBuf, source: io::Error },
    #[error("unsupported codec: {0}")]
    UnsupportedCodec(String),
    #[error("unsupported sample rate {found} Hz (expected {SAMPLE_RATE} Hz; enable resampling to accept it)")]
    UnsupportedSampleRate { found: u32 },
    #[error("decode failure after {frames} frames: {message}")]
    Decode { frames: u64, message: String },
    #[error("invalid hop: {0}")]
    InvalidHop(String),
}

/// One disjoint block of [`HOP_SIZE`] mono samples.
#[derive(Clone, PartialEq)]
pub struct SampleHop {
    samples: Box<[f32; HOP_SIZE]>,
    index: u64,
    valid_len: usize,
    last: bool,
}

impl SampleHop {
    /// Builds a complete hop. Fails unless `samples` has exactly [`HOP_SIZE`]
    /// values, all inside `[-1, 1]`.
    pub fn new(index: u64, samples: &[f32]) -> Result<Self, AudioError> {
        if samples.len() != HOP_SIZE {
            return Err(AudioError::InvalidHop(format!("expected {HOP_SIZE} samples, got {}", samples.len())));
        }
        if let Some(pos) = samples.iter().position(|s| !(-1.0..=1.0).contains(s)) {
            return Err(AudioError::InvalidHop(format!("sample {pos} = {} is outside [-1, 1]", samples[pos])));
        }
        let mut buf = Box::new([0.0f32; HOP_SIZE]);
        buf.copy_from_slice(samples);
        Ok(Self { samples: buf, index, valid_len: HOP_SIZE, last: false })
    }

    /// Builds a hop from the leading `partial` samples, zero-padding the rest.
    fn padded(index: u64, partial: &[f32], last: bool) -> Self {
        debug_assert!(partial.len() <= HOP_SIZE);
        let mut buf = Box::new([0.0f32; HOP_SIZE]);
        buf[..partial.len()].copy_from_slice(partial);
        Self { samples: buf, index, valid_len: partial.len(), last }
    }

    pub fn samples(&self) -> &[f32; HOP_SIZE] {
        &self.samples
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    /// Number of samples that came from the source; the rest are padding.
    pub fn valid_len(&self) -> usize {
        self.valid_len
    }

    pub fn is_padded(&self) -> bool {
        self.valid_len < HOP_SIZE
    }

    /// True for the final hop of a finite source.
    pub fn is_last(&self) -> bool {
        self.last
    }

    /// Start time of this hop relative to the start of the source.
    pub fn start_seconds(&self) -> f64 {
        self.index as f64 * HOP_SECONDS
    }
}

impl fmt::Debug for SampleHop {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SampleHop")
            .field("index", &self.index)
            .field("valid_len", &self.valid_len)
            .field("last", &self.last)
            .finish_non_exhaustive()
    }
}

/// Root-mean-square level of a hop in dBFS, with silence mapped to
/// [`DEFAULT_SILENCE_FLOOR_DB`].
pub fn rms_db(hop: &SampleHop) -> f64 {
    rms_db_with_floor(hop, DEFAULT_SILENCE_FLOOR_DB)
}

pub fn rms_db_with_floor(hop: &SampleHop, floor_db: f64) -> f64 {
    let power = hop.samples.iter().map(|&s| f64::from(s) * f64::from(s)).sum::<f64>() / HOP_SIZE as f64;
    if power <= 0.0 {
        return floor_db;
    }
    // 20·log10(sqrt(p)) = 10·log10(p)
    (10.0 * power.log10()).max(floor_db)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    File(PathBuf),
    /// Interleaved little-endian f32 PCM at 44100 Hz from a byte stream.
    RawStream {
        channels: u16,
    },
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File(p) => write!(f, "{}", p.display()),
            Origin::RawStream { channels } => write!(f, "raw f32le stream ({channels} ch)"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SourceOptions {
    /// Linearly resample sources that are not at 44100 Hz instead of rejecting them.
    pub resample: bool,
}

type MonoStream = Box<dyn Iterator<Item = Result<f32, AudioError>> + Send>;

/// An open audio source positioned at some hop.
pub struct AudioSource {
    origin: Origin,
    channels: u16,
    native_rate: u32,
    total_frames: Option<u64>,
    stream: MonoStream,
    pending: Option<f32>,
    next_index: u64,
    finished: bool,
}

impl fmt::Debug for AudioSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AudioSource")
            .field("origin", &self.origin)
            .field("channels", &self.channels)
            .field("native_rate", &self.native_rate)
            .field("total_frames", &self.total_frames)
            .field("next_index", &self.next_index)
            .finish_non_exhaustive()
    }
}

/// Opens a WAV file with default options (no resampling).
pub fn open_source(path: impl AsRef<Path>) -> Result<AudioSource, AudioError> {
    AudioSource::open(path, SourceOptions::default())
}

impl AudioSource {
    /// Opens a RIFF/WAV file holding 16- or 24-bit integer PCM or 32-bit float PCM.
    pub fn open(path: impl AsRef<Path>, options: SourceOptions) -> Result<Self, AudioError> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|source| AudioError::Unreadable { path: path.to_path_buf(), source })?;
        let reader = hound::WavReader::new(BufReader::new(file)).map_err(|e| match e {
            hound::Error::IoError(source) => AudioError::Unreadable { path: path.to_path_buf(), source },
            other => AudioError::UnsupportedCodec(other.to_string()),
        })?;
        let spec = reader.spec();
        let channels = spec.channels;
        let frames = u64::from(reader.duration());
        if channels == 0 {
            return Err(AudioError::UnsupportedCodec("zero channels".into()));
        }
        let interleaved: Box<dyn Iterator<Item = Result<f32, AudioError>> + Send> =
            match (spec.sample_format, spec.bits_per_sample) {
                (hound::SampleFormat::Int, bits @ (16 | 24)) => {
                    let scale = 1.0 / (1u32 << (bits - 1)) as f32;
                    Box::new(reader.into_samples::<i32>().map(move |s| s.map(|v| v as f32 * scale).map_err(decode_err)))
                }
                (hound::SampleFormat::Float, 32) => {
                    Box::new(reader.into_samples::<f32>().map(|s| s.map_err(decode_err)))
                }
                (format, bits) => return Err(AudioError::UnsupportedCodec(format!("{bits}-bit {format:?} PCM"))),
            };
        let mono = Mixdown::new(interleaved, channels);
        Self::assemble(
            Origin::File(path.to_path_buf()),
            channels,
            spec.sample_rate,
            Some(frames),
            Box::new(mono),
            options,
        )
    }

    /// Wraps a byte stream of interleaved little-endian f32 samples at 44100 Hz.
    pub fn from_raw_f32le<R: Read + Send + 'static>(reader: R, channels: u16) -> Result<Self, AudioError> {
        if channels == 0 {
            return Err(AudioError::UnsupportedCodec("zero channels".into()));
        }
        let interleaved = RawF32Le { reader, done: false };
        let mono = Mixdown::new(Box::new(interleaved), channels);
        Self::assemble(
            Origin::RawStream { channels },
            channels,
            SAMPLE_RATE,
            None,
            Box::new(mono),
            SourceOptions::default(),
        )
    }

    fn assemble(
        origin: Origin,
        channels: u16,
        native_rate: u32,
        total_frames: Option<u64>,
        stream: MonoStream,
        options: SourceOptions,
    ) -> Result<Self, AudioError> {
        let (stream, total_frames) = if native_rate == SAMPLE_RATE {
            (stream, total_frames)
        } else if options.resample {
            let mono = stream.collect::<Result<Vec<f32>, _>>()?;
            let resampled = resample_linear(&mono, native_rate, SAMPLE_RATE);
            let len = resampled.len() as u64;
            (Box::new(resampled.into_iter().map(Ok)) as MonoStream, Some(len))
        } else {
            return Err(AudioError::UnsupportedSampleRate { found: native_rate });
        };
        Ok(Self { origin, channels, native_rate, total_frames, stream, pending: None, next_index: 0, finished: false })
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    /// Channel count before mixdown.
    pub fn channels(&self) -> u16 {
        self.channels
    }

    /// Sample rate of the underlying container; hops are always at [`SAMPLE_RATE`].
    pub fn native_sample_rate(&self) -> u32 {
        self.native_rate
    }

    pub fn sample_rate(&self) -> u32 {
        SAMPLE_RATE
    }

    /// Mono frames at 44100 Hz, when known.
    pub fn total_frames(&self) -> Option<u64> {
        self.total_frames
    }

    /// Number of complete hops, when the length is known. A trailing partial
    /// hop is still emitted by [`next_hop`](Self::next_hop) but not counted here.
    pub fn total_hops(&self) -> Option<u64> {
        self.total_frames.map(|f| f / HOP_SIZE as u64)
    }

    fn pull(&mut self) -> Result<Option<f32>, AudioError> {
        if let Some(s) = self.pending.take() {
            return Ok(Some(s));
        }
        self.stream.next().transpose()
    }

    /// Reads the next hop, or `None` once the source is exhausted.
    pub fn next_hop(&mut self) -> Result<Option<SampleHop>, AudioError> {
        if self.finished {
            return Ok(None);
        }
        let mut buf = Vec::with_capacity(HOP_SIZE);
        while buf.len() < HOP_SIZE {
            match self.pull()? {
                Some(s) => buf.push(s),
                None => break,
            }
        }
        if buf.is_empty() {
            self.finished = true;
            return Ok(None);
        }
        let last = if buf.len() < HOP_SIZE {
            true
        } else {
            self.pending = self.pull()?;
            self.pending.is_none()
        };
        self.finished = last;
        let hop = SampleHop::padded(self.next_index, &buf, last);
        self.next_index += 1;
        Ok(Some(hop))
    }
}

impl Iterator for AudioSource {
    type Item = Result<SampleHop, AudioError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_hop().transpose()
    }
}

fn decode_err(e: hound::Error) -> AudioError {
    AudioError::Decode { frames: 0, message: e.to_string() }
}

/// Averages interleaved channels into one, clamping into `[-1, 1]`.
struct Mixdown {
    inner: Box<dyn Iterator<Item = Result<f32, AudioError>> + Send>,
    channels: u16,
    frames: u64,
}

impl Mixdown {
    fn new(inner: Box<dyn Iterator<Item = Result<f32, AudioError>> + Send>, channels: u16) -> Self {
        Self { inner, channels, frames: 0 }
    }
}

impl Iterator for Mixdown {
    type Item = Result<f32, AudioError>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut sum = 0.0f64;
        for ch in 0..self.channels {
            match self.inner.next() {
                Some(Ok(s)) => sum += f64::from(sanitize(s)),
                Some(Err(AudioError::Decode { message, .. })) => {
                    return Some(Err(AudioError::Decode { frames: self.frames, message }))
                }
                Some(Err(e)) => return Some(Err(e)),
                None if ch == 0 => return None,
                None => {
                    return Some(Err(AudioError::Decode {
                        frames: self.frames,
                        message: format!("stream ended inside a frame ({ch} of {} channels)", self.channels),
                    }))
                }
            }
        }
        self.frames += 1;
        Some(Ok((sum / f64::from(self.channels)) as f32))
    }
}

fn sanitize(s: f32) -> f32 {
    if s.is_nan() {
        0.0
    } else {
        s.clamp(-1.0, 1.0)
    }
}

struct RawF32Le<R> {
    reader: R,
    done: bool,
}

impl<R: Read> Iterator for RawF32Le<R> {
    type Item = Result<f32, AudioError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut bytes = [0u8; 4];
        let mut filled = 0;
        while filled < 4 {
            match self.reader.read(&mut bytes[filled..]) {
                Ok(0) => break,
                Ok(n) => filled += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
                Err(e) => {
                    self.done = true;
                    return Some(Err(AudioError::Decode { frames: 0, message: e.to_string() }));
                }
            }
        }
        match filled {
            0 => {
                self.done = true;
                None
            }
            4 => Some(Ok(f32::from_le_bytes(bytes))),
            n => {
                self.done = true;
                Some(Err(AudioError::Decode { frames: 0, message: format!("truncated sample ({n} of 4 bytes)") }))
            }
        }
    }
}

/// Linear-interpolation resampler. Output length is `floor(len · to / from)`.
pub fn resample_linear(input: &[f32], from_hz: u32, to_hz: u32) -> Vec<f32> {
    if input.is_empty() || from_hz == to_hz {
        return input.to_vec();
    }
    let out_len = (input.len() as u64 * u64::from(to_hz) / u64::from(from_hz)) as usize;
    let step = f64::from(from_hz) / f64::from(to_hz);
    (0..out_len)
        .map(|i| {
            let pos = i as f64 * step;
            let j = pos.floor() as usize;
            let frac = pos - j as f64;
            let a = f64::from(input[j]);
            let b = f64::from(*input.get(j + 1).unwrap_or(&input[j]));
            (a + (b - a) * frac) as f32
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn write_wav(path: &Path, channels: u16, rate: u32, frames: &[Vec<f32>]) {
        let spec = hound::WavSpec {
            channels,
            sample_rate: rate,
            bits_per_sample: 32,
            sample_format: hound::SampleFormat::Float,
        };
        let mut w = hound::WavWriter::create(path, spec).unwrap();
        for frame in frames {
            for &s in frame {
                w.write_sample(s).unwrap();
            }
        }
        w.finalize().unwrap();
    }

    fn hop_of(value: impl Fn(usize) -> f32) -> SampleHop {
        let v: Vec<f32> = (0..HOP_SIZE).map(value).collect();
        SampleHop::new(0, &v).unwrap()
    }

    #[test]
    fn ten_second_mono_file_reports_430_hops() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ten.wav");
        write_wav(&path, 1, SAMPLE_RATE, &vec![vec![0.0]; 441_000]);
        let src = open_source(&path).unwrap();
        assert_eq!(src.total_hops(), Some(430));
        assert_eq!(src.channels(), 1);
    }

    #[test]
    fn stereo_is_mixed_down_by_mean() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("st.wav");
        write_wav(&path, 2, SAMPLE_RATE, &vec![vec![0.5, -0.5]; 2048]);
        let mut src = open_source(&path).unwrap();
        assert_eq!(src.channels(), 2);
        let hop = src.next_hop().unwrap().unwrap();
        assert!(hop.samples().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn wrong_rate_rejected_without_resampling() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("48k.wav");
        write_wav(&path, 1, 48_000, &vec![vec![0.1]; 4800]);
        match open_source(&path) {
            Err(AudioError::UnsupportedSampleRate { found }) => assert_eq!(found, 48_000),
            other => panic!("expected rate error, got {other:?}"),
        }
        let src = AudioSource::open(&path, SourceOptions { resample: true }).unwrap();
        assert_eq!(src.total_frames(), Some(4410));
        assert_eq!(src.native_sample_rate(), 48_000);
    }

    #[test]
    fn partial_tail_is_zero_padded_and_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("1025.wav");
        write_wav(&path, 1, SAMPLE_RATE, &vec![vec![0.25]; 1025]);
        let mut src = open_source(&path).unwrap();
        let h0 = src.next_hop().unwrap().unwrap();
        assert!(!h0.is_last());
        assert_eq!(h0.valid_len(), HOP_SIZE);
        let h1 = src.next_hop().unwrap().unwrap();
        assert!(h1.is_last() && h1.is_padded());
        assert_eq!(h1.index(), 1);
        assert_eq!(h1.samples()[0], 0.25);
        assert!(h1.samples()[1..].iter().all(|&s| s == 0.0));
        assert!(src.next_hop().unwrap().is_none());
    }

    #[test]
    fn exact_multiple_flags_final_full_hop() {
        let bytes: Vec<u8> = (0..2 * HOP_SIZE).flat_map(|_| 0.5f32.to_le_bytes()).collect();
        let mut src = AudioSource::from_raw_f32le(io::Cursor::new(bytes), 1).unwrap();
        assert!(!src.next_hop().unwrap().unwrap().is_last());
        let h = src.next_hop().unwrap().unwrap();
        assert!(h.is_last() && !h.is_padded());
        assert!(src.next_hop().unwrap().is_none());
    }

    #[test]
    fn integer_pcm_is_scaled_to_unit_range() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("i16.wav");
        let spec = hound::WavSpec {
            channels: 1,
            sample_rate: SAMPLE_RATE,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..HOP_SIZE {
            w.write_sample(i16::MIN).unwrap();
        }
        w.finalize().unwrap();
        let hop = open_source(&path).unwrap().next_hop().unwrap().unwrap();
        assert!(hop.samples().iter().all(|&s| s == -1.0));

        let path24 = dir.path().join("i24.wav");
        let spec = hound::WavSpec { bits_per_sample: 24, ..spec };
        let mut w = hound::WavWriter::create(&path24, spec).unwrap();
        for _ in 0..HOP_SIZE {
            w.write_sample(1 << 22).unwrap();
        }
        w.finalize().unwrap();
        let hop = open_source(&path24).unwrap().next_hop().unwrap().unwrap();
        assert!(hop.samples().iter().all(|&s| s == 0.5));
    }

    #[test]
    fn missing_file_names_the_path() {
        let err = open_source("/definitely/not/here.wav").unwrap_err();
        assert!(err.to_string().contains("/definitely/not/here.wav"));
    }

    #[test]
    fn truncated_raw_stream_is_a_decode_error() {
        let mut bytes: Vec<u8> = 0.1f32.to_le_bytes().to_vec();
        bytes.extend_from_slice(&[0, 0]);
        let mut src = AudioSource::from_raw_f32le(io::Cursor::new(bytes), 1).unwrap();
        assert!(matches!(src.next_hop(), Err(AudioError::Decode { .. })));
    }

    #[test]
    fn hop_constructor_validates() {
        assert!(SampleHop::new(0, &[0.0; 10]).is_err());
        let mut v = vec![0.0; HOP_SIZE];
        v[3] = 1.5;
        assert!(SampleHop::new(0, &v).is_err());
    }

    #[test]
    fn rms_db_reference_levels() {
        assert_eq!(rms_db(&hop_of(|_| 1.0)), 0.0);
        assert_eq!(rms_db(&hop_of(|_| 0.0)), -120.0);
        // 16 whole cycles per hop; rms of a sine is A/sqrt(2) -> -3.0103 dB
        let sine = hop_of(|n| (2.0 * PI * 16.0 * n as f64 / HOP_SIZE as f64).sin() as f32);
        let direct = (sine.samples().iter().map(|&s| f64::from(s).powi(2)).sum::<f64>() / HOP_SIZE as f64).sqrt();
        assert!((20.0 * direct.log10() - rms_db(&sine)).abs() < 1e-9);
        assert!((rms_db(&sine) + 3.01).abs() < 0.01);
    }

    #[test]
    fn linear_resampler_preserves_ramps() {
        let ramp: Vec<f32> = (0..480).map(|i| i as f32 / 480.0).collect();
        let out = resample_linear(&ramp, 48_000, 44_100);
        assert_eq!(out.len(), 441);
        for (i, &v) in out.iter().enumerate() {
            let expect = (i as f64 * 48_000.0 / 44_100.0) / 480.0;
            assert!((f64::from(v) - expect).abs() < 1e-5, "{i}: {v} vs {expect}");
        }
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn gain_shifts_level_by_20_log10(
                samples in proptest::collection::vec(-0.5f32..0.5, HOP_SIZE),
                gain in 1.01f64..2.0,
            ) {
                prop_assume!(samples.iter().any(|&s| s.abs() > 1e-3));
                let base = SampleHop::new(0, &samples).unwrap();
                let scaled: Vec<f32> = samples.iter().map(|&s| (f64::from(s) * gain) as f32).collect();
                let louder = SampleHop::new(0, &scaled).unwrap();
                let delta = rms_db(&louder) - rms_db(&base);
                prop_assert!(delta > 0.0);
                prop_assert!((delta - 20.0 * gain.log10()).abs() < 1e-6);
            }

            #[test]
            fn hops_partition_the_stream(len in 0usize..5000) {
                let data: Vec<f32> = (0..len).map(|i| ((i % 97) as f32 / 97.0) - 0.5).collect();
                let bytes: Vec<u8> = data.iter().flat_map(|s| s.to_le_bytes()).collect();
                let src = AudioSource::from_raw_f32le(io::Cursor::new(bytes), 1).unwrap();
                let mut rebuilt = Vec::new();
                for (expected_index, hop) in src.enumerate() {
                    let hop = hop.unwrap();
                    prop_assert_eq!(hop.index(), expected_index as u64);
                    rebuilt.extend_from_slice(&hop.samples()[..hop.valid_len()]);
                }
                prop_assert_eq!(rebuilt, data);
            }
        }
    }
}
