mod common;

use std::io::Cursor;

use photism::analysis::bins::center_index;
use photism::audio::{AudioSource, SampleHop, SourceOptions, HOP_SIZE};
use photism::config::EngineConfig;
use photism::frames::{read_frames, FrameFileError, FrameReader};
use photism::pipeline::{run_headless, run_headless_config, Deck, Pipeline};
use photism::{ControlMessage, Reply};

fn small_config(dir: &std::path::Path, wav: &std::path::Path) -> EngineConfig {
    let mut cfg = EngineConfig::parse("particles = 240\n").unwrap();
    cfg.input = Some(wav.to_path_buf());
    cfg.frames_out = Some(dir.join("out.synframes"));
    cfg.csv_out = Some(dir.join("out.csv"));
    cfg
}

#[test]
fn ten_second_clip_gives_430_frames_and_csv_rows() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    common::write_wav(&wav, &common::music_like(10.0, 1));
    let cfg = small_config(dir.path(), &wav);
    assert_eq!(run_headless_config(&cfg).unwrap(), 430);
    let frames = read_frames(cfg.frames_out.as_ref().unwrap()).unwrap();
    assert_eq!(frames.len(), 430);
    for (i, f) in frames.iter().enumerate() {
        assert_eq!(f.frame_index, i as u64);
        assert_eq!(f.particles.len(), 240);
    }
    assert!(frames.iter().any(|f| f.analysis.triggers != 0), "a busy clip should trigger");
    let csv = std::fs::read_to_string(cfg.csv_out.as_ref().unwrap()).unwrap();
    let lines: Vec<_> = csv.lines().collect();
    assert_eq!(lines.len(), 431);
    let f = &frames[200];
    let row: Vec<f64> = lines[201].split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(row[0], 200.0);
    for i in 0..12 {
        assert_eq!(row[2 + i] as f32, f.analysis.bins[i]);
        assert_eq!(row[2 + 48 + i] != 0.0, f.analysis.triggers & (1 << i) != 0);
    }
}

#[test]
fn truncated_run_output_keeps_whole_frames() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    common::write_wav(&wav, &common::music_like(10.0, 2));
    let cfg = small_config(dir.path(), &wav);
    run_headless_config(&cfg).unwrap();
    let bytes = std::fs::read(cfg.frames_out.as_ref().unwrap()).unwrap();
    let cut = &bytes[..bytes.len() - 100];
    let results: Vec<_> = FrameReader::new(cut).collect();
    assert_eq!(results.len(), 430);
    assert!(results[..429].iter().all(Result::is_ok));
    assert!(matches!(results[429], Err(FrameFileError::Truncated { complete_frames: 429, .. })));
}

#[test]
fn raw_stream_matches_wav_file() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    let samples = common::music_like(2.0, 3);
    common::write_wav(&wav, &samples);
    let from_file: Vec<_> = AudioSource::open(&wav, SourceOptions::default()).unwrap().map(Result::unwrap).collect();
    // Quantize exactly as the 16-bit file does, then feed as interleaved stereo.
    let quantized: Vec<f32> = samples.iter().map(|s| (s.clamp(-1.0, 1.0) * 32767.0).round() / 32768.0).collect();
    let raw: Vec<u8> = quantized.iter().flat_map(|s| [s.to_le_bytes(), s.to_le_bytes()]).flatten().collect();
    let from_stream: Vec<_> = AudioSource::from_raw_f32le(Cursor::new(raw), 2).unwrap().map(Result::unwrap).collect();
    assert_eq!(from_file.len(), from_stream.len());
    for (a, b) in from_file.iter().zip(&from_stream) {
        assert_eq!(a.samples(), b.samples());
    }
}

#[test]
fn amplitude_step_emphasizes_its_group_in_the_packet() {
    let cfg = EngineConfig::parse("particles = 120\n").unwrap();
    let mut p = Pipeline::from_config(&cfg).unwrap();
    let g = 7;
    let tone = common::hop_cosine(center_index(g), 0.5);
    for i in 0..8 {
        p.process_hop(&SampleHop::new(i, &[0.0; HOP_SIZE]).unwrap());
    }
    let quiet = p.process_hop(&SampleHop::new(8, &[0.0; HOP_SIZE]).unwrap());
    let loud = p.process_hop(&SampleHop::new(9, &tone).unwrap());
    assert_eq!(loud.packet.analysis.triggers, 1 << g);
    let group = &loud.packet.params.groups[g];
    assert!(group.emphasis);
    let expected = 2.0 * cfg.sim.base_force * (0.5 + loud.analysis.avg_bins[g]);
    assert_eq!(group.force_amt, expected as f32);
    assert!(!quiet.packet.params.groups[g].emphasis);
}

#[test]
fn headless_runs_with_different_seeds_differ() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    common::write_wav(&wav, &common::music_like(1.0, 4));
    let render = |seed: u64| {
        let mut cfg = EngineConfig::parse("particles = 36\n").unwrap();
        cfg.sim.seed = seed;
        let mut p = Pipeline::from_config(&cfg).unwrap();
        let mut out = Vec::new();
        let src = AudioSource::open(&wav, SourceOptions::default()).unwrap();
        run_headless(&mut p, src, Some(&mut out), None).unwrap();
        out
    };
    assert_eq!(render(0), render(0));
    assert_ne!(render(0), render(1));
}

#[test]
fn deck_plays_a_loaded_file_then_stops() {
    let dir = tempfile::tempdir().unwrap();
    let wav = dir.path().join("clip.wav");
    common::write_wav(&wav, &common::music_like(0.5, 5));
    let cfg = EngineConfig::parse("particles = 24\n").unwrap();
    let mut deck = Deck::new(Pipeline::from_config(&cfg).unwrap(), SourceOptions::default());
    let r = deck.handle(&ControlMessage::LoadSong { path: wav.clone() });
    assert!(matches!(r, Reply::Ack { ref name, .. } if name == "load_song"), "{r:?}");
    assert!(deck.tick().unwrap().is_none(), "songs load paused");
    assert!(deck.handle(&ControlMessage::Play).is_ack());
    let mut indices = Vec::new();
    while let Some(out) = deck.tick().unwrap() {
        indices.push(out.packet.frame_index);
        if indices.len() == 5 {
            assert!(deck.handle(&ControlMessage::ResetSim).is_ack());
        }
    }
    assert_eq!(indices, (0..21).collect::<Vec<_>>());
    assert!(!deck.is_playing());
}
