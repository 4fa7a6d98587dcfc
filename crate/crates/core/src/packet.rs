//! Binary frame packets streamed to clients and written to `.synframes` files.
//!
//! All fields are little-endian. Layout:
//!
//! | section   | field                                   | bytes        |
//! |-----------|-----------------------------------------|--------------|
//! | header    | magic `"SYN1"`                          | 4            |
//! |           | frame index (u64)                       | 8            |
//! |           | timestamp in seconds (f64)              | 8            |
//! | analysis  | bins, avg bins, volatility, avg volatility (4 × 12 f32) | 192 |
//! |           | trigger bitmask (u16, bit i = bin i)    | 2            |
//! |           | dynamics percent (f32)                  | 4            |
//! | params    | 12 × group: r g b, tx ty tz, force, colour magnitude (f32), emphasis (u32 0/1), y centre (f32) | 12 × 40 |
//! |           | colour sensitivity (f32)                | 4            |
//! | particles | count (u32)                             | 4            |
//! |           | count × (px py pz vx vy vz r g b a) f32 | count × 40   |

use thiserror::Error;

use crate::analysis::{AnalysisFrame, BinFrame, Triggers, NUM_BINS};
use crate::engine::{EngineParams, ParticleState, NUM_GROUPS};

pub const MAGIC: [u8; 4] = *b"SYN1";
pub const HEADER_LEN: usize = 4 + 8 + 8;
pub const ANALYSIS_LEN: usize = 4 * NUM_BINS * 4 + 2 + 4;
pub const GROUP_LEN: usize = 10 * 4;
pub const PARAMS_LEN: usize = NUM_GROUPS * GROUP_LEN + 4;
/// Floats per particle record.
pub const PARTICLE_FLOATS: usize = 10;
pub const PARTICLE_LEN: usize = PARTICLE_FLOATS * 4;
/// Bytes before the first particle record, including the particle count.
pub const PREFIX_LEN: usize = HEADER_LEN + ANALYSIS_LEN + PARAMS_LEN + 4;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PacketError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("packet truncated: need {needed} bytes, have {available}")]
    Truncated { needed: usize, available: usize },
    #[error("trigger mask {0:#06x} sets bits above bin 11")]
    BadTriggerMask(u16),
    #[error("group {group} emphasis flag is {value}, expected 0 or 1")]
    BadEmphasis { group: usize, value: u32 },
    #[error("{0} trailing bytes after packet")]
    TrailingBytes(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WireAnalysis {
    pub bins: [f32; NUM_BINS],
    pub avg_bins: [f32; NUM_BINS],
    pub volatility: [f32; NUM_BINS],
    pub avg_volatility: [f32; NUM_BINS],
    pub triggers: u16,
    pub dynamics_percent: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WireGroup {
    pub color_rgb: [f32; 3],
    pub target: [f32; 3],
    pub force_amt: f32,
    pub color_mag: f32,
    pub emphasis: bool,
    pub y_center: f32,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct WireParams {
    pub groups: [WireGroup; NUM_GROUPS],
    pub color_sensitivity: f32,
}

/// One simulation frame in wire form.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FramePacket {
    pub frame_index: u64,
    pub timestamp_s: f64,
    pub analysis: WireAnalysis,
    pub params: WireParams,
    /// `px py pz vx vy vz r g b a` per particle; `a` is the group index.
    pub particles: Vec<[f32; PARTICLE_FLOATS]>,
}

fn narrow(frame: &BinFrame) -> [f32; NUM_BINS] {
    frame.values().map(|v| v as f32)
}

/// Captures analysis, parameters, and particle state into a packet. Reads only.
pub fn snapshot(
    frame_index: u64,
    timestamp_s: f64,
    frame: &AnalysisFrame,
    params: &EngineParams,
    state: &ParticleState,
) -> FramePacket {
    let analysis = WireAnalysis {
        bins: narrow(&frame.bins),
        avg_bins: narrow(&frame.avg_bins),
        volatility: narrow(&frame.volatility),
        avg_volatility: narrow(&frame.avg_volatility),
        triggers: frame.triggers.bitmask(),
        dynamics_percent: frame.dynamics_percent as f32,
    };
    let groups = params.groups.map(|g| WireGroup {
        color_rgb: g.color_rgb.channels().map(|c| c as f32),
        target: g.target.map(|c| c as f32),
        force_amt: g.force_amt as f32,
        color_mag: g.color_mag as f32,
        emphasis: g.emphasis,
        y_center: g.y_center as f32,
    });
    let particles = state
        .positions
        .iter()
        .zip(&state.velocities)
        .zip(&state.colors)
        .map(|((p, v), c)| {
            [
                p[0] as f32,
                p[1] as f32,
                p[2] as f32,
                v[0] as f32,
                v[1] as f32,
                v[2] as f32,
                c[0] as f32,
                c[1] as f32,
                c[2] as f32,
                c[3] as f32,
            ]
        })
        .collect();
    FramePacket {
        frame_index,
        timestamp_s,
        analysis,
        params: WireParams { groups, color_sensitivity: params.color_sensitivity as f32 },
        particles,
    }
}

impl FramePacket {
    pub fn encoded_len(&self) -> usize {
        PREFIX_LEN + self.particles.len() * PARTICLE_LEN
    }

    pub fn triggers(&self) -> Triggers {
        Triggers::from_bitmask(self.analysis.triggers).unwrap_or_default()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        self.encode_into(&mut out);
        out
    }

    /// Appends the encoded packet to `out`.
    pub fn encode_into(&self, out: &mut Vec<u8>) {
        out.reserve(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&self.frame_index.to_le_bytes());
        out.extend_from_slice(&self.timestamp_s.to_le_bytes());
        let a = &self.analysis;
        for series in [&a.bins, &a.avg_bins, &a.volatility, &a.avg_volatility] {
            put_f32s(out, series);
        }
        out.extend_from_slice(&a.triggers.to_le_bytes());
        put_f32s(out, &[a.dynamics_percent]);
        for g in &self.params.groups {
            put_f32s(out, &g.color_rgb);
            put_f32s(out, &g.target);
            put_f32s(out, &[g.force_amt, g.color_mag]);
            out.extend_from_slice(&u32::from(g.emphasis).to_le_bytes());
            put_f32s(out, &[g.y_center]);
        }
        put_f32s(out, &[self.params.color_sensitivity]);
        let count = u32::try_from(self.particles.len()).expect("particle count fits in u32");
        out.extend_from_slice(&count.to_le_bytes());
        for p in &self.particles {
            put_f32s(out, p);
        }
    }

    /// Decodes one packet from the front of `bytes`, returning it with the
    /// number of bytes consumed.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize), PacketError> {
        let total = packet_len(bytes)?;
        let mut r = Cursor { bytes: &bytes[..total], pos: 0 };
        let magic: [u8; 4] = r.take(4).try_into().expect("4 bytes");
        let frame_index = r.u64();
        let timestamp_s = r.f64();
        let bins = r.f32s();
        let avg_bins = r.f32s();
        let volatility = r.f32s();
        let avg_volatility = r.f32s();
        let triggers = r.u16();
        if triggers >> NUM_BINS != 0 {
            return Err(PacketError::BadTriggerMask(triggers));
        }
        let dynamics_percent = r.f32();
        let mut groups = [WireGroup::default(); NUM_GROUPS];
        for (i, g) in groups.iter_mut().enumerate() {
            g.color_rgb = r.f32s();
            g.target = r.f32s();
            g.force_amt = r.f32();
            g.color_mag = r.f32();
            g.emphasis = match r.u32() {
                0 => false,
                1 => true,
                value => return Err(PacketError::BadEmphasis { group: i, value }),
            };
            g.y_center = r.f32();
        }
        let color_sensitivity = r.f32();
        let count = r.u32() as usize;
        let particles = (0..count).map(|_| r.f32s()).collect();
        debug_assert_eq!(magic, MAGIC);
        debug_assert_eq!(r.pos, total);
        let packet = FramePacket {
            frame_index,
            timestamp_s,
            analysis: WireAnalysis { bins, avg_bins, volatility, avg_volatility, triggers, dynamics_percent },
            params: WireParams { groups, color_sensitivity },
            particles,
        };
        Ok((packet, total))
    }

    /// Decodes a buffer holding exactly one packet.
    pub fn decode(bytes: &[u8]) -> Result<Self, PacketError> {
        let (packet, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(PacketError::TrailingBytes(bytes.len() - used));
        }
        Ok(packet)
    }
}

/// Validates magic and length fields and returns the full packet length.
pub fn packet_len(bytes: &[u8]) -> Result<usize, PacketError> {
    if bytes.len() < 4 {
        return Err(PacketError::Truncated { needed: PREFIX_LEN, available: bytes.len() });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if magic != MAGIC {
        return Err(PacketError::BadMagic(magic));
    }
    if bytes.len() < PREFIX_LEN {
        return Err(PacketError::Truncated { needed: PREFIX_LEN, available: bytes.len() });
    }
    let count = u32::from_le_bytes(bytes[PREFIX_LEN - 4..PREFIX_LEN].try_into().expect("4 bytes")) as usize;
    let needed = PREFIX_LEN + count * PARTICLE_LEN;
    if bytes.len() < needed {
        return Err(PacketError::Truncated { needed, available: bytes.len() });
    }
    Ok(needed)
}

fn put_f32s(out: &mut Vec<u8>, values: &[f32]) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Reader over a buffer whose length was checked up front.
struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> &'a [u8] {
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        s
    }

    fn u16(&mut self) -> u16 {
        u16::from_le_bytes(self.take(2).try_into().expect("2 bytes"))
    }

    fn u32(&mut self) -> u32 {
        u32::from_le_bytes(self.take(4).try_into().expect("4 bytes"))
    }

    fn u64(&mut self) -> u64 {
        u64::from_le_bytes(self.take(8).try_into().expect("8 bytes"))
    }

    fn f32(&mut self) -> f32 {
        f32::from_le_bytes(self.take(4).try_into().expect("4 bytes"))
    }

    fn f64(&mut self) -> f64 {
        f64::from_le_bytes(self.take(8).try_into().expect("8 bytes"))
    }

    fn f32s<const N: usize>(&mut self) -> [f32; N] {
        std::array::from_fn(|_| self.f32())
    }
}
