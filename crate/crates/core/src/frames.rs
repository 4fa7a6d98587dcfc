//! `.synframes` files: packets concatenated back to back, no extra framing.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::packet::{packet_len, FramePacket, PacketError, PREFIX_LEN};

#[derive(Debug, Error)]
pub enum FrameFileError {
    #[error(transparent)]
    Io(#[from] io::Error),
    /// The file ends inside packet number `complete_frames` (0-based), i.e.
    /// after `complete_frames` whole packets.
    #[error("file truncated inside frame {complete_frames} (after {complete_frames} whole frames, at byte {offset})")]
    Truncated { complete_frames: u64, offset: u64 },
    #[error("frame {frame} is corrupt: {source}")]
    Corrupt { frame: u64, source: PacketError },
}

/// Appends encoded packets to a byte sink.
#[derive(Debug)]
pub struct FrameWriter<W: Write> {
    inner: W,
    buf: Vec<u8>,
    frames: u64,
}

impl<W: Write> FrameWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, buf: Vec::new(), frames: 0 }
    }

    pub fn write(&mut self, packet: &FramePacket) -> io::Result<()> {
        self.buf.clear();
        packet.encode_into(&mut self.buf);
        self.inner.write_all(&self.buf)?;
        self.frames += 1;
        Ok(())
    }

    pub fn frames_written(&self) -> u64 {
        self.frames
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// Iterates packets from a byte source. Stops after the first error.
#[derive(Debug)]
pub struct FrameReader<R: Read> {
    inner: R,
    frames: u64,
    offset: u64,
    done: bool,
}

impl<R: Read> FrameReader<R> {
    pub fn new(inner: R) -> Self {
        Self { inner, frames: 0, offset: 0, done: false }
    }

    /// Fills `buf` as far as possible, returning the bytes read.
    fn fill(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let mut got = 0;
        while got < buf.len() {
            match self.inner.read(&mut buf[got..]) {
                Ok(0) => break,
                Ok(n) => got += n,
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => return Err(e),
            }
        }
        Ok(got)
    }

    fn read_one(&mut self) -> Result<Option<FramePacket>, FrameFileError> {
        let truncated = |s: &Self| FrameFileError::Truncated { complete_frames: s.frames, offset: s.offset };
        let mut buf = vec![0u8; PREFIX_LEN];
        let got = self.fill(&mut buf)?;
        if got == 0 {
            return Ok(None);
        }
        if got < PREFIX_LEN {
            return Err(truncated(self));
        }
        let total = match packet_len(&buf) {
            Ok(n) => n,
            Err(PacketError::Truncated { needed, .. }) => needed,
            Err(source) => return Err(FrameFileError::Corrupt { frame: self.frames, source }),
        };
        buf.resize(total, 0);
        let got = self.fill(&mut buf[PREFIX_LEN..])?;
        if got < total - PREFIX_LEN {
            return Err(truncated(self));
        }
        let packet =
            FramePacket::decode(&buf).map_err(|source| FrameFileError::Corrupt { frame: self.frames, source })?;
        self.frames += 1;
        self.offset += total as u64;
        Ok(Some(packet))
    }
}

impl<R: Read> Iterator for FrameReader<R> {
    type Item = Result<FramePacket, FrameFileError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.read_one().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

/// Writes `packets` to `path`, replacing any existing file. Returns the count.
pub fn write_frames<'a>(path: impl AsRef<Path>, packets: impl IntoIterator<Item = &'a FramePacket>) -> io::Result<u64> {
    let mut w = FrameWriter::new(BufWriter::new(File::create(path)?));
    for p in packets {
        w.write(p)?;
    }
    let n = w.frames_written();
    w.finish()?;
    Ok(n)
}

/// Reads every packet from `path`. Use [`FrameReader`] to keep the whole
/// frames that precede a truncation.
pub fn read_frames(path: impl AsRef<Path>) -> Result<Vec<FramePacket>, FrameFileError> {
    FrameReader::new(BufReader::new(File::open(path)?)).collect()
}
