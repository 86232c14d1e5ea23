//! Binary snapshots of a slope field and, optionally, its random streams.
//!
//! Layout, little-endian: magic `OCTSCA01`; `u32 X, u32 Y, u32 w, u64 t_mcs,
//! u8 phase, u8 convention` (1 = bit 1 is slope +1); the four planes in
//! storage order, each row-major. Optional tagged blocks follow:
//! `STREAMS1` with `u64 master_seed, u32 n`, then per stream the 8×4 lane
//! states, the 8 buffered words, `u8 cursor` and `u64 position`; and
//! `METADATA` with `u32 length` and that many bytes of UTF-8 text.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::lattice::{LatticeConfig, LatticeError, Parity, SlopeField};
use crate::rng::{RandomStream, RngError, RngStreamSet, StreamState, LANES};
use crate::word::Word;

pub const MAGIC: &[u8; 8] = b"OCTSCA01";
pub const STREAM_MAGIC: &[u8; 8] = b"STREAMS1";
pub const METADATA_MAGIC: &[u8; 8] = b"METADATA";
pub const BIT_CONVENTION_PLUS_ONE: u8 = 1;

const HEADER_LEN: usize = 8 + 4 + 4 + 4 + 8 + 1 + 1;
const STREAM_LEN: usize = LANES * 4 * 8 + LANES * 8 + 1 + 8;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot: bad magic")]
    Magic,
    #[error("snapshot truncated: needed {needed} bytes at offset {offset}, {available} available")]
    Truncated { offset: usize, needed: usize, available: usize },
    #[error("unsupported bit convention flag {0}")]
    Convention(u8),
    #[error("invalid phase byte {0}")]
    Phase(u8),
    #[error("{0} trailing bytes do not form a block")]
    Trailing(usize),
    #[error("unknown block tag {0:?}")]
    BlockTag([u8; 8]),
    #[error("duplicate block {0:?}")]
    DuplicateBlock([u8; 8]),
    #[error("metadata block is not valid UTF-8")]
    MetadataText,
    #[error("stream block holds {found} streams but the lattice has {rows} rows")]
    StreamRows { found: usize, rows: usize },
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Rng(#[from] RngError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A field of either supported word size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnyField {
    W32(SlopeField<u32>),
    W64(SlopeField<u64>),
}

impl AnyField {
    pub fn config(&self) -> &LatticeConfig {
        match self {
            AnyField::W32(f) => f.config(),
            AnyField::W64(f) => f.config(),
        }
    }

    pub fn t_mcs(&self) -> u64 {
        match self {
            AnyField::W32(f) => f.t_mcs(),
            AnyField::W64(f) => f.t_mcs(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Snapshot {
    pub field: AnyField,
    pub streams: Option<RngStreamSet>,
    pub metadata: Option<String>,
}

pub fn encode<W: Word>(field: &SlopeField<W>, streams: Option<&RngStreamSet>) -> Vec<u8> {
    encode_with_metadata(field, streams, None)
}

pub fn encode_with_metadata<W: Word>(
    field: &SlopeField<W>,
    streams: Option<&RngStreamSet>,
    metadata: Option<&str>,
) -> Vec<u8> {
    let c = field.config();
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * c.words_per_plane() * W::BITS as usize / 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(c.x() as u32).to_le_bytes());
    out.extend_from_slice(&(c.y() as u32).to_le_bytes());
    out.extend_from_slice(&c.w().to_le_bytes());
    out.extend_from_slice(&field.t_mcs().to_le_bytes());
    out.push(field.phase().bit() as u8);
    out.push(BIT_CONVENTION_PLUS_ONE);
    for plane in field.planes() {
        for &word in plane {
            word.write_le(&mut out);
        }
    }
    if let Some(set) = streams {
        out.extend_from_slice(STREAM_MAGIC);
        out.extend_from_slice(&set.master_seed().to_le_bytes());
        out.extend_from_slice(&(set.len() as u32).to_le_bytes());
        for s in set.streams() {
            let st = s.state();
            for lane in &st.lanes {
                for v in lane {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
            for v in &st.buffer {
                out.extend_from_slice(&v.to_le_bytes());
            }
            out.push(st.cursor);
            out.extend_from_slice(&st.position.to_le_bytes());
        }
    }
    if let Some(text) = metadata {
        out.extend_from_slice(METADATA_MAGIC);
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(SnapshotError::Truncated { offset: self.pos, needed: n, available });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

fn read_field<W: Word>(
    r: &mut Reader<'_>,
    config: LatticeConfig,
    t_mcs: u64,
    phase: Parity,
) -> Result<SlopeField<W>, SnapshotError> {
    let n = config.words_per_plane();
    let size = W::BITS as usize / 8;
    let mut planes: [Vec<W>; 4] = Default::default();
    for plane in planes.iter_mut() {
        let bytes = r.take(n * size)?;
        *plane = bytes.chunks_exact(size).map(W::read_le).collect();
    }
    Ok(SlopeField::from_planes(config, planes, t_mcs, phase)?)
}

pub fn decode(bytes: &[u8]) -> Result<Snapshot, SnapshotError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8).map_err(|_| SnapshotError::Magic)? != MAGIC {
        return Err(SnapshotError::Magic);
    }
    let x = r.u32()? as usize;
    let y = r.u32()? as usize;
    let w = r.u32()?;
    let t_mcs = r.u64()?;
    let phase = match r.u8()? {
        b @ (0 | 1) => Parity::from_bit(b),
        b => return Err(SnapshotError::Phase(b)),
    };
    let convention = r.u8()?;
    if convention != BIT_CONVENTION_PLUS_ONE {
        return Err(SnapshotError::Convention(convention));
    }
    let config = LatticeConfig::new(x, y, w)?;
    let field = if w == 32 {
        AnyField::W32(read_field(&mut r, config, t_mcs, phase)?)
    } else {
        AnyField::W64(read_field(&mut r, config, t_mcs, phase)?)
    };
    let mut streams = None;
    let mut metadata = None;
    while r.remaining() > 0 {
        if r.remaining() < 12 {
            return Err(SnapshotError::Trailing(r.remaining()));
        }
        let tag: [u8; 8] = r.take(8)?.try_into().expect("8 bytes");
        match &tag {
            t if t == STREAM_MAGIC => {
                if streams.is_some() {
                    return Err(SnapshotError::DuplicateBlock(tag));
                }
                streams = Some(read_streams(&mut r, y)?);
            }
            t if t == METADATA_MAGIC => {
                if metadata.is_some() {
                    return Err(SnapshotError::DuplicateBlock(tag));
                }
                let len = r.u32()? as usize;
                let text = std::str::from_utf8(r.take(len)?).map_err(|_| SnapshotError::MetadataText)?;
                metadata = Some(text.to_string());
            }
            _ => return Err(SnapshotError::BlockTag(tag)),
        }
    }
    Ok(Snapshot { field, streams, metadata })
}

fn read_streams(r: &mut Reader<'_>, rows: usize) -> Result<RngStreamSet, SnapshotError> {
    let seed = r.u64()?;
    let count = r.u32()? as usize;
    if count != rows {
        return Err(SnapshotError::StreamRows { found: count, rows });
    }
    if r.remaining() < count * STREAM_LEN {
        return Err(SnapshotError::Truncated {
            offset: r.pos,
            needed: count * STREAM_LEN,
            available: r.remaining(),
        });
    }
    let mut streams = Vec::with_capacity(count);
    for _ in 0..count {
        let mut state =
            StreamState { lanes: [[0; 4]; LANES], buffer: [0; LANES], cursor: 0, position: 0 };
        for lane in state.lanes.iter_mut() {
            for v in lane.iter_mut() {
                *v = r.u64()?;
            }
        }
        for v in state.buffer.iter_mut() {
            *v = r.u64()?;
        }
        state.cursor = r.u8()?;
        state.position = r.u64()?;
        streams.push(RandomStream::from_state(&state));
    }
    Ok(RngStreamSet::from_streams(seed, streams)?)
}

pub fn write_snapshot<W: Word, O: Write>(
    out: &mut O,
    field: &SlopeField<W>,
    streams: Option<&RngStreamSet>,
    metadata: Option<&str>,
) -> io::Result<()> {
    out.write_all(&encode_with_metadata(field, streams, metadata))
}

pub fn read_snapshot<I: Read>(input: &mut I) -> Result<Snapshot, SnapshotError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode(&bytes)
}
