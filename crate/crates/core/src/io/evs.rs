//! The `.evs` event file.
//!
//! Little-endian throughout. A 20-byte header:
//!
//! | offset | size | field                 |
//! |--------|------|-----------------------|
//! | 0      | 4    | magic `EVS1`          |
//! | 4      | 2    | version (1)           |
//! | 6      | 2    | width                 |
//! | 8      | 2    | height                |
//! | 10     | 2    | reserved (0)          |
//! | 12     | 8    | event count           |
//!
//! followed by `count` fixed 13-byte records: `t: u64` (µs), `x: u16`,
//! `y: u16`, `p: u8` with `0 = -1` and `1 = +1`.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use super::IoError;
use crate::event::{validate_stream, Event, EventStream, SensorGeometry, StreamError};

pub const EVS_MAGIC: [u8; 4] = *b"EVS1";
pub const EVS_VERSION: u16 = 1;
pub const EVS_HEADER_LEN: usize = 20;
pub const EVS_RECORD_LEN: usize = 13;

pub fn write_evs_to<W: Write>(stream: &EventStream, out: &mut W) -> Result<(), IoError> {
    let geometry = stream.geometry();
    let mut header = Vec::with_capacity(EVS_HEADER_LEN);
    header.extend_from_slice(&EVS_MAGIC);
    header.extend_from_slice(&EVS_VERSION.to_le_bytes());
    header.extend_from_slice(&geometry.width().to_le_bytes());
    header.extend_from_slice(&geometry.height().to_le_bytes());
    header.extend_from_slice(&0u16.to_le_bytes());
    header.extend_from_slice(&(stream.len() as u64).to_le_bytes());
    out.write_all(&header)?;

    let mut record = [0u8; EVS_RECORD_LEN];
    for e in stream.events() {
        record[0..8].copy_from_slice(&e.t.to_le_bytes());
        record[8..10].copy_from_slice(&e.x.to_le_bytes());
        record[10..12].copy_from_slice(&e.y.to_le_bytes());
        record[12] = u8::from(e.p > 0);
        out.write_all(&record)?;
    }
    Ok(())
}

pub fn write_evs(stream: &EventStream, path: impl AsRef<Path>) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_evs_to(stream, &mut out)?;
    out.flush()?;
    Ok(())
}

/// Reads and validates a whole `.evs` stream.
pub fn read_evs_from<R: Read>(input: &mut R) -> Result<EventStream, IoError> {
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    decode(&bytes)
}

pub fn read_evs(path: impl AsRef<Path>) -> Result<EventStream, IoError> {
    let bytes = std::fs::read(path)?;
    decode(&bytes)
}

fn u16_at(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn decode(bytes: &[u8]) -> Result<EventStream, IoError> {
    if bytes.len() < EVS_HEADER_LEN {
        if bytes.len() >= 4 && bytes[..4] != EVS_MAGIC {
            return Err(IoError::BadMagic(bytes[..4].try_into().expect("four bytes")));
        }
        return Err(IoError::TruncatedFile {
            offset: bytes.len() as u64,
        });
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("four bytes");
    if magic != EVS_MAGIC {
        return Err(IoError::BadMagic(magic));
    }
    let version = u16_at(bytes, 4);
    if version != EVS_VERSION {
        return Err(IoError::UnsupportedVersion(version));
    }
    let geometry = SensorGeometry::new(u16_at(bytes, 6), u16_at(bytes, 8))?;
    let count = u64::from_le_bytes(bytes[12..20].try_into().expect("eight bytes"));

    let body = &bytes[EVS_HEADER_LEN..];
    let present = (body.len() / EVS_RECORD_LEN) as u64;
    if present < count {
        return Err(IoError::TruncatedFile {
            offset: (EVS_HEADER_LEN as u64) + present * EVS_RECORD_LEN as u64,
        });
    }
    let expected_len = count as usize * EVS_RECORD_LEN;
    if body.len() > expected_len {
        return Err(IoError::TrailingBytes {
            offset: (EVS_HEADER_LEN + expected_len) as u64,
        });
    }

    let mut events = Vec::with_capacity(count as usize);
    for (i, record) in body.chunks_exact(EVS_RECORD_LEN).enumerate() {
        let p = match record[12] {
            0 => -1,
            1 => 1,
            _ => return Err(StreamError::BadPolarityAt(i).into()),
        };
        events.push(Event {
            t: u64::from_le_bytes(record[0..8].try_into().expect("eight bytes")),
            x: u16_at(record, 8),
            y: u16_at(record, 10),
            p,
        });
    }
    Ok(validate_stream(events, geometry)?)
}
