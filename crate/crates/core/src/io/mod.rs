//! Event and token file formats, plus deterministic synthetic streams.

mod evs;
mod synth;
mod text;
mod tokens;

pub use evs::{read_evs, read_evs_from, write_evs, write_evs_to, EVS_HEADER_LEN, EVS_MAGIC, EVS_RECORD_LEN, EVS_VERSION};
pub use synth::{generate_moving_bar, generate_patch_activity, MovingBarSpec, PatchActivitySpec};
pub use text::{read_csv, read_csv_from, write_csv, write_csv_to};
pub use tokens::{read_tokens, read_tokens_from, write_tokens, write_tokens_to, TokenFile, TokenFileHeader, TokenRecord};

use thiserror::Error;

use crate::event::StreamError;

#[derive(Debug, Error)]
pub enum IoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not an event file: magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("unsupported event file version {0}")]
    UnsupportedVersion(u16),
    #[error("file truncated at byte offset {offset}")]
    TruncatedFile { offset: u64 },
    #[error("unexpected bytes after the last record at byte offset {offset}")]
    TrailingBytes { offset: u64 },
    #[error("line {line}: {reason}")]
    ParseErrorAt { line: u64, reason: String },
    #[error("invalid generator spec: {0}")]
    SpecOutOfBounds(String),
    #[error(transparent)]
    Stream(#[from] StreamError),
}
