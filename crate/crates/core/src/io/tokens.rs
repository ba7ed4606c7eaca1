//! Token files: JSON lines. The first line is a header describing the sensor,
//! the tokenizer and the tokenized input; each following line is one token
//! with `patch_x`, `patch_y`, `t_spike_us`, `n_events` and, optionally, its
//! member events as `[t, x, y, p]` arrays.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IoError;
use crate::event::{Event, SensorGeometry};
use crate::token::{Token, TokenSource, TokenStream, TokenSummary};

pub const TOKEN_FORMAT: &str = "spiking-patches/tokens";
pub const TOKEN_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenFileHeader {
    pub format: String,
    pub version: u32,
    pub width: u16,
    pub height: u16,
    pub patch_size: u16,
    pub source: TokenSource,
    pub input_events: usize,
    pub input_span_us: Option<(u64, u64)>,
    pub tokens: usize,
    pub with_events: bool,
}

impl TokenFileHeader {
    pub fn geometry(&self) -> Result<SensorGeometry, IoError> {
        Ok(SensorGeometry::new(self.width, self.height)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct EventTuple(u64, u16, u16, i8);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenRecord {
    pub patch_x: u16,
    pub patch_y: u16,
    pub t_spike_us: u64,
    pub n_events: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    events: Option<Vec<EventTuple>>,
}

impl TokenRecord {
    /// The full token, when member events were written.
    pub fn to_token(&self) -> Option<Token> {
        let events = self.events.as_ref()?;
        Some(Token {
            patch_x: self.patch_x,
            patch_y: self.patch_y,
            t_spike: self.t_spike_us,
            events: events.iter().map(|e| Event::new(e.1, e.2, e.0, e.3)).collect(),
        })
    }
}

impl TokenSummary for TokenRecord {
    fn patch(&self) -> (u16, u16) {
        (self.patch_x, self.patch_y)
    }

    fn t_spike(&self) -> u64 {
        self.t_spike_us
    }

    fn event_count(&self) -> usize {
        self.n_events
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenFile {
    pub header: TokenFileHeader,
    pub records: Vec<TokenRecord>,
}

impl TokenFile {
    /// Full tokens; `None` if the file was written without member events.
    pub fn tokens(&self) -> Option<Vec<Token>> {
        self.records.iter().map(TokenRecord::to_token).collect()
    }
}

pub fn write_tokens_to<W: Write>(
    stream: &TokenStream,
    with_events: bool,
    out: &mut W,
) -> Result<(), IoError> {
    let geometry = stream.geometry();
    let header = TokenFileHeader {
        format: TOKEN_FORMAT.to_owned(),
        version: TOKEN_FORMAT_VERSION,
        width: geometry.width(),
        height: geometry.height(),
        patch_size: stream.patch_size(),
        source: stream.source().clone(),
        input_events: stream.input_events(),
        input_span_us: stream.input_span(),
        tokens: stream.len(),
        with_events,
    };
    serde_json::to_writer(&mut *out, &header).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for token in stream.tokens() {
        let record = TokenRecord {
            patch_x: token.patch_x,
            patch_y: token.patch_y,
            t_spike_us: token.t_spike,
            n_events: token.events.len(),
            events: with_events
                .then(|| token.events.iter().map(|e| EventTuple(e.t, e.x, e.y, e.p)).collect()),
        };
        serde_json::to_writer(&mut *out, &record).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_tokens(stream: &TokenStream, with_events: bool, path: impl AsRef<Path>) -> Result<(), IoError> {
    let mut out = BufWriter::new(File::create(path)?);
    write_tokens_to(stream, with_events, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn read_tokens_from<R: Read>(input: R) -> Result<TokenFile, IoError> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines();
    let parse_error = |line: u64, e: serde_json::Error| IoError::ParseErrorAt {
        line,
        reason: e.to_string(),
    };

    let first = lines.next().ok_or(IoError::ParseErrorAt {
        line: 1,
        reason: "missing header".into(),
    })??;
    let header: TokenFileHeader = serde_json::from_str(&first).map_err(|e| parse_error(1, e))?;
    if header.format != TOKEN_FORMAT || header.version != TOKEN_FORMAT_VERSION {
        return Err(IoError::ParseErrorAt {
            line: 1,
            reason: format!("unsupported token format {} v{}", header.format, header.version),
        });
    }

    let mut records = Vec::with_capacity(header.tokens);
    for (i, line) in lines.enumerate() {
        let line_no = i as u64 + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: TokenRecord = serde_json::from_str(&line).map_err(|e| parse_error(line_no, e))?;
        if record.events.as_ref().is_some_and(|e| e.len() != record.n_events) {
            return Err(IoError::ParseErrorAt {
                line: line_no,
                reason: "n_events does not match the member list".into(),
            });
        }
        records.push(record);
    }
    if records.len() != header.tokens {
        return Err(IoError::ParseErrorAt {
            line: records.len() as u64 + 2,
            reason: format!("header declares {} tokens, found {}", header.tokens, records.len()),
        });
    }
    Ok(TokenFile { header, records })
}

pub fn read_tokens(path: impl AsRef<Path>) -> Result<TokenFile, IoError> {
    read_tokens_from(File::open(path)?)
}
