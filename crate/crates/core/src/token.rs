//! Tokens and token streams shared by every tokenizer.

use serde::{Deserialize, Serialize};

use crate::baseline::{FrameConfig, VoxelConfig};
use crate::event::{window_slice, Event, SensorGeometry, StreamError, Timestamped};
use crate::spiking::TokenizerConfig;

/// A group of events from one patch, stamped with a spatio-temporal position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub patch_x: u16,
    pub patch_y: u16,
    pub t_spike: u64,
    /// Member events in arrival order.
    pub events: Vec<Event>,
}

impl Token {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    #[inline]
    pub(crate) fn sort_key(&self) -> (u64, u16, u16) {
        (self.t_spike, self.patch_y, self.patch_x)
    }
}

impl Timestamped for Token {
    #[inline]
    fn timestamp(&self) -> u64 {
        self.t_spike
    }
}

/// The minimal view of a token the analyses need. Implemented by [`Token`]
/// and by token records read back from disk without their member events.
pub trait TokenSummary {
    fn patch(&self) -> (u16, u16);
    fn t_spike(&self) -> u64;
    fn event_count(&self) -> usize;
}

impl TokenSummary for Token {
    fn patch(&self) -> (u16, u16) {
        (self.patch_x, self.patch_y)
    }

    fn t_spike(&self) -> u64 {
        self.t_spike
    }

    fn event_count(&self) -> usize {
        self.events.len()
    }
}

/// Which tokenizer produced a stream, with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tokenizer", rename_all = "snake_case")]
pub enum TokenSource {
    Spiking(TokenizerConfig),
    Voxel(VoxelConfig),
    Frame(FrameConfig),
}

impl TokenSource {
    pub fn patch_size(&self) -> u16 {
        match self {
            TokenSource::Spiking(c) => c.patch_size,
            TokenSource::Voxel(c) => c.patch_size,
            TokenSource::Frame(c) => c.patch_size,
        }
    }
}

/// Tokens ordered by `(t_spike, patch_y, patch_x)`, ties in emission order.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenStream {
    geometry: SensorGeometry,
    source: TokenSource,
    input_events: usize,
    input_span: Option<(u64, u64)>,
    tokens: Vec<Token>,
}

impl TokenStream {
    /// Builds a stream and brings the tokens into canonical order.
    pub fn new(
        geometry: SensorGeometry,
        source: TokenSource,
        input_events: usize,
        input_span: Option<(u64, u64)>,
        mut tokens: Vec<Token>,
    ) -> Self {
        tokens.sort_by_key(Token::sort_key);
        TokenStream {
            geometry,
            source,
            input_events,
            input_span,
            tokens,
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn source(&self) -> &TokenSource {
        &self.source
    }

    pub fn patch_size(&self) -> u16 {
        self.source.patch_size()
    }

    /// Number of events in the stream that was tokenized.
    pub fn input_events(&self) -> usize {
        self.input_events
    }

    /// First and last timestamp of the stream that was tokenized.
    pub fn input_span(&self) -> Option<(u64, u64)> {
        self.input_span
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn into_tokens(self) -> Vec<Token> {
        self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Total number of member events across all tokens.
    pub fn member_events(&self) -> usize {
        self.tokens.iter().map(Token::len).sum()
    }

    /// Tokens that spike in `[t0, t1)`. Members keep their original
    /// timestamps, which may predate `t0`.
    pub fn window(&self, t0: u64, t1: u64) -> Result<TokenStream, StreamError> {
        Ok(TokenStream {
            geometry: self.geometry,
            source: self.source.clone(),
            input_events: self.input_events,
            input_span: self.input_span,
            tokens: window_slice(&self.tokens, t0, t1)?.to_vec(),
        })
    }
}
