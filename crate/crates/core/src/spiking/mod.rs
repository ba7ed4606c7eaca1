//! Spiking-patch tokenizer.
//!
//! The sensor is divided into a grid of `P x P` patches, each acting as an
//! integrate-and-fire neuron. Events raise their patch's potential; when the
//! potential reaches the threshold the patch spikes and emits a token holding
//! every event accepted since its previous spike. A spike starts an absolute
//! refractory period during which the patch discards events, optionally
//! followed by a relative period in which events count with reduced gain.
//!
//! Work per event is constant, so tokenizing `n` events is `O(n)`.

mod config;
mod patch;

pub use config::{ConfigError, TokenizerConfig, Variant};
pub use patch::PatchState;

use serde::Serialize;
use thiserror::Error;

use crate::event::{Event, EventStream, PatchGrid, SensorGeometry};
use crate::token::{Token, TokenSource, TokenStream};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TokenizeError {
    #[error(transparent)]
    InvalidConfig(#[from] ConfigError),
    #[error("event at t={got} arrived after t={previous}")]
    NonMonotonicTime { previous: u64, got: u64 },
    #[error("event at ({x}, {y}) lies outside the sensor")]
    OutOfBounds { x: u16, y: u16 },
    #[error("event polarity {0} is not -1 or +1")]
    BadPolarity(i8),
}

/// Streaming tokenizer over a fixed sensor.
#[derive(Debug, Clone)]
pub struct SpikingTokenizer {
    config: TokenizerConfig,
    geometry: SensorGeometry,
    grid: PatchGrid,
    patches: Vec<PatchState>,
    last_t: Option<u64>,
}

impl SpikingTokenizer {
    pub fn new(config: TokenizerConfig, geometry: SensorGeometry) -> Result<Self, TokenizeError> {
        config.validate()?;
        let grid = PatchGrid::new(geometry, config.patch_size)
            .expect("validated config has a non-zero patch size");
        Ok(SpikingTokenizer {
            config,
            geometry,
            grid,
            patches: vec![PatchState::default(); grid.len()],
            last_t: None,
        })
    }

    pub fn config(&self) -> &TokenizerConfig {
        &self.config
    }

    pub fn grid(&self) -> &PatchGrid {
        &self.grid
    }

    pub fn patch(&self, patch_x: u16, patch_y: u16) -> Option<&PatchState> {
        if usize::from(patch_x) >= self.grid.columns() {
            return None;
        }
        self.patches
            .get(usize::from(patch_y) * self.grid.columns() + usize::from(patch_x))
    }

    /// Feeds one event, returning a token if its patch spikes.
    #[inline]
    pub fn push(&mut self, event: Event) -> Result<Option<Token>, TokenizeError> {
        if !self.geometry.contains(event.x, event.y) {
            return Err(TokenizeError::OutOfBounds {
                x: event.x,
                y: event.y,
            });
        }
        if !event.has_valid_polarity() {
            return Err(TokenizeError::BadPolarity(event.p));
        }
        if let Some(previous) = self.last_t {
            if event.t < previous {
                return Err(TokenizeError::NonMonotonicTime {
                    previous,
                    got: event.t,
                });
            }
        }
        self.last_t = Some(event.t);

        let index = self.grid.index_of(event.x, event.y);
        let members = self.patches[index].integrate(event, &self.config);
        Ok(members.map(|events| {
            let (patch_x, patch_y) = self.grid.coords(index);
            Token {
                patch_x,
                patch_y,
                t_spike: event.t,
                events,
            }
        }))
    }

    /// Pending counts and potentials of every patch. Emits nothing.
    pub fn finalize(&self) -> ResidueReport {
        let patches = self
            .patches
            .iter()
            .enumerate()
            .map(|(i, state)| {
                let (patch_x, patch_y) = self.grid.coords(i);
                PatchResidue {
                    patch_x,
                    patch_y,
                    pending: state.pending().len(),
                    potential: state.potential(),
                }
            })
            .collect();
        ResidueReport { patches }
    }

    /// Returns every patch to rest and forgets the stream clock.
    pub fn reset(&mut self) {
        self.patches.iter_mut().for_each(PatchState::reset);
        self.last_t = None;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PatchResidue {
    pub patch_x: u16,
    pub patch_y: u16,
    pub pending: usize,
    pub potential: f64,
}

/// Per-patch events left without a spike at the end of a stream.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidueReport {
    pub patches: Vec<PatchResidue>,
}

impl ResidueReport {
    pub fn total_pending(&self) -> usize {
        self.patches.iter().map(|p| p.pending).sum()
    }

    pub fn is_idle(&self) -> bool {
        self.patches.iter().all(|p| p.pending == 0 && p.potential == 0.0)
    }
}

/// Tokenizes a whole stream. Events that never reach a spike are dropped.
pub fn tokenize_stream(
    config: &TokenizerConfig,
    stream: &EventStream,
) -> Result<TokenStream, TokenizeError> {
    let mut tokenizer = SpikingTokenizer::new(*config, stream.geometry())?;
    let mut tokens = Vec::with_capacity(stream.len() / (config.threshold.ceil() as usize).max(1));
    for &event in stream.events() {
        if let Some(token) = tokenizer.push(event)? {
            tokens.push(token);
        }
    }
    Ok(TokenStream::new(
        stream.geometry(),
        TokenSource::Spiking(*config),
        stream.len(),
        stream.span(),
        tokens,
    ))
}

/// Tokenizes with patches sharded across `shards` threads. The output is
/// identical to [`tokenize_stream`].
pub fn tokenize_stream_sharded(
    config: &TokenizerConfig,
    stream: &EventStream,
    shards: usize,
) -> Result<TokenStream, TokenizeError> {
    let shards = shards.max(1);
    config.validate()?;
    let grid = PatchGrid::new(stream.geometry(), config.patch_size)
        .expect("validated config has a non-zero patch size");

    let mut partitions: Vec<Vec<Event>> = vec![Vec::with_capacity(stream.len() / shards); shards];
    for &event in stream.events() {
        partitions[grid.index_of(event.x, event.y) % shards].push(event);
    }

    let results: Vec<Result<Vec<Token>, TokenizeError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = partitions
            .iter()
            .map(|events| {
                scope.spawn(move || {
                    let mut tokenizer = SpikingTokenizer::new(*config, stream.geometry())?;
                    let mut tokens = Vec::new();
                    for &event in events {
                        if let Some(token) = tokenizer.push(event)? {
                            tokens.push(token);
                        }
                    }
                    Ok(tokens)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("tokenizer shard panicked"))
            .collect()
    });

    let mut tokens = Vec::new();
    for shard in results {
        tokens.extend(shard?);
    }
    Ok(TokenStream::new(
        stream.geometry(),
        TokenSource::Spiking(*config),
        stream.len(),
        stream.span(),
        tokens,
    ))
}
