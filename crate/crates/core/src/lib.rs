//! Event-camera tokenization with spiking patches.
//!
//! Events from a sensor are grouped per `P x P` patch by integrate-and-fire
//! neurons; each spike yields a token. Voxel and frame tokenizers are
//! provided for comparison, along with stacked-histogram embeddings, stream
//! analyses, file formats and a command-line front end.

pub mod analysis;
pub mod baseline;
pub mod cli;
pub mod embedding;
pub mod event;
pub mod io;
pub mod spiking;
pub mod token;

pub use baseline::{frame_patches, voxelize, FrameConfig, VoxelConfig};
pub use event::{validate_stream, Event, EventStream, PatchGrid, SensorGeometry, StreamError};
pub use spiking::{tokenize_stream, tokenize_stream_sharded, SpikingTokenizer, TokenizerConfig, Variant};
pub use token::{Token, TokenSource, TokenStream, TokenSummary};
