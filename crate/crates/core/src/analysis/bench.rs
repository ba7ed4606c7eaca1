use std::time::{Duration, Instant};

use serde::Serialize;

use super::{AnalysisError, KeyValueReport};
use crate::baseline::{voxelize, VoxelConfig};
use crate::event::EventStream;
use crate::spiking::{tokenize_stream, TokenizerConfig};
use crate::token::TokenStream;

/// Single-threaded tokenization throughput, best of several repeats.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub events: usize,
    pub tokens: usize,
    pub repeats: usize,
    /// Fastest wall time over the repeats, in seconds.
    pub wall_seconds: f64,
    pub events_per_second: f64,
    /// Every repeat produced the same token stream.
    pub deterministic: bool,
}

impl KeyValueReport for BenchReport {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("events", self.events.to_string()),
            ("tokens", self.tokens.to_string()),
            ("repeats", self.repeats.to_string()),
            ("deterministic", self.deterministic.to_string()),
            ("wall_seconds", format!("{:.6}", self.wall_seconds)),
            ("events_per_second", format!("{:.0}", self.events_per_second)),
        ]
    }
}

fn run<F>(stream: &EventStream, repeats: usize, mut tokenize: F) -> Result<BenchReport, AnalysisError>
where
    F: FnMut(&EventStream) -> Result<TokenStream, AnalysisError>,
{
    if stream.is_empty() {
        return Err(AnalysisError::EmptyStream);
    }
    if repeats == 0 {
        return Err(AnalysisError::ZeroRepeats);
    }
    let mut best = Duration::MAX;
    let mut reference: Option<TokenStream> = None;
    let mut deterministic = true;
    for _ in 0..repeats {
        let start = Instant::now();
        let tokens = std::hint::black_box(tokenize(stream)?);
        best = best.min(start.elapsed());
        match &reference {
            Some(first) => deterministic &= *first == tokens,
            None => reference = Some(tokens),
        }
    }
    let wall_seconds = best.as_secs_f64().max(f64::MIN_POSITIVE);
    Ok(BenchReport {
        events: stream.len(),
        tokens: reference.map_or(0, |t| t.len()),
        repeats,
        wall_seconds,
        events_per_second: stream.len() as f64 / wall_seconds,
        deterministic,
    })
}

/// Times [`tokenize_stream`] on one thread.
pub fn bench_throughput(
    stream: &EventStream,
    config: &TokenizerConfig,
    repeats: usize,
) -> Result<BenchReport, AnalysisError> {
    config.validate().map_err(crate::spiking::TokenizeError::from)?;
    run(stream, repeats, |s| Ok(tokenize_stream(config, s)?))
}

/// Times [`voxelize`] on one thread.
pub fn bench_voxelize(
    stream: &EventStream,
    config: &VoxelConfig,
    repeats: usize,
) -> Result<BenchReport, AnalysisError> {
    config.validate()?;
    run(stream, repeats, |s| Ok(voxelize(s, config)?))
}
