//! Measurements over event and token streams: spatial sparsity, event
//! accumulation and delay, input size, and tokenization throughput.

mod accumulation;
mod bench;
mod sparsity;

pub use accumulation::{delay_estimate, AccumulationCurve};
pub use bench::{bench_throughput, bench_voxelize, BenchReport};
pub use sparsity::{
    event_sparsity, event_sparsity_over, token_sparsity, token_sparsity_over, CellKind,
    SparsityReport, SparsitySeries, WindowSparsity,
};

use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::baseline::BaselineError;
use crate::event::Timestamped;
use crate::spiking::TokenizeError;
use crate::token::TokenSummary;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("window width must be at least 1 us")]
    ZeroWindow,
    #[error("patch size must be at least 1")]
    ZeroPatchSize,
    #[error("input has no timestamps to tile")]
    EmptyTimeRange,
    #[error("benchmark input is empty")]
    EmptyStream,
    #[error("benchmark needs at least one repeat")]
    ZeroRepeats,
    #[error("curve has no breakpoints")]
    EmptyCurve,
    #[error("token curve holds {tokens} events but the event curve only {events}")]
    MismatchedStreams { tokens: u64, events: u64 },
    #[error("token patch ({0}, {1}) lies outside the patch grid")]
    PatchOutOfGrid(u16, u16),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Consecutive half-open windows `[start + k * width, start + (k + 1) * width)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TimeWindows {
    pub start: u64,
    pub width: u64,
    pub count: usize,
}

impl TimeWindows {
    pub fn new(start: u64, width: u64, count: usize) -> Result<Self, AnalysisError> {
        if width == 0 {
            return Err(AnalysisError::ZeroWindow);
        }
        Ok(TimeWindows { start, width, count })
    }

    /// Windows tiling `[first, last]` from `first`; the last one may extend past `last`.
    pub fn covering(first: u64, last: u64, width: u64) -> Result<Self, AnalysisError> {
        if width == 0 {
            return Err(AnalysisError::ZeroWindow);
        }
        if last < first {
            return Err(AnalysisError::EmptyTimeRange);
        }
        let count = ((last - first) / width + 1) as usize;
        Ok(TimeWindows {
            start: first,
            width,
            count,
        })
    }

    /// Windows tiling the timestamps of a sorted slice.
    pub fn spanning<T: Timestamped>(items: &[T], width: u64) -> Result<Self, AnalysisError> {
        match (items.first(), items.last()) {
            (Some(first), Some(last)) => Self::covering(first.timestamp(), last.timestamp(), width),
            _ if width == 0 => Err(AnalysisError::ZeroWindow),
            _ => Err(AnalysisError::EmptyTimeRange),
        }
    }

    pub fn end(&self) -> u64 {
        self.start + self.width * self.count as u64
    }

    pub fn bounds(&self, k: usize) -> (u64, u64) {
        let t0 = self.start + self.width * k as u64;
        (t0, t0 + self.width)
    }

    #[inline]
    pub fn index_of(&self, t: u64) -> Option<usize> {
        if t < self.start || t >= self.end() {
            return None;
        }
        Some(((t - self.start) / self.width) as usize)
    }
}

/// Mean number of tokens per window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CountStats {
    pub windows: usize,
    pub tokens: usize,
    pub mean_per_window: f64,
}

/// Mean tokens per window over windows tiling the tokens' own span.
pub fn token_count_stats<T: TokenSummary>(
    tokens: &[T],
    window_us: u64,
) -> Result<CountStats, AnalysisError> {
    let first = tokens.first().ok_or(AnalysisError::EmptyTimeRange)?;
    let last = tokens.last().ok_or(AnalysisError::EmptyTimeRange)?;
    let windows = TimeWindows::covering(first.t_spike(), last.t_spike(), window_us)?;
    token_count_stats_over(tokens, &windows)
}

/// Mean tokens per window over the given windows; tokens outside are ignored.
pub fn token_count_stats_over<T: TokenSummary>(
    tokens: &[T],
    windows: &TimeWindows,
) -> Result<CountStats, AnalysisError> {
    if windows.count == 0 {
        return Err(AnalysisError::EmptyTimeRange);
    }
    let inside = tokens
        .iter()
        .filter(|t| windows.index_of(t.t_spike()).is_some())
        .count();
    Ok(CountStats {
        windows: windows.count,
        tokens: inside,
        mean_per_window: inside as f64 / windows.count as f64,
    })
}

/// Line-oriented `key=value` rendering of a report.
pub trait KeyValueReport {
    fn key_values(&self) -> Vec<(&'static str, String)>;

    fn write_key_values<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        for (key, value) in self.key_values() {
            writeln!(out, "{key}={value}")?;
        }
        Ok(())
    }
}

impl KeyValueReport for CountStats {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("windows", self.windows.to_string()),
            ("tokens", self.tokens.to_string()),
            ("mean_tokens_per_window", format!("{:.6}", self.mean_per_window)),
        ]
    }
}

/// Writes one JSON object per line.
pub fn write_json_lines<T: Serialize, W: Write>(records: &[T], out: &mut W) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut *out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
