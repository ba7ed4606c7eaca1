//! Synchronous baselines: voxels and dense frame patches.
//!
//! Both bin time into fixed windows anchored at `t = 0`. A window's tokens are
//! stamped with the window end, the earliest moment the bin is complete.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::event::{Event, EventStream, PatchGrid};
use crate::token::{Token, TokenSource, TokenStream};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid baseline config: {field}: {reason}")]
pub struct BaselineError {
    pub field: &'static str,
    pub reason: &'static str,
}

fn check(cond: bool, field: &'static str, reason: &'static str) -> Result<(), BaselineError> {
    if cond {
        Ok(())
    } else {
        Err(BaselineError { field, reason })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VoxelConfig {
    pub patch_size: u16,
    pub duration_us: u64,
    /// Voxels with fewer events are dropped.
    pub min_events: usize,
}

impl Default for VoxelConfig {
    fn default() -> Self {
        VoxelConfig {
            patch_size: 16,
            duration_us: 50_000,
            min_events: 1,
        }
    }
}

impl VoxelConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        check(self.patch_size >= 1, "patch_size", "must be at least 1")?;
        check(self.duration_us >= 1, "duration_us", "must be at least 1")?;
        check(self.min_events >= 1, "min_events", "must be at least 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub patch_size: u16,
    pub duration_us: u64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        FrameConfig {
            patch_size: 16,
            duration_us: 50_000,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        check(self.patch_size >= 1, "patch_size", "must be at least 1")?;
        check(self.duration_us >= 1, "duration_us", "must be at least 1")
    }
}

/// Reusable per-patch buckets for one time bin.
struct BinBuffer {
    grid: PatchGrid,
    buckets: Vec<Vec<Event>>,
    touched: Vec<usize>,
}

impl BinBuffer {
    fn new(grid: PatchGrid) -> Self {
        BinBuffer {
            grid,
            buckets: vec![Vec::new(); grid.len()],
            touched: Vec::new(),
        }
    }

    fn push(&mut self, event: Event) {
        let index = self.grid.index_of(event.x, event.y);
        let bucket = &mut self.buckets[index];
        if bucket.is_empty() {
            self.touched.push(index);
        }
        bucket.push(event);
    }

    /// Emits touched patches in row-major order and clears the bin.
    fn flush_sparse(&mut self, t_end: u64, min_events: usize, out: &mut Vec<Token>) {
        self.touched.sort_unstable();
        for &index in &self.touched {
            let events = std::mem::take(&mut self.buckets[index]);
            if events.len() >= min_events {
                let (patch_x, patch_y) = self.grid.coords(index);
                out.push(Token {
                    patch_x,
                    patch_y,
                    t_spike: t_end,
                    events,
                });
            }
        }
        self.touched.clear();
    }

    /// Emits every patch, empty or not, in row-major order.
    fn flush_dense(&mut self, t_end: u64, out: &mut Vec<Token>) {
        for (index, bucket) in self.buckets.iter_mut().enumerate() {
            let (patch_x, patch_y) = self.grid.coords(index);
            out.push(Token {
                patch_x,
                patch_y,
                t_spike: t_end,
                events: std::mem::take(bucket),
            });
        }
        self.touched.clear();
    }
}

/// Groups events into `P x P x D` voxels; voxel `k` is stamped `(k + 1) * D`.
pub fn voxelize(stream: &EventStream, cfg: &VoxelConfig) -> Result<TokenStream, BaselineError> {
    cfg.validate()?;
    let grid = PatchGrid::new(stream.geometry(), cfg.patch_size)
        .expect("validated config has a non-zero patch size");
    let mut buffer = BinBuffer::new(grid);
    let mut tokens = Vec::new();
    let mut current_bin = None;
    for &event in stream.events() {
        let bin = event.t / cfg.duration_us;
        if current_bin != Some(bin) {
            if let Some(done) = current_bin {
                buffer.flush_sparse((done + 1) * cfg.duration_us, cfg.min_events, &mut tokens);
            }
            current_bin = Some(bin);
        }
        buffer.push(event);
    }
    if let Some(done) = current_bin {
        buffer.flush_sparse((done + 1) * cfg.duration_us, cfg.min_events, &mut tokens);
    }
    Ok(TokenStream::new(
        stream.geometry(),
        TokenSource::Voxel(*cfg),
        stream.len(),
        stream.span(),
        tokens,
    ))
}

/// Dense patch tokens for every window up to the one holding the last event.
pub fn frame_patches(stream: &EventStream, cfg: &FrameConfig) -> Result<TokenStream, BaselineError> {
    cfg.validate()?;
    let windows = stream.span().map_or(0, |(_, last)| last / cfg.duration_us + 1);
    frame_patches_for_windows(stream, cfg, windows)
}

/// Dense patch tokens for exactly `windows` windows starting at `t = 0`.
/// Events at or after `windows * D` are not represented.
pub fn frame_patches_for_windows(
    stream: &EventStream,
    cfg: &FrameConfig,
    windows: u64,
) -> Result<TokenStream, BaselineError> {
    cfg.validate()?;
    let grid = PatchGrid::new(stream.geometry(), cfg.patch_size)
        .expect("validated config has a non-zero patch size");
    let mut buffer = BinBuffer::new(grid);
    let mut tokens = Vec::with_capacity(grid.len() * windows as usize);
    let mut events = stream.events().iter().peekable();
    for k in 0..windows {
        let end = (k + 1) * cfg.duration_us;
        while let Some(event) = events.next_if(|e| e.t < end) {
            buffer.push(*event);
        }
        buffer.flush_dense(end, &mut tokens);
    }
    Ok(TokenStream::new(
        stream.geometry(),
        TokenSource::Frame(*cfg),
        stream.len(),
        stream.span(),
        tokens,
    ))
}
