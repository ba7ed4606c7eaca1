//! Stacked-histogram token representation.
//!
//! A token becomes a `P x P x B x 2` count tensor: pixel offset within the
//! patch, a logarithmic time bucket measured backwards from the spike, and
//! polarity. The default edges `1, 2, 4, ..., 256` ms give `B = 10` buckets,
//! the last one unbounded. Flattened, channel `2 * bucket + polarity` gives a
//! `P x P x 20` patch.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::token::Token;

/// Upper edges of the first nine time buckets, in microseconds.
pub const DEFAULT_BUCKET_EDGES_US: [u64; 9] =
    [1_000, 2_000, 4_000, 8_000, 16_000, 32_000, 64_000, 128_000, 256_000];

/// Time scales used by the downstream model families.
pub const TIME_SCALE_GNN: f64 = 25_000.0;
pub const TIME_SCALE_PCN: f64 = 10_000.0;
pub const TIME_SCALE_TRANSFORMER: f64 = 50_000.0;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("time delta {0} ms is negative")]
    NegativeDelta(f64),
    #[error("time scale must be positive and finite (got {0})")]
    ZeroScale(f64),
    #[error("event at ({x}, {y}) is outside patch ({patch_x}, {patch_y})")]
    EventOutsidePatch {
        x: u16,
        y: u16,
        patch_x: u16,
        patch_y: u16,
    },
    #[error("event at t={t} is after its token's spike at t={t_spike}")]
    EventAfterSpike { t: u64, t_spike: u64 },
    #[error("bucket edges must be non-empty and strictly increasing")]
    InvalidEdges,
    #[error("malformed histogram record: {0}")]
    Malformed(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingConfig {
    /// Divisor applied to microsecond timestamps.
    pub time_scale: f64,
    /// Strictly increasing upper bucket edges; there is one more bucket than edges.
    pub bucket_edges_us: Vec<u64>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            time_scale: TIME_SCALE_TRANSFORMER,
            bucket_edges_us: DEFAULT_BUCKET_EDGES_US.to_vec(),
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbeddingError> {
        if !(self.time_scale.is_finite() && self.time_scale > 0.0) {
            return Err(EmbeddingError::ZeroScale(self.time_scale));
        }
        if self.bucket_edges_us.is_empty() || self.bucket_edges_us.windows(2).any(|w| w[0] >= w[1]) {
            return Err(EmbeddingError::InvalidEdges);
        }
        Ok(())
    }

    pub fn buckets(&self) -> usize {
        self.bucket_edges_us.len() + 1
    }

    pub fn channels(&self) -> usize {
        2 * self.buckets()
    }

    #[inline]
    pub fn bucket_of_us(&self, delta_us: u64) -> usize {
        self.bucket_edges_us.partition_point(|&edge| edge <= delta_us)
    }

    pub fn bucket_of_ms(&self, delta_ms: f64) -> Result<usize, EmbeddingError> {
        if delta_ms.is_nan() || delta_ms < 0.0 {
            return Err(EmbeddingError::NegativeDelta(delta_ms));
        }
        Ok(self
            .bucket_edges_us
            .partition_point(|&edge| edge as f64 / 1_000.0 <= delta_ms))
    }
}

/// Bucket of an event `delta_ms` before its token's spike, default edges.
pub fn time_bucket(delta_ms: f64) -> Result<usize, EmbeddingError> {
    if delta_ms.is_nan() || delta_ms < 0.0 {
        return Err(EmbeddingError::NegativeDelta(delta_ms));
    }
    Ok(DEFAULT_BUCKET_EDGES_US.partition_point(|&edge| edge as f64 / 1_000.0 <= delta_ms))
}

/// Microsecond time divided by the model's time scale.
pub fn scale_time(t_us: u64, scale: f64) -> Result<f64, EmbeddingError> {
    if !(scale.is_finite() && scale > 0.0) {
        return Err(EmbeddingError::ZeroScale(scale));
    }
    Ok(t_us as f64 / scale)
}

/// Per-token event counts laid out as `(row, col, bucket, polarity)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StackedHistogram {
    patch_size: u16,
    buckets: usize,
    counts: Vec<u32>,
}

impl StackedHistogram {
    pub fn zeros(patch_size: u16, buckets: usize) -> Self {
        let p = usize::from(patch_size);
        StackedHistogram {
            patch_size,
            buckets,
            counts: vec![0; p * p * buckets * 2],
        }
    }

    pub fn patch_size(&self) -> u16 {
        self.patch_size
    }

    pub fn buckets(&self) -> usize {
        self.buckets
    }

    pub fn channels(&self) -> usize {
        2 * self.buckets
    }

    #[inline]
    fn offset(&self, row: usize, col: usize, channel: usize) -> usize {
        (row * usize::from(self.patch_size) + col) * self.channels() + channel
    }

    pub fn get(&self, row: usize, col: usize, bucket: usize, polarity_channel: usize) -> u32 {
        self.counts[self.offset(row, col, 2 * bucket + polarity_channel)]
    }

    /// Flattened counts in `(row, col, channel)` order.
    pub fn as_flat(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| u64::from(c)).sum()
    }
}

/// Histogram of a token with the default bucket edges.
pub fn stacked_histogram(token: &Token, patch_size: u16) -> Result<StackedHistogram, EmbeddingError> {
    stacked_histogram_with(token, patch_size, &EmbeddingConfig::default())
}

pub fn stacked_histogram_with(
    token: &Token,
    patch_size: u16,
    cfg: &EmbeddingConfig,
) -> Result<StackedHistogram, EmbeddingError> {
    cfg.validate()?;
    let mut hist = StackedHistogram::zeros(patch_size, cfg.buckets());
    let x0 = u32::from(token.patch_x) * u32::from(patch_size);
    let y0 = u32::from(token.patch_y) * u32::from(patch_size);
    let p = u32::from(patch_size);
    for event in &token.events {
        let (x, y) = (u32::from(event.x), u32::from(event.y));
        if x < x0 || y < y0 || x >= x0 + p || y >= y0 + p {
            return Err(EmbeddingError::EventOutsidePatch {
                x: event.x,
                y: event.y,
                patch_x: token.patch_x,
                patch_y: token.patch_y,
            });
        }
        let delta = token
            .t_spike
            .checked_sub(event.t)
            .ok_or(EmbeddingError::EventAfterSpike {
                t: event.t,
                t_spike: token.t_spike,
            })?;
        let channel = 2 * cfg.bucket_of_us(delta) + event.polarity_channel();
        let offset = hist.offset((y - y0) as usize, (x - x0) as usize, channel);
        hist.counts[offset] += 1;
    }
    Ok(hist)
}

/// `ln(x + 1)` applied to a single count.
#[inline]
pub fn log_count(x: f64) -> f64 {
    x.ln_1p()
}

/// Log-transformed, flattened histogram in `(row, col, channel)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct LogEmbedding {
    pub patch_size: u16,
    pub channels: usize,
    pub values: Vec<f32>,
}

pub fn embed_log(hist: &StackedHistogram) -> LogEmbedding {
    LogEmbedding {
        patch_size: hist.patch_size,
        channels: hist.channels(),
        values: hist.counts.iter().map(|&c| log_count(f64::from(c)) as f32).collect(),
    }
}

/// Writes `P` and the channel count as little-endian `u16`, then the counts
/// as little-endian `u32` in `(row, col, channel)` order.
pub fn write_histogram<W: Write>(hist: &StackedHistogram, out: &mut W) -> io::Result<()> {
    let channels = u16::try_from(hist.channels())
        .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "too many channels"))?;
    out.write_all(&hist.patch_size.to_le_bytes())?;
    out.write_all(&channels.to_le_bytes())?;
    let mut buf = Vec::with_capacity(hist.counts.len() * 4);
    for &count in &hist.counts {
        buf.extend_from_slice(&count.to_le_bytes());
    }
    out.write_all(&buf)
}

/// Reads one histogram record; `Ok(None)` at a clean end of input.
pub fn read_histogram<R: Read>(input: &mut R) -> Result<Option<StackedHistogram>, EmbeddingError> {
    let mut header = [0u8; 4];
    let mut filled = 0;
    while filled < header.len() {
        let n = input.read(&mut header[filled..])?;
        if n == 0 {
            return if filled == 0 {
                Ok(None)
            } else {
                Err(EmbeddingError::Malformed("truncated header"))
            };
        }
        filled += n;
    }
    let patch_size = u16::from_le_bytes([header[0], header[1]]);
    let channels = usize::from(u16::from_le_bytes([header[2], header[3]]));
    if channels == 0 || channels % 2 != 0 {
        return Err(EmbeddingError::Malformed("channel count must be even and non-zero"));
    }
    let mut hist = StackedHistogram::zeros(patch_size, channels / 2);
    let mut body = vec![0u8; hist.counts.len() * 4];
    input.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => EmbeddingError::Malformed("truncated counts"),
        _ => EmbeddingError::Io(e),
    })?;
    for (count, bytes) in hist.counts.iter_mut().zip(body.chunks_exact(4)) {
        *count = u32::from_le_bytes(bytes.try_into().expect("chunk of four"));
    }
    Ok(Some(hist))
}
