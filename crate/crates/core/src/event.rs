//! Events, sensor geometry, validated streams, patch indexing and time windows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A single camera event. Timestamps are integer microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub x: u16,
    pub y: u16,
    pub t: u64,
    /// Polarity, `-1` or `+1`.
    pub p: i8,
}

impl Event {
    pub const fn new(x: u16, y: u16, t: u64, p: i8) -> Self {
        Event { x, y, t, p }
    }

    /// Histogram channel of the polarity: `-1 -> 0`, `+1 -> 1`.
    #[inline]
    pub fn polarity_channel(&self) -> usize {
        usize::from(self.p > 0)
    }

    #[inline]
    pub fn has_valid_polarity(&self) -> bool {
        self.p == 1 || self.p == -1
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StreamError {
    #[error("event {0} is earlier than its predecessor")]
    UnsortedAt(usize),
    #[error("event {0} lies outside the sensor")]
    OutOfBoundsAt(usize),
    #[error("event {0} has a polarity other than -1 or +1")]
    BadPolarityAt(usize),
    #[error("patch size must be at least 1")]
    ZeroPatchSize,
    #[error("sensor dimensions must be at least 1x1 (got {width}x{height})")]
    InvalidGeometry { width: u16, height: u16 },
    #[error("window start {t0} is after window end {t1}")]
    InvertedWindow { t0: u64, t1: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SensorGeometry {
    width: u16,
    height: u16,
}

impl SensorGeometry {
    pub fn new(width: u16, height: u16) -> Result<Self, StreamError> {
        if width == 0 || height == 0 {
            return Err(StreamError::InvalidGeometry { width, height });
        }
        Ok(SensorGeometry { width, height })
    }

    pub fn width(&self) -> u16 {
        self.width
    }

    pub fn height(&self) -> u16 {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        usize::from(self.width) * usize::from(self.height)
    }

    #[inline]
    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }
}

/// Grid of non-overlapping `P x P` patches covering a sensor. Patches on the
/// right and bottom edges may be partial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    patch_size: u16,
    columns: usize,
    rows: usize,
}

impl PatchGrid {
    pub fn new(geometry: SensorGeometry, patch_size: u16) -> Result<Self, StreamError> {
        if patch_size == 0 {
            return Err(StreamError::ZeroPatchSize);
        }
        let p = usize::from(patch_size);
        Ok(PatchGrid {
            patch_size,
            columns: usize::from(geometry.width).div_ceil(p),
            rows: usize::from(geometry.height).div_ceil(p),
        })
    }

    pub fn patch_size(&self) -> u16 {
        self.patch_size
    }

    pub fn columns(&self) -> usize {
        self.columns
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.columns * self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Patch coordinates of a pixel.
    #[inline]
    pub fn patch_of(&self, x: u16, y: u16) -> (u16, u16) {
        (x / self.patch_size, y / self.patch_size)
    }

    /// Row-major linear index of the patch containing a pixel.
    #[inline]
    pub fn index_of(&self, x: u16, y: u16) -> usize {
        let (px, py) = self.patch_of(x, y);
        usize::from(py) * self.columns + usize::from(px)
    }

    /// Patch coordinates for a row-major linear index.
    #[inline]
    pub fn coords(&self, index: usize) -> (u16, u16) {
        ((index % self.columns) as u16, (index / self.columns) as u16)
    }
}

/// Patch coordinates `(floor(x / P), floor(y / P))`.
pub fn patch_index(x: u16, y: u16, patch_size: u16) -> Result<(u16, u16), StreamError> {
    if patch_size == 0 {
        return Err(StreamError::ZeroPatchSize);
    }
    Ok((x / patch_size, y / patch_size))
}

/// A time-sorted, in-bounds sequence of events on a known sensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: SensorGeometry,
    events: Vec<Event>,
}

impl EventStream {
    pub fn empty(geometry: SensorGeometry) -> Self {
        EventStream {
            geometry,
            events: Vec::new(),
        }
    }

    pub fn geometry(&self) -> SensorGeometry {
        self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// First and last timestamp, if any.
    pub fn span(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    /// Events with `t0 <= t < t1`.
    pub fn window(&self, t0: u64, t1: u64) -> Result<EventStream, StreamError> {
        Ok(EventStream {
            geometry: self.geometry,
            events: window_slice(&self.events, t0, t1)?.to_vec(),
        })
    }
}

/// Checks ordering, bounds and polarity, reporting the first offending index.
pub fn validate_stream(
    events: Vec<Event>,
    geometry: SensorGeometry,
) -> Result<EventStream, StreamError> {
    let mut previous = 0u64;
    for (i, e) in events.iter().enumerate() {
        if e.t < previous {
            return Err(StreamError::UnsortedAt(i));
        }
        if !geometry.contains(e.x, e.y) {
            return Err(StreamError::OutOfBoundsAt(i));
        }
        if !e.has_valid_polarity() {
            return Err(StreamError::BadPolarityAt(i));
        }
        previous = e.t;
    }
    Ok(EventStream { geometry, events })
}

/// Anything that carries a single timestamp used for windowing.
pub trait Timestamped {
    fn timestamp(&self) -> u64;
}

impl Timestamped for Event {
    #[inline]
    fn timestamp(&self) -> u64 {
        self.t
    }
}

/// Items with `t0 <= t < t1` from a slice sorted by timestamp.
pub fn window_slice<T: Timestamped>(items: &[T], t0: u64, t1: u64) -> Result<&[T], StreamError> {
    if t0 > t1 {
        return Err(StreamError::InvertedWindow { t0, t1 });
    }
    let start = items.partition_point(|item| item.timestamp() < t0);
    let end = start + items[start..].partition_point(|item| item.timestamp() < t1);
    Ok(&items[start..end])
}
