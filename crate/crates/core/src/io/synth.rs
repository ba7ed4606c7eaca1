//! Deterministic synthetic event streams for dataset-free experiments.

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, LogNormal, Poisson};

use super::IoError;
use crate::event::{validate_stream, Event, EventStream, PatchGrid, SensorGeometry};

/// A rectangular bar sweeping left to right across the sensor.
///
/// The leading edge reaches column `start_column + k` at `k / velocity`
/// seconds and every pixel of the bar's rows in that column fires `+1`; the
/// trailing edge leaves the column `bar_width / velocity` seconds later and
/// fires `-1`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingBarSpec {
    pub bar_width: u16,
    pub bar_height: u16,
    pub top_row: u16,
    pub start_column: u16,
    /// Number of columns the leading edge traverses.
    pub columns: u16,
    pub velocity_px_per_s: f64,
    /// Background noise, uniformly spread over the sensor and the sweep.
    pub noise_rate_per_s: f64,
    pub seed: u64,
}

impl Default for MovingBarSpec {
    fn default() -> Self {
        MovingBarSpec {
            bar_width: 8,
            bar_height: 32,
            top_row: 0,
            start_column: 0,
            columns: 64,
            velocity_px_per_s: 1_000.0,
            noise_rate_per_s: 0.0,
            seed: 0,
        }
    }
}

impl MovingBarSpec {
    fn check(&self, geometry: SensorGeometry) -> Result<(), IoError> {
        let fail = |msg: &str| Err(IoError::SpecOutOfBounds(msg.to_owned()));
        if !(self.velocity_px_per_s.is_finite() && self.velocity_px_per_s > 0.0) {
            return fail("velocity must be positive");
        }
        if !(self.noise_rate_per_s.is_finite() && self.noise_rate_per_s >= 0.0) {
            return fail("noise rate must be non-negative");
        }
        if self.bar_width == 0 || self.bar_height == 0 || self.columns == 0 {
            return fail("bar and traversal dimensions must be at least 1");
        }
        if u32::from(self.top_row) + u32::from(self.bar_height) > u32::from(geometry.height()) {
            return fail("bar rows exceed the sensor height");
        }
        if u32::from(self.start_column) + u32::from(self.columns) > u32::from(geometry.width()) {
            return fail("traversal exceeds the sensor width");
        }
        Ok(())
    }

    fn crossing_us(&self, distance_px: u32) -> u64 {
        (f64::from(distance_px) * 1e6 / self.velocity_px_per_s).round() as u64
    }

    /// Time at which the trailing edge leaves the last column.
    pub fn duration_us(&self) -> u64 {
        self.crossing_us(u32::from(self.columns) - 1 + u32::from(self.bar_width))
    }
}

pub fn generate_moving_bar(spec: &MovingBarSpec, geometry: SensorGeometry) -> Result<EventStream, IoError> {
    spec.check(geometry)?;
    let rows = spec.top_row..spec.top_row + spec.bar_height;
    let mut events = Vec::with_capacity(2 * usize::from(spec.bar_height) * usize::from(spec.columns));
    for k in 0..spec.columns {
        let x = spec.start_column + k;
        let on = spec.crossing_us(u32::from(k));
        let off = spec.crossing_us(u32::from(k) + u32::from(spec.bar_width));
        events.extend(rows.clone().map(|y| Event::new(x, y, on, 1)));
        events.extend(rows.clone().map(|y| Event::new(x, y, off, -1)));
    }

    if spec.noise_rate_per_s > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let duration = spec.duration_us();
        let mean = spec.noise_rate_per_s * duration as f64 / 1e6;
        let count = if mean > 0.0 {
            Poisson::new(mean).expect("positive finite mean").sample(&mut rng) as usize
        } else {
            0
        };
        for _ in 0..count {
            events.push(Event::new(
                rng.random_range(0..geometry.width()),
                rng.random_range(0..geometry.height()),
                rng.random_range(0..=duration),
                if rng.random_bool(0.5) { 1 } else { -1 },
            ));
        }
    }

    events.sort_by_key(|e| e.t);
    Ok(validate_stream(events, geometry)?)
}

/// Stationary Poisson activity with a heavy-tailed spread of rates across
/// patches: a few busy patches, many quiet ones.
///
/// Patch weights are drawn from a log-normal distribution with shape
/// `activity_spread`; the defaults mimic automotive recordings on a
/// 304x240 sensor (about 36k events per 50 ms).
#[derive(Debug, Clone, PartialEq)]
pub struct PatchActivitySpec {
    pub duration_us: u64,
    pub events_per_second: f64,
    pub patch_size: u16,
    pub activity_spread: f64,
    pub seed: u64,
}

impl Default for PatchActivitySpec {
    fn default() -> Self {
        PatchActivitySpec {
            duration_us: 2_000_000,
            events_per_second: 716_700.0,
            patch_size: 16,
            activity_spread: 1.8,
            seed: 0,
        }
    }
}

pub fn generate_patch_activity(
    spec: &PatchActivitySpec,
    geometry: SensorGeometry,
) -> Result<EventStream, IoError> {
    if !(spec.events_per_second.is_finite() && spec.events_per_second > 0.0) {
        return Err(IoError::SpecOutOfBounds("event rate must be positive".into()));
    }
    if !(spec.activity_spread.is_finite() && spec.activity_spread >= 0.0) {
        return Err(IoError::SpecOutOfBounds("activity spread must be non-negative".into()));
    }
    let grid = PatchGrid::new(geometry, spec.patch_size)
        .map_err(|_| IoError::SpecOutOfBounds("patch size must be at least 1".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let spread = LogNormal::new(0.0, spec.activity_spread).expect("validated shape");
    let weights: Vec<f64> = (0..grid.len()).map(|_| spread.sample(&mut rng)).collect();
    let pick_patch = WeightedIndex::new(&weights)
        .map_err(|e| IoError::SpecOutOfBounds(format!("patch weights: {e}")))?;
    let gap = Exp::new(spec.events_per_second / 1e6).expect("positive rate");

    let p = u32::from(spec.patch_size);
    let (width, height) = (u32::from(geometry.width()), u32::from(geometry.height()));
    let mut events = Vec::with_capacity((spec.events_per_second * spec.duration_us as f64 / 1e6) as usize);
    let mut clock = 0.0f64;
    loop {
        clock += gap.sample(&mut rng);
        let t = clock as u64;
        if t >= spec.duration_us {
            break;
        }
        let (px, py) = grid.coords(pick_patch.sample(&mut rng));
        let x0 = u32::from(px) * p;
        let y0 = u32::from(py) * p;
        let x = rng.random_range(x0..(x0 + p).min(width)) as u16;
        let y = rng.random_range(y0..(y0 + p).min(height)) as u16;
        let polarity = if rng.random_bool(0.5) { 1 } else { -1 };
        events.push(Event::new(x, y, t, polarity));
    }
    Ok(validate_stream(events, geometry)?)
}
