use serde::Serialize;

use super::{AnalysisError, KeyValueReport, TimeWindows};
use crate::event::{Event, PatchGrid, SensorGeometry};
use crate::token::TokenSummary;

/// What a cell is: a pixel for raw events, a patch for tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Pixel,
    Patch,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WindowSparsity {
    pub start_us: u64,
    pub end_us: u64,
    pub occupied: usize,
    pub cells: usize,
    /// Percentage of cells with nothing in the window.
    pub sparsity_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsitySeries {
    pub kind: CellKind,
    pub windows: Vec<WindowSparsity>,
}

impl SparsitySeries {
    pub fn mean_pct(&self) -> f64 {
        if self.windows.is_empty() {
            return 100.0;
        }
        self.windows.iter().map(|w| w.sparsity_pct).sum::<f64>() / self.windows.len() as f64
    }
}

/// Event-level and token-level sparsity side by side.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SparsityReport {
    pub events: SparsitySeries,
    pub tokens: SparsitySeries,
    /// Token sparsity minus event sparsity, in percentage points. Negative
    /// means the tokens are denser than the events (frames score about -88
    /// on automotive data).
    pub mean_difference_pct: f64,
}

impl SparsityReport {
    pub fn compare(events: SparsitySeries, tokens: SparsitySeries) -> Self {
        let mean_difference_pct = tokens.mean_pct() - events.mean_pct();
        SparsityReport {
            events,
            tokens,
            mean_difference_pct,
        }
    }
}

impl KeyValueReport for SparsitySeries {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        let cells = self.windows.first().map_or(0, |w| w.cells);
        vec![
            ("cell_kind", format!("{:?}", self.kind).to_lowercase()),
            ("cells", cells.to_string()),
            ("windows", self.windows.len().to_string()),
            ("mean_sparsity_pct", format!("{:.6}", self.mean_pct())),
        ]
    }
}

impl KeyValueReport for SparsityReport {
    fn key_values(&self) -> Vec<(&'static str, String)> {
        vec![
            ("event_windows", self.events.windows.len().to_string()),
            ("event_mean_sparsity_pct", format!("{:.6}", self.events.mean_pct())),
            ("token_windows", self.tokens.windows.len().to_string()),
            ("token_mean_sparsity_pct", format!("{:.6}", self.tokens.mean_pct())),
            ("mean_difference_pct", format!("{:.6}", self.mean_difference_pct)),
        ]
    }
}

/// Counts distinct cells per window for items sorted by time.
fn occupancy<I>(items: I, cells: usize, windows: &TimeWindows) -> Vec<WindowSparsity>
where
    I: IntoIterator<Item = (u64, usize)>,
{
    let mut seen = vec![u32::MAX; cells];
    let mut occupied = vec![0usize; windows.count];
    for (t, cell) in items {
        if let Some(k) = windows.index_of(t) {
            if seen[cell] != k as u32 {
                seen[cell] = k as u32;
                occupied[k] += 1;
            }
        }
    }
    occupied
        .into_iter()
        .enumerate()
        .map(|(k, occupied)| {
            let (start_us, end_us) = windows.bounds(k);
            WindowSparsity {
                start_us,
                end_us,
                occupied,
                cells,
                sparsity_pct: 100.0 * (cells - occupied) as f64 / cells as f64,
            }
        })
        .collect()
}

/// Pixel sparsity over windows tiling the events' own span.
pub fn event_sparsity(
    events: &[Event],
    geometry: SensorGeometry,
    window_us: u64,
) -> Result<SparsitySeries, AnalysisError> {
    let windows = TimeWindows::spanning(events, window_us)?;
    Ok(event_sparsity_over(events, geometry, &windows))
}

/// Pixel sparsity over the given windows. Events must be time-sorted.
pub fn event_sparsity_over(
    events: &[Event],
    geometry: SensorGeometry,
    windows: &TimeWindows,
) -> SparsitySeries {
    let width = usize::from(geometry.width());
    let cells = events
        .iter()
        .map(|e| (e.t, usize::from(e.y) * width + usize::from(e.x)));
    SparsitySeries {
        kind: CellKind::Pixel,
        windows: occupancy(cells, geometry.pixel_count(), windows),
    }
}

/// Patch sparsity over windows tiling the tokens' own spike times.
pub fn token_sparsity<T: TokenSummary>(
    tokens: &[T],
    geometry: SensorGeometry,
    patch_size: u16,
    window_us: u64,
) -> Result<SparsitySeries, AnalysisError> {
    let first = tokens.first().ok_or(AnalysisError::EmptyTimeRange)?;
    let last = tokens.last().ok_or(AnalysisError::EmptyTimeRange)?;
    let windows = TimeWindows::covering(first.t_spike(), last.t_spike(), window_us)?;
    token_sparsity_over(tokens, geometry, patch_size, &windows)
}

/// Patch sparsity over the given windows. A cell is occupied when at least
/// one token spikes there within the window; empty frame tokens count.
pub fn token_sparsity_over<T: TokenSummary>(
    tokens: &[T],
    geometry: SensorGeometry,
    patch_size: u16,
    windows: &TimeWindows,
) -> Result<SparsitySeries, AnalysisError> {
    let grid = PatchGrid::new(geometry, patch_size).map_err(|_| AnalysisError::ZeroPatchSize)?;
    let mut cells = Vec::with_capacity(tokens.len());
    for token in tokens {
        let (px, py) = token.patch();
        if usize::from(px) >= grid.columns() || usize::from(py) >= grid.rows() {
            return Err(AnalysisError::PatchOutOfGrid(px, py));
        }
        cells.push((token.t_spike(), usize::from(py) * grid.columns() + usize::from(px)));
    }
    Ok(SparsitySeries {
        kind: CellKind::Patch,
        windows: occupancy(cells, grid.len(), windows),
    })
}
