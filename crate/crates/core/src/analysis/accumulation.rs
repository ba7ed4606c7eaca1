use serde::Serialize;

use super::AnalysisError;
use crate::event::Event;
use crate::token::TokenSummary;

/// Cumulative number of events made available over time, as the
/// breakpoints of a right-continuous step function.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct AccumulationCurve {
    /// `(time_us, cumulative_events)`, strictly increasing in both.
    points: Vec<(u64, u64)>,
}

impl AccumulationCurve {
    fn from_steps<I: IntoIterator<Item = (u64, u64)>>(steps: I) -> Self {
        let mut points: Vec<(u64, u64)> = Vec::new();
        let mut total = 0u64;
        for (t, step) in steps {
            if step == 0 {
                continue;
            }
            total += step;
            match points.last_mut() {
                Some(last) if last.0 == t => last.1 = total,
                _ => points.push((t, total)),
            }
        }
        AccumulationCurve { points }
    }

    /// One step per event. Events must be time-sorted.
    pub fn from_events(events: &[Event]) -> Self {
        Self::from_steps(events.iter().map(|e| (e.t, 1)))
    }

    /// One step of `|token|` at each spike time. Tokens must be sorted by spike time.
    pub fn from_tokens<T: TokenSummary>(tokens: &[T]) -> Self {
        Self::from_steps(tokens.iter().map(|t| (t.t_spike(), t.event_count() as u64)))
    }

    pub fn points(&self) -> &[(u64, u64)] {
        &self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.points.last().map_or(0, |p| p.1)
    }

    /// Events accumulated up to and including time `t`.
    pub fn value_at(&self, t: u64) -> u64 {
        let i = self.points.partition_point(|p| p.0 <= t);
        if i == 0 {
            0
        } else {
            self.points[i - 1].1
        }
    }

    /// Earliest time at which the curve reaches `count`.
    pub fn time_to_reach(&self, count: u64) -> Option<u64> {
        let i = self.points.partition_point(|p| p.1 < count);
        self.points.get(i).map(|p| p.0)
    }
}

/// Mean horizontal gap between a token curve and its event curve, in µs.
///
/// For every cumulative level `c` reached by the token curve, the gap is the
/// time the token curve reaches `c` minus the time the event curve reaches
/// `c`. This equals the mean time an event waits before it is delivered in a
/// token.
pub fn delay_estimate(
    event_curve: &AccumulationCurve,
    token_curve: &AccumulationCurve,
) -> Result<f64, AnalysisError> {
    if event_curve.is_empty() || token_curve.is_empty() {
        return Err(AnalysisError::EmptyCurve);
    }
    if token_curve.total() > event_curve.total() {
        return Err(AnalysisError::MismatchedStreams {
            tokens: token_curve.total(),
            events: event_curve.total(),
        });
    }

    let events = event_curve.points();
    let mut sum: i128 = 0;
    let mut level = 0u64;
    let mut j = 0usize;
    for &(t_token, reached) in token_curve.points() {
        while level < reached {
            while events[j].1 <= level {
                j += 1;
            }
            let upto = reached.min(events[j].1);
            sum += i128::from(upto - level) * (i128::from(t_token) - i128::from(events[j].0));
            level = upto;
        }
    }
    Ok(sum as f64 / token_curve.total() as f64)
}
