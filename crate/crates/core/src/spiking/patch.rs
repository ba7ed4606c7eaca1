use std::collections::VecDeque;

use super::config::{TokenizerConfig, Variant};
use crate::event::Event;

/// Pre-allocation cap for a patch's pending group.
const MAX_RESERVE: usize = 4096;

/// Integrate-and-fire state of one patch.
#[derive(Debug, Clone, Default)]
pub struct PatchState {
    potential: f64,
    pending: VecDeque<Event>,
    last_spike_t: Option<u64>,
    /// Previous accepted event since the last reset (decay variant).
    last_event_t: Option<u64>,
}

impl PatchState {
    pub fn potential(&self) -> f64 {
        self.potential
    }

    pub fn pending(&self) -> &VecDeque<Event> {
        &self.pending
    }

    pub fn last_spike_t(&self) -> Option<u64> {
        self.last_spike_t
    }

    pub fn last_event_t(&self) -> Option<u64> {
        self.last_event_t
    }

    pub fn reset(&mut self) {
        *self = PatchState::default();
    }

    /// Feeds one event; returns the member events when the patch spikes.
    /// The caller guarantees non-decreasing timestamps.
    #[inline]
    pub fn integrate(&mut self, event: Event, cfg: &TokenizerConfig) -> Option<Vec<Event>> {
        let t = event.t;
        let mut gain = 1.0;
        if let Some(spike_t) = self.last_spike_t {
            let since = t - spike_t;
            if since < cfg.refractory_us {
                return None;
            }
            if since - cfg.refractory_us < cfg.relative_refractory_us {
                gain = cfg.relative_scale;
            }
        }

        let next = match cfg.variant {
            Variant::Plain => {
                self.pending.push_back(event);
                self.potential + gain
            }
            Variant::Decay => {
                let leak = self
                    .last_event_t
                    .map_or(0.0, |prev| cfg.decay_per_us * (t - prev) as f64);
                let v = self.potential + gain - leak;
                if v <= 0.0 {
                    // the triggering event is dropped with the rest of the group
                    self.potential = 0.0;
                    self.pending.clear();
                    self.last_event_t = None;
                    return None;
                }
                self.last_event_t = Some(t);
                self.pending.push_back(event);
                v
            }
            Variant::Discrete => {
                self.pending.push_back(event);
                if let Some(span) = cfg.max_token_span_us {
                    while self.pending.front().is_some_and(|old| t - old.t > span) {
                        self.pending.pop_front();
                    }
                }
                self.pending.len() as f64
            }
        };

        if next >= cfg.threshold {
            return Some(self.spike(t, cfg));
        }
        self.potential = next;
        None
    }

    fn spike(&mut self, t: u64, cfg: &TokenizerConfig) -> Vec<Event> {
        self.potential = 0.0;
        self.last_spike_t = Some(t);
        self.last_event_t = None;
        let reserve = (cfg.threshold.ceil() as usize).min(MAX_RESERVE);
        Vec::from(std::mem::replace(&mut self.pending, VecDeque::with_capacity(reserve)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t: u64) -> Event {
        Event::new(0, 0, t, 1)
    }

    fn feed(patch: &mut PatchState, cfg: &TokenizerConfig, times: &[u64]) -> Vec<Vec<u64>> {
        times
            .iter()
            .filter_map(|&t| patch.integrate(ev(t), cfg))
            .map(|members| members.iter().map(|e| e.t).collect())
            .collect()
    }

    #[test]
    fn plain_spikes_every_sigma_events() {
        let cfg = TokenizerConfig::plain(1, 3.0);
        let mut patch = PatchState::default();
        let tokens = feed(&mut patch, &cfg, &[1, 2, 3, 4, 5, 6, 7]);
        assert_eq!(tokens, vec![vec![1, 2, 3], vec![4, 5, 6]]);
        assert_eq!(patch.pending().len(), 1);
        assert_eq!(patch.potential(), 1.0);
    }

    #[test]
    fn refractory_interval_is_half_open() {
        let cfg = TokenizerConfig::plain(1, 1.0).with_refractory_us(10);
        let mut patch = PatchState::default();
        let tokens = feed(&mut patch, &cfg, &[0, 9, 10]);
        assert_eq!(tokens, vec![vec![0], vec![10]]);
    }

    #[test]
    fn relative_refractory_scales_input_and_keeps_events() {
        // spike at 0; ARP [0, 10); RRP [10, 20) with gain 0.5
        let cfg = TokenizerConfig::plain(1, 2.0)
            .with_refractory_us(10)
            .with_relative_refractory(10, 0.5);
        let mut patch = PatchState::default();
        assert!(feed(&mut patch, &cfg, &[0, 0]).len() == 1);
        assert!(patch.integrate(ev(5), &cfg).is_none());
        assert!(patch.integrate(ev(12), &cfg).is_none());
        assert_eq!(patch.potential(), 0.5);
        assert!(patch.integrate(ev(19), &cfg).is_none());
        assert_eq!(patch.potential(), 1.0);
        let token = patch.integrate(ev(20), &cfg).unwrap();
        assert_eq!(token.iter().map(|e| e.t).collect::<Vec<_>>(), vec![12, 19, 20]);
    }

    #[test]
    fn decay_floor_empties_group() {
        // u = 1 before a gap with leak 5: v = 1 + 1 - 5 <= 0
        let cfg = TokenizerConfig::plain(1, 10.0).with_decay(0.5);
        let mut patch = PatchState::default();
        assert!(patch.integrate(ev(100), &cfg).is_none());
        assert_eq!(patch.potential(), 1.0);
        assert!(patch.integrate(ev(110), &cfg).is_none());
        assert_eq!(patch.potential(), 0.0);
        assert!(patch.pending().is_empty());
        assert_eq!(patch.last_event_t(), None);
        // next event starts fresh without a leak term
        assert!(patch.integrate(ev(500), &cfg).is_none());
        assert_eq!(patch.potential(), 1.0);
    }

    #[test]
    fn decay_leaks_between_accepted_events() {
        let cfg = TokenizerConfig::plain(1, 10.0).with_decay(0.25);
        let mut patch = PatchState::default();
        patch.integrate(ev(0), &cfg);
        patch.integrate(ev(2), &cfg);
        assert_eq!(patch.potential(), 1.5);
    }

    #[test]
    fn discrete_prunes_old_events_before_threshold_check() {
        let cfg = TokenizerConfig::plain(1, 3.0).discrete(Some(10_000));
        let mut patch = PatchState::default();
        let tokens = feed(&mut patch, &cfg, &[0, 1_000, 20_000]);
        assert!(tokens.is_empty());
        let pending: Vec<u64> = patch.pending().iter().map(|e| e.t).collect();
        assert_eq!(pending, vec![20_000]);
    }

    #[test]
    fn discrete_keeps_events_exactly_t_max_old() {
        let cfg = TokenizerConfig::plain(1, 3.0).discrete(Some(10));
        let mut patch = PatchState::default();
        let tokens = feed(&mut patch, &cfg, &[0, 5, 10]);
        assert_eq!(tokens, vec![vec![0, 5, 10]]);
    }
}
