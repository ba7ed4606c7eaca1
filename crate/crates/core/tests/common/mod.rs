#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spiking_patches::{validate_stream, Event, EventStream, SensorGeometry, Token};

/// Uniformly scattered events with random gaps in `0..=max_gap_us`.
pub fn random_stream(seed: u64, n: usize, width: u16, height: u16, max_gap_us: u64) -> EventStream {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut t = 0u64;
    let events = (0..n)
        .map(|_| {
            t += rng.random_range(0..=max_gap_us);
            Event::new(
                rng.random_range(0..width),
                rng.random_range(0..height),
                t,
                if rng.random_bool(0.5) { 1 } else { -1 },
            )
        })
        .collect();
    validate_stream(events, SensorGeometry::new(width, height).unwrap()).unwrap()
}

fn by_patch(events: &[Event], patch_size: u16) -> BTreeMap<(u16, u16), Vec<Event>> {
    let mut groups: BTreeMap<(u16, u16), Vec<Event>> = BTreeMap::new();
    for e in events {
        groups.entry((e.x / patch_size, e.y / patch_size)).or_default().push(*e);
    }
    groups
}

fn canonical(mut tokens: Vec<Token>) -> Vec<Token> {
    tokens.sort_by_key(|t| (t.t_spike, t.patch_y, t.patch_x));
    tokens
}

/// Plain tokenizer without refractory periods and integer threshold: every
/// patch's events cut into consecutive chunks of `sigma`.
pub fn chunk_oracle(events: &[Event], patch_size: u16, sigma: usize) -> Vec<Token> {
    let mut tokens = Vec::new();
    for ((px, py), members) in by_patch(events, patch_size) {
        for chunk in members.chunks_exact(sigma) {
            tokens.push(Token {
                patch_x: px,
                patch_y: py,
                t_spike: chunk[sigma - 1].t,
                events: chunk.to_vec(),
            });
        }
    }
    canonical(tokens)
}

/// Discrete tokenizer without refractory periods: after each event the
/// candidate set is every event since the last spike no older than `t_max`
/// relative to the newest; the patch spikes when it holds `sigma` of them.
pub fn discrete_oracle(events: &[Event], patch_size: u16, sigma: usize, t_max: Option<u64>) -> Vec<Token> {
    let mut tokens = Vec::new();
    for ((px, py), members) in by_patch(events, patch_size) {
        let mut since_spike = 0usize;
        for i in 0..members.len() {
            let now = members[i].t;
            let candidates: Vec<Event> = members[since_spike..=i]
                .iter()
                .filter(|e| t_max.is_none_or(|span| now - e.t <= span))
                .copied()
                .collect();
            if candidates.len() >= sigma {
                tokens.push(Token {
                    patch_x: px,
                    patch_y: py,
                    t_spike: now,
                    events: candidates,
                });
                since_spike = i + 1;
            }
        }
    }
    canonical(tokens)
}

/// Plain tokenizer with an absolute refractory period `refractory` and
/// integer threshold, one patch at a time with an explicit event list.
pub fn refractory_oracle(events: &[Event], patch_size: u16, sigma: usize, refractory: u64) -> Vec<Token> {
    let mut tokens = Vec::new();
    for ((px, py), members) in by_patch(events, patch_size) {
        let mut group = Vec::new();
        let mut blocked_until = 0u64;
        let mut spiked = false;
        for e in members {
            if spiked && e.t < blocked_until {
                continue;
            }
            group.push(e);
            if group.len() == sigma {
                tokens.push(Token {
                    patch_x: px,
                    patch_y: py,
                    t_spike: e.t,
                    events: std::mem::take(&mut group),
                });
                spiked = true;
                blocked_until = e.t + refractory;
            }
        }
    }
    canonical(tokens)
}

pub fn spike_times(tokens: &[Token]) -> Vec<(u64, u16, u16)> {
    tokens.iter().map(|t| (t.t_spike, t.patch_x, t.patch_y)).collect()
}
