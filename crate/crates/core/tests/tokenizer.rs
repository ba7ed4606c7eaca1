mod common;

use common::{chunk_oracle, discrete_oracle, random_stream, refractory_oracle, spike_times};
use spiking_patches::analysis::{token_sparsity_over, TimeWindows};
use spiking_patches::spiking::{SpikingTokenizer, TokenizeError};
use spiking_patches::{
    tokenize_stream, tokenize_stream_sharded, validate_stream, Event, SensorGeometry, TokenizerConfig,
};

#[test]
fn matches_chunk_oracle() {
    for seed in 0..10 {
        let stream = random_stream(seed, 20_000, 64, 48, 20);
        for sigma in [1usize, 2, 5, 25] {
            let cfg = TokenizerConfig::plain(8, sigma as f64);
            let tokens = tokenize_stream(&cfg, &stream).unwrap();
            assert_eq!(
                tokens.tokens(),
                chunk_oracle(stream.events(), 8, sigma).as_slice(),
                "seed {seed} sigma {sigma}"
            );
        }
    }
}

#[test]
fn matches_refractory_oracle() {
    for seed in 0..10 {
        let stream = random_stream(seed, 20_000, 32, 32, 50);
        for (sigma, refractory) in [(1, 100), (3, 1_000), (10, 25_000)] {
            let cfg = TokenizerConfig::plain(8, sigma as f64).with_refractory_us(refractory);
            let tokens = tokenize_stream(&cfg, &stream).unwrap();
            assert_eq!(
                tokens.tokens(),
                refractory_oracle(stream.events(), 8, sigma, refractory).as_slice()
            );
        }
    }
}

#[test]
fn matches_discrete_oracle() {
    for seed in 0..10 {
        let stream = random_stream(seed, 5_000, 32, 16, 100);
        for (sigma, t_max) in [(4, Some(2_000)), (8, Some(10_000)), (3, None), (1, Some(0))] {
            let cfg = TokenizerConfig::plain(8, sigma as f64).discrete(t_max);
            let tokens = tokenize_stream(&cfg, &stream).unwrap();
            assert_eq!(
                tokens.tokens(),
                discrete_oracle(stream.events(), 8, sigma, t_max).as_slice(),
                "seed {seed} sigma {sigma} t_max {t_max:?}"
            );
        }
    }
}

#[test]
fn partial_patches_at_the_border() {
    // 10x7 sensor with P = 4: the last column and row of patches are clipped
    let stream = random_stream(3, 4_000, 10, 7, 5);
    let cfg = TokenizerConfig::plain(4, 7.0);
    let tokens = tokenize_stream(&cfg, &stream).unwrap();
    assert_eq!(tokens.tokens(), chunk_oracle(stream.events(), 4, 7).as_slice());
    assert!(tokens.tokens().iter().any(|t| t.patch_x == 2 && t.patch_y == 1));
}

#[test]
fn fractional_threshold_rounds_up() {
    let stream = random_stream(9, 10_000, 16, 16, 10);
    let a = tokenize_stream(&TokenizerConfig::plain(4, 4.5), &stream).unwrap();
    let b = tokenize_stream(&TokenizerConfig::plain(4, 5.0), &stream).unwrap();
    assert_eq!(a.tokens(), b.tokens());
}

#[test]
fn sharded_output_is_identical() {
    let configs = [
        TokenizerConfig::plain(8, 9.0),
        TokenizerConfig::plain(8, 4.0).with_refractory_us(500).with_relative_refractory(1_000, 0.25),
        TokenizerConfig::plain(8, 6.0).with_decay(0.001),
        TokenizerConfig::plain(8, 5.0).discrete(Some(3_000)),
    ];
    for seed in 0..4 {
        let stream = random_stream(seed, 30_000, 64, 64, 10);
        for cfg in &configs {
            let sequential = tokenize_stream(cfg, &stream).unwrap();
            for shards in [1, 2, 3, 7] {
                assert_eq!(tokenize_stream_sharded(cfg, &stream, shards).unwrap(), sequential);
            }
        }
    }
}

#[test]
fn equal_timestamps_keep_emission_order_per_patch() {
    let geometry = SensorGeometry::new(4, 4).unwrap();
    let events = vec![
        Event::new(3, 3, 5, 1),
        Event::new(0, 0, 5, 1),
        Event::new(0, 1, 5, -1),
        Event::new(2, 0, 5, 1),
    ];
    let stream = validate_stream(events, geometry).unwrap();
    let tokens = tokenize_stream(&TokenizerConfig::plain(2, 1.0), &stream).unwrap();
    let order: Vec<_> = tokens.tokens().iter().map(|t| (t.patch_x, t.patch_y, t.events[0].y)).collect();
    assert_eq!(order, vec![(0, 0, 0), (0, 0, 1), (1, 0, 0), (1, 1, 3)]);
}

#[test]
fn streaming_push_rejects_bad_input() {
    let geometry = SensorGeometry::new(8, 8).unwrap();
    let mut tokenizer = SpikingTokenizer::new(TokenizerConfig::plain(4, 2.0), geometry).unwrap();
    tokenizer.push(Event::new(0, 0, 10, 1)).unwrap();
    assert_eq!(
        tokenizer.push(Event::new(0, 0, 9, 1)),
        Err(TokenizeError::NonMonotonicTime { previous: 10, got: 9 })
    );
    assert_eq!(
        tokenizer.push(Event::new(8, 0, 11, 1)),
        Err(TokenizeError::OutOfBounds { x: 8, y: 0 })
    );
    assert_eq!(tokenizer.push(Event::new(0, 0, 11, 0)), Err(TokenizeError::BadPolarity(0)));
    let token = tokenizer.push(Event::new(1, 1, 12, -1)).unwrap().unwrap();
    assert_eq!(token.events.len(), 2);
    assert!(tokenizer.finalize().is_idle());
}

#[test]
fn alpha_zero_spike_times_equal_extended_refractory() {
    for seed in 0..5 {
        let stream = random_stream(seed, 20_000, 32, 32, 30);
        let rrp = TokenizerConfig::plain(8, 5.0)
            .with_refractory_us(700)
            .with_relative_refractory(1_300, 0.0);
        let arp = TokenizerConfig::plain(8, 5.0).with_refractory_us(2_000);
        let a = tokenize_stream(&rrp, &stream).unwrap();
        let b = tokenize_stream(&arp, &stream).unwrap();
        assert_eq!(spike_times(a.tokens()), spike_times(b.tokens()));
    }
}

#[test]
fn patch_occupancy_is_not_monotone_in_threshold() {
    let geometry = SensorGeometry::new(1, 1).unwrap();
    let events = [2, 27, 32, 37, 37, 39, 50, 56].iter().map(|&t| Event::new(0, 0, t, 1)).collect();
    let stream = validate_stream(events, geometry).unwrap();
    let windows = TimeWindows::new(0, 10, 6).unwrap();
    let occupied = |sigma: f64| {
        let tokens = tokenize_stream(&TokenizerConfig::plain(1, sigma), &stream).unwrap();
        let series = token_sparsity_over(tokens.tokens(), geometry, 1, &windows).unwrap();
        series.windows.iter().map(|w| w.occupied).sum::<usize>()
    };
    assert_eq!(occupied(3.0), 1);
    assert_eq!(occupied(4.0), 2);
}
