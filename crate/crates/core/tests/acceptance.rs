//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::time::Instant;

use common::{chunk_oracle, random_stream, spike_times};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spiking_patches::analysis::{
    delay_estimate, token_count_stats_over, token_sparsity, token_sparsity_over, AccumulationCurve,
    TimeWindows,
};
use spiking_patches::embedding::{stacked_histogram, time_bucket, DEFAULT_BUCKET_EDGES_US};
use spiking_patches::io::{
    generate_patch_activity, read_csv_from, read_evs_from, write_csv_to, write_evs_to, PatchActivitySpec,
};
use spiking_patches::{
    frame_patches, tokenize_stream, validate_stream, voxelize, Event, EventStream, FrameConfig, PatchGrid,
    SensorGeometry, Token, TokenizerConfig, VoxelConfig,
};

const MS: u64 = 1_000;
const WINDOW_US: u64 = 50 * MS;

// pinned tolerances
const REDUCTION_RANGE: (f64, f64) = (3.0, 5.0);
const PLAIN_MIN_EVENTS_PER_S: f64 = 5.0e6;
const ANY_CONFIG_MIN_EVENTS_PER_S: f64 = 2.0 * 0.7e6;
const MAX_DOUBLING_RATIO: f64 = 2.5;
const DELAY_SIGMA_10_MS: f64 = 4.5;
const DELAY_TOLERANCE_MS: f64 = 0.5;

struct Suite {
    failures: usize,
}

impl Suite {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failures += 1;
        }
    }
}

fn gen1_geometry() -> SensorGeometry {
    SensorGeometry::new(304, 240).unwrap()
}

fn gen1_like(seed: u64, duration_us: u64) -> EventStream {
    let spec = PatchActivitySpec {
        duration_us,
        seed,
        ..Default::default()
    };
    generate_patch_activity(&spec, gen1_geometry()).unwrap()
}

fn input_windows(stream: &EventStream) -> TimeWindows {
    let (first, last) = stream.span().unwrap();
    TimeWindows::covering(first, last, WINDOW_US).unwrap()
}

fn two_spike_replay(suite: &mut Suite) {
    let geometry = SensorGeometry::new(16, 16).unwrap();
    let times_ms = [0u64, 1, 2, 3, 5, 7, 9, 14, 15, 16, 17];
    let events: Vec<Event> = times_ms
        .iter()
        .enumerate()
        .map(|(i, &t)| Event::new((i % 4) as u16, (i / 4) as u16, t * MS, 1))
        .collect();
    let stream = validate_stream(events.clone(), geometry).unwrap();
    let cfg = TokenizerConfig::plain(16, 4.0).with_refractory_us(10 * MS);
    let tokens = tokenize_stream(&cfg, &stream).unwrap();
    let expected = vec![
        Token {
            patch_x: 0,
            patch_y: 0,
            t_spike: 3 * MS,
            events: events[0..4].to_vec(),
        },
        Token {
            patch_x: 0,
            patch_y: 0,
            t_spike: 17 * MS,
            events: events[7..11].to_vec(),
        },
    ];
    suite.record(
        "two-spike refractory replay",
        tokens.tokens() == expected.as_slice(),
        format!("{} tokens, members e1..e4 and e8..e11 expected", tokens.len()),
    );
}

fn chunk_oracle_suite(suite: &mut Suite) {
    let mut mismatches = 0;
    let mut tokens = 0;
    for seed in 0..100 {
        let stream = random_stream(1_000 + seed, 100_000, 64, 48, 20);
        for sigma in [1usize, 2, 5, 25, 250] {
            let cfg = TokenizerConfig::plain(8, sigma as f64);
            let produced = tokenize_stream(&cfg, &stream).unwrap();
            tokens += produced.len();
            if produced.tokens() != chunk_oracle(stream.events(), 8, sigma).as_slice() {
                mismatches += 1;
            }
        }
    }
    suite.record(
        "per-patch chunking oracle",
        mismatches == 0,
        format!("100 seeds x 1e5 events x 5 thresholds, {tokens} tokens, {mismatches} mismatching runs"),
    );
}

fn reduction_identities(suite: &mut Suite) {
    let mut failed = [0usize; 4];
    for seed in 0..100 {
        let stream = random_stream(2_000 + seed, 20_000, 32, 32, 100);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sigma = f64::from(rng.random_range(1u32..20));
        let t = rng.random_range(0..5 * MS);
        let t_rel = rng.random_range(1..5 * MS);
        let alpha = rng.random_range(0.05..1.0);
        let plain = TokenizerConfig::plain(8, sigma).with_refractory_us(t);
        let tokens = |cfg: &TokenizerConfig| tokenize_stream(cfg, &stream).unwrap().into_tokens();
        let reference = tokens(&plain);

        let rrp = plain.with_relative_refractory(t_rel, alpha);
        if tokens(&rrp.with_decay(0.0)) != tokens(&rrp) {
            failed[0] += 1;
        }
        if tokens(&plain.with_relative_refractory(t_rel, 1.0)) != reference {
            failed[1] += 1;
        }
        if tokens(&plain.discrete(None)) != reference {
            failed[2] += 1;
        }
        let alpha_zero = tokens(&plain.with_relative_refractory(t_rel, 0.0));
        let extended = tokens(&TokenizerConfig::plain(8, sigma).with_refractory_us(t + t_rel));
        if spike_times(&alpha_zero) != spike_times(&extended) {
            failed[3] += 1;
        }
    }
    suite.record(
        "reduction identities",
        failed.iter().all(|&f| f == 0),
        format!(
            "100 seeds; failures: lambda=0 {}, alpha=1 {}, unbounded discrete {}, alpha=0 spike times {}",
            failed[0], failed[1], failed[2], failed[3]
        ),
    );
}

fn monotonicity(suite: &mut Suite) {
    let sigmas = [1.0, 2.0, 5.0, 25.0, 100.0, 250.0, 500.0];
    let refractories = [0, MS, 5 * MS, 25 * MS, 50 * MS, 100 * MS];
    let mut count_violations = 0;
    let mut checks = 0;
    let mut streams: Vec<EventStream> = (0..20).map(|s| random_stream(3_000 + s, 50_000, 64, 64, 40)).collect();
    streams.extend((0..3).map(|s| gen1_like(30 + s, 1_000_000)));
    for stream in &streams {
        for &t in &refractories {
            let counts: Vec<usize> = sigmas
                .iter()
                .map(|&s| tokenize_stream(&TokenizerConfig::plain(16, s).with_refractory_us(t), stream).unwrap().len())
                .collect();
            checks += counts.len() - 1;
            count_violations += counts.windows(2).filter(|w| w[1] > w[0]).count();
        }
        for &s in &sigmas {
            let counts: Vec<usize> = refractories
                .iter()
                .map(|&t| tokenize_stream(&TokenizerConfig::plain(16, s).with_refractory_us(t), stream).unwrap().len())
                .collect();
            checks += counts.len() - 1;
            count_violations += counts.windows(2).filter(|w| w[1] > w[0]).count();
        }
    }

    let mut sparsity_violations = 0;
    let mut sparsity_checks = 0;
    for stream in &streams[20..] {
        let windows = input_windows(stream);
        let geometry = stream.geometry();
        let by_sigma: Vec<f64> = [64.0, 128.0, 250.0, 256.0, 512.0, 1024.0]
            .iter()
            .map(|&s| {
                let tokens = tokenize_stream(&TokenizerConfig::plain(16, s), stream).unwrap();
                token_sparsity_over(tokens.tokens(), geometry, 16, &windows).unwrap().mean_pct()
            })
            .collect();
        let voxel_windows = TimeWindows::new(WINDOW_US, WINDOW_US, windows.count + 1).unwrap();
        let by_min_events: Vec<f64> = [1, 2, 4, 8, 16, 32, 64]
            .iter()
            .map(|&m| {
                let cfg = VoxelConfig {
                    min_events: m,
                    ..Default::default()
                };
                let tokens = voxelize(stream, &cfg).unwrap();
                token_sparsity_over(tokens.tokens(), geometry, 16, &voxel_windows).unwrap().mean_pct()
            })
            .collect();
        for series in [&by_sigma, &by_min_events] {
            sparsity_checks += series.len() - 1;
            sparsity_violations += series.windows(2).filter(|w| w[1] < w[0]).count();
        }
    }
    suite.record(
        "monotonicity",
        count_violations == 0 && sparsity_violations == 0,
        format!(
            "token count: {count_violations} violations in {checks} steps over {} streams; \
             sparsity in sigma and min_events: {sparsity_violations} violations in {sparsity_checks} steps",
            streams.len()
        ),
    );
}

fn refractory_reduction(suite: &mut Suite) {
    let stream = gen1_like(0, 5_000_000);
    let windows = input_windows(&stream);
    let events_per_window = stream.len() as f64 / windows.count as f64;
    let means: Vec<f64> = [0, 25, 50, 100]
        .iter()
        .map(|&t_ms| {
            let cfg = TokenizerConfig::plain(16, 250.0).with_refractory_us(t_ms * MS);
            let tokens = tokenize_stream(&cfg, &stream).unwrap();
            token_count_stats_over(tokens.tokens(), &windows).unwrap().mean_per_window
        })
        .collect();
    let voxels = voxelize(&stream, &VoxelConfig::default()).unwrap();
    let voxel_mean = voxels.len() as f64 / windows.count as f64;
    let factor = means[0] / means[3];
    suite.record(
        "refractory input-size reduction",
        (REDUCTION_RANGE.0..=REDUCTION_RANGE.1).contains(&factor),
        format!(
            "synthetic 304x240 stream, {events_per_window:.0} events/50 ms, {voxel_mean:.0} voxels/50 ms; \
             tokens/50 ms at T=0/25/50/100 ms: {:.1}/{:.1}/{:.1}/{:.1}; factor {factor:.2} (want {}-{})",
            means[0], means[1], means[2], means[3], REDUCTION_RANGE.0, REDUCTION_RANGE.1
        ),
    );
}

fn frame_sparsity(suite: &mut Suite) {
    let grid = PatchGrid::new(gen1_geometry(), 16).unwrap();
    let mut worst = 0.0f64;
    let inputs = [
        gen1_like(7, 400_000),
        random_stream(4_000, 5_000, 100, 37, 500),
        random_stream(4_001, 50, 304, 240, 20_000),
    ];
    for stream in &inputs {
        for (p, d) in [(16u16, WINDOW_US), (5, 7 * MS), (32, 100 * MS)] {
            let tokens = frame_patches(stream, &FrameConfig { patch_size: p, duration_us: d }).unwrap();
            let series = token_sparsity(tokens.tokens(), stream.geometry(), p, d).unwrap();
            worst = series.windows.iter().map(|w| w.sparsity_pct).fold(worst, f64::max);
        }
    }
    suite.record(
        "frame sparsity and grid size",
        worst == 0.0 && grid.len() == 285,
        format!("max frame sparsity {worst}% over 9 runs; 304x240 at P=16 gives {} cells", grid.len()),
    );
}

fn bucket_oracle(delta_us: u64) -> usize {
    let mut bucket = 0;
    while bucket < 9 && delta_us >= MS << bucket {
        bucket += 1;
    }
    bucket
}

fn histograms(suite: &mut Suite) {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let geometry = SensorGeometry::new(128, 128).unwrap();
    let mut bad_totals = 0;
    let mut bad_cells = 0;
    for _ in 0..10_000 {
        let p: u16 = [4, 8, 16][rng.random_range(0..3)];
        let (px, py) = (rng.random_range(0..128 / p), rng.random_range(0..128 / p));
        let t_spike = 1_000_000 + rng.random_range(0..1_000_000u64);
        let n = rng.random_range(1..300);
        let mut events: Vec<Event> = (0..n)
            .map(|_| {
                let delta = rng.random_range(0..600 * MS);
                Event::new(
                    px * p + rng.random_range(0..p),
                    py * p + rng.random_range(0..p),
                    t_spike - delta,
                    if rng.random_bool(0.5) { 1 } else { -1 },
                )
            })
            .collect();
        events.sort_by_key(|e| e.t);
        assert!(events.iter().all(|e| geometry.contains(e.x, e.y)));
        let token = Token {
            patch_x: px,
            patch_y: py,
            t_spike,
            events,
        };
        let hist = stacked_histogram(&token, p).unwrap();
        if hist.total() != n as u64 {
            bad_totals += 1;
        }
        let mut expected = vec![0u32; hist.as_flat().len()];
        for e in &token.events {
            let (row, col) = (usize::from(e.y - py * p), usize::from(e.x - px * p));
            let channel = 2 * bucket_oracle(t_spike - e.t) + usize::from(e.p > 0);
            expected[(row * usize::from(p) + col) * 20 + channel] += 1;
        }
        if hist.as_flat() != expected.as_slice() {
            bad_cells += 1;
        }
    }

    let mut table_errors = Vec::new();
    let mut probes = vec![(0.0, 0), (0.999, 0)];
    for (k, &edge) in DEFAULT_BUCKET_EDGES_US.iter().enumerate() {
        let edge_ms = edge as f64 / 1_000.0;
        probes.push((edge_ms, k + 1));
        probes.push((edge_ms * 2.0 - 0.001, k + 1));
    }
    probes.push((1e6, 9));
    for &(ms, bucket) in &probes {
        if time_bucket(ms).unwrap() != bucket {
            table_errors.push(ms);
        }
    }
    suite.record(
        "histogram conservation and bucket table",
        bad_totals == 0 && bad_cells == 0 && table_errors.is_empty(),
        format!(
            "10000 random tokens: {bad_totals} wrong totals, {bad_cells} wrong tensors; \
             {} boundary probes, {} wrong",
            probes.len(),
            table_errors.len()
        ),
    );
}

fn best_rate(stream: &EventStream, cfg: &TokenizerConfig, repeats: usize) -> (f64, f64) {
    let mut best = f64::INFINITY;
    for _ in 0..repeats {
        let start = Instant::now();
        let tokens = std::hint::black_box(tokenize_stream(cfg, stream).unwrap());
        best = best.min(start.elapsed().as_secs_f64());
        drop(tokens);
    }
    (stream.len() as f64 / best, best)
}

fn throughput(suite: &mut Suite) {
    let stream = gen1_like(11, 3_000_000);
    let plain = TokenizerConfig::plain(16, 256.0);
    let (plain_rate, _) = best_rate(&stream, &plain, 5);

    let configs = [
        ("sigma=250", TokenizerConfig::plain(16, 250.0)),
        ("T=25ms", TokenizerConfig::plain(16, 250.0).with_refractory_us(25 * MS)),
        (
            "T=25ms+RRP",
            TokenizerConfig::plain(16, 250.0)
                .with_refractory_us(25 * MS)
                .with_relative_refractory(100 * MS, 0.5),
        ),
        ("decay", TokenizerConfig::plain(16, 250.0).with_decay(1e-4)),
        ("discrete", TokenizerConfig::plain(16, 250.0).discrete(Some(50 * MS))),
        ("P=4 sigma=16", TokenizerConfig::plain(4, 16.0)),
        ("P=32 sigma=1024", TokenizerConfig::plain(32, 1024.0)),
    ];
    let mut slowest = f64::INFINITY;
    let mut slowest_name = "";
    for (name, cfg) in &configs {
        let (rate, _) = best_rate(&stream, cfg, 3);
        if rate < slowest {
            slowest = rate;
            slowest_name = name;
        }
    }

    let n = 1_000_000;
    let doubled = gen1_like(12, 3_000_000);
    let doubled = validate_stream(doubled.events()[..2 * n].to_vec(), doubled.geometry()).unwrap();
    let half = validate_stream(doubled.events()[..n].to_vec(), doubled.geometry()).unwrap();
    let (_, t_n) = best_rate(&half, &plain, 7);
    let (_, t_2n) = best_rate(&doubled, &plain, 7);
    let ratio = t_2n / t_n;

    let voxel_start = Instant::now();
    let voxels = voxelize(&stream, &VoxelConfig::default()).unwrap();
    let voxel_rate = stream.len() as f64 / voxel_start.elapsed().as_secs_f64();
    drop(voxels);

    suite.record(
        "tokenization throughput",
        plain_rate >= PLAIN_MIN_EVENTS_PER_S
            && slowest >= ANY_CONFIG_MIN_EVENTS_PER_S
            && ratio <= MAX_DOUBLING_RATIO,
        format!(
            "plain {:.1}M ev/s (min {:.1}M); slowest config {slowest_name} {:.1}M ev/s (min {:.1}M); \
             time(2N)/time(N) = {ratio:.2} at N=1e6 (max {MAX_DOUBLING_RATIO}); voxelizer {:.1}M ev/s",
            plain_rate / 1e6,
            PLAIN_MIN_EVENTS_PER_S / 1e6,
            slowest / 1e6,
            ANY_CONFIG_MIN_EVENTS_PER_S / 1e6,
            voxel_rate / 1e6
        ),
    );
}

fn cli_outputs(dir: &std::path::Path) -> Vec<Vec<u8>> {
    let p = |name: &str| dir.join(name).to_str().unwrap().to_owned();
    let (events, csv, tokens, voxels, frames, hist, sparsity, curve) = (
        p("in.evs"),
        p("in.csv"),
        p("tokens.jsonl"),
        p("voxels.jsonl"),
        p("frames.jsonl"),
        p("hist.bin"),
        p("sparsity.jsonl"),
        p("curve.jsonl"),
    );
    let commands: Vec<Vec<&str>> = vec![
        vec!["generate", "poisson", "--duration-ms", "300", "--seed", "3", "-o", &events],
        vec!["generate", "bar", "--noise-rate", "500", "--seed", "3", "-o", &csv],
        vec!["tokenize", &events, "--threshold", "250", "--refractory-ms", "25", "--with-events", "-o", &tokens],
        vec!["voxelize", &csv, "--width", "304", "--height", "240", "-o", &voxels],
        vec!["frames", &events, "-o", &frames],
        vec!["embed", &tokens, "-o", &hist],
        vec!["analyze", "sparsity", "--events", &events, "--tokens", &tokens, "--records", &sparsity],
        vec!["analyze", "accumulate", &events, "--tokens", &tokens, "--records", &curve],
        vec!["analyze", "counts", &tokens],
        vec!["analyze", "delay", &events, "--tokens", &tokens],
        vec!["bench", &events, "--repeats", "1"],
    ];
    let mut stdout = Vec::new();
    for args in &commands {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = spiking_patches::cli::run(std::iter::once("spikepatch").chain(args.iter().copied()), &mut out, &mut err);
        assert_eq!(code, 0, "{args:?}: {}", String::from_utf8_lossy(&err));
        // timing lines are the only non-reproducible output
        let text = String::from_utf8(out).unwrap();
        for line in text.lines().filter(|l| !l.starts_with("wall_seconds=") && !l.starts_with("events_per_second=")) {
            stdout.extend_from_slice(line.as_bytes());
            stdout.push(b'\n');
        }
    }
    let mut files: Vec<Vec<u8>> = [&events, &csv, &tokens, &voxels, &frames, &hist, &sparsity, &curve]
        .iter()
        .map(|f| std::fs::read(f).unwrap())
        .collect();
    files.push(stdout);
    files
}

fn determinism(suite: &mut Suite) {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let identical = cli_outputs(a.path()) == cli_outputs(b.path());

    let mut round_trip_failures = 0;
    let mut streams: Vec<EventStream> = (0..20).map(|s| random_stream(5_000 + s, 10_000, 304, 240, 300)).collect();
    streams.push(gen1_like(21, 200_000));
    for stream in &streams {
        let mut evs = Vec::new();
        write_evs_to(stream, &mut evs).unwrap();
        let back = read_evs_from(&mut evs.as_slice()).unwrap();
        let mut evs_again = Vec::new();
        write_evs_to(&back, &mut evs_again).unwrap();
        let mut csv = Vec::new();
        write_csv_to(stream, &mut csv).unwrap();
        let back_csv = read_csv_from(csv.as_slice(), stream.geometry()).unwrap();
        let mut csv_again = Vec::new();
        write_csv_to(&back_csv, &mut csv_again).unwrap();
        if &back != stream || evs != evs_again || &back_csv != stream || csv != csv_again {
            round_trip_failures += 1;
        }
    }
    suite.record(
        "determinism and round trips",
        identical && round_trip_failures == 0,
        format!(
            "11 CLI commands run twice: {}; .evs and CSV round trips: {round_trip_failures} failures in {}",
            if identical { "byte-identical" } else { "outputs differ" },
            streams.len()
        ),
    );
}

fn delay(suite: &mut Suite) {
    let geometry = SensorGeometry::new(16, 16).unwrap();
    let events: Vec<Event> = (0..3_000).map(|k| Event::new(3, 5, k * MS, 1)).collect();
    let stream = validate_stream(events, geometry).unwrap();
    let event_curve = AccumulationCurve::from_events(stream.events());
    let delays_ms: Vec<f64> = [1.0, 10.0, 50.0, 150.0]
        .iter()
        .map(|&sigma| {
            let tokens = tokenize_stream(&TokenizerConfig::plain(16, sigma), &stream).unwrap();
            delay_estimate(&event_curve, &AccumulationCurve::from_tokens(tokens.tokens())).unwrap() / 1_000.0
        })
        .collect();
    let closed_form: Vec<f64> = [1.0, 10.0, 50.0, 150.0].iter().map(|s: &f64| (s - 1.0) / 2.0).collect();
    let at_10 = delays_ms[1];
    let monotone = delays_ms.windows(2).all(|w| w[1] >= w[0]);
    suite.record(
        "delay on uniform arrivals",
        (at_10 - DELAY_SIGMA_10_MS).abs() <= DELAY_TOLERANCE_MS && monotone,
        format!(
            "sigma 1/10/50/150 -> {:.2}/{:.2}/{:.2}/{:.2} ms (closed form {:.1}/{:.1}/{:.1}/{:.1}); \
             want {DELAY_SIGMA_10_MS} +- {DELAY_TOLERANCE_MS} at sigma 10, non-decreasing",
            delays_ms[0], delays_ms[1], delays_ms[2], delays_ms[3],
            closed_form[0], closed_form[1], closed_form[2], closed_form[3]
        ),
    );
}

fn main() {
    let mut suite = Suite { failures: 0 };
    let started = Instant::now();
    two_spike_replay(&mut suite);
    chunk_oracle_suite(&mut suite);
    reduction_identities(&mut suite);
    monotonicity(&mut suite);
    refractory_reduction(&mut suite);
    frame_sparsity(&mut suite);
    histograms(&mut suite);
    throughput(&mut suite);
    determinism(&mut suite);
    delay(&mut suite);
    println!(
        "acceptance: {} failed, {:.1}s",
        suite.failures,
        started.elapsed().as_secs_f64()
    );
    if suite.failures > 0 {
        std::process::exit(1);
    }
}
