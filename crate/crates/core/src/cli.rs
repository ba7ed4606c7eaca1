//! The `spikepatch` command-line front end.
//!
//! Durations are given in milliseconds and converted to microseconds. Event
//! inputs are `.evs` files, or `.csv` files together with `--width` and
//! `--height`. Exit codes: 0 on success, 1 on usage errors (bad flags or
//! parameter values), 2 on data errors (unreadable or invalid input).

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analysis::{
    bench_throughput, bench_voxelize, delay_estimate, event_sparsity, token_count_stats_over,
    token_sparsity, write_json_lines, AccumulationCurve, AnalysisError, KeyValueReport,
    SparsityReport, SparsitySeries, TimeWindows, WindowSparsity,
};
use crate::baseline::{frame_patches, voxelize, BaselineError, FrameConfig, VoxelConfig};
use crate::embedding::{stacked_histogram, write_histogram, EmbeddingError};
use crate::event::{EventStream, SensorGeometry, StreamError};
use crate::io::{
    generate_moving_bar, generate_patch_activity, read_csv, read_evs, read_tokens, write_csv,
    write_evs, write_tokens, IoError, MovingBarSpec, PatchActivitySpec, TokenFile,
};
use crate::spiking::{tokenize_stream, tokenize_stream_sharded, TokenizeError, TokenizerConfig, Variant};
use crate::token::TokenStream;

#[derive(Debug, Parser)]
#[command(name = "spikepatch", version, about = "Tokenize event-camera streams with spiking patches")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic event stream.
    #[command(subcommand)]
    Generate(Generate),
    /// Tokenize events with spiking patches.
    Tokenize(TokenizeArgs),
    /// Group events into fixed-duration voxels.
    Voxelize(VoxelizeArgs),
    /// Cut events into dense frame patches.
    Frames(FramesArgs),
    /// Write stacked-histogram embeddings of a token file.
    Embed(EmbedArgs),
    /// Measure event and token streams.
    #[command(subcommand)]
    Analyze(Analyze),
    /// Time single-threaded tokenization.
    Bench(BenchArgs),
}

#[derive(Debug, Subcommand)]
enum Generate {
    /// A bar sweeping left to right.
    Bar(BarArgs),
    /// Poisson activity with heavy-tailed per-patch rates.
    Poisson(PoissonArgs),
}

#[derive(Debug, Args)]
struct SensorArgs {
    #[arg(long, default_value_t = 304)]
    width: u16,
    #[arg(long, default_value_t = 240)]
    height: u16,
}

#[derive(Debug, Args)]
struct BarArgs {
    #[command(flatten)]
    sensor: SensorArgs,
    #[arg(long, default_value_t = 8)]
    bar_width: u16,
    #[arg(long, default_value_t = 32)]
    bar_height: u16,
    #[arg(long, default_value_t = 0)]
    top_row: u16,
    #[arg(long, default_value_t = 0)]
    start_column: u16,
    /// Columns traversed by the leading edge.
    #[arg(long, default_value_t = 64)]
    columns: u16,
    /// Pixels per second.
    #[arg(long, default_value_t = 1000.0)]
    velocity: f64,
    /// Background noise events per second.
    #[arg(long, default_value_t = 0.0)]
    noise_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (`.evs` or `.csv`).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct PoissonArgs {
    #[command(flatten)]
    sensor: SensorArgs,
    #[arg(long, value_parser = parse_ms, default_value = "2000")]
    duration_ms: u64,
    /// Events per second over the whole sensor.
    #[arg(long, default_value_t = 716_700.0)]
    rate: f64,
    /// Log-normal shape of the per-patch rate spread.
    #[arg(long, default_value_t = 1.8)]
    spread: f64,
    /// Patch size the rates are assigned to.
    #[arg(long, default_value_t = 16)]
    patch_size: u16,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path (`.evs` or `.csv`).
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EventInput {
    /// Event file (`.evs`, or `.csv` with `--width` and `--height`).
    input: PathBuf,
    /// Sensor width for CSV input.
    #[arg(long)]
    width: Option<u16>,
    /// Sensor height for CSV input.
    #[arg(long)]
    height: Option<u16>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Plain,
    Decay,
    Discrete,
}

#[derive(Debug, Args)]
struct TokenizerArgs {
    #[arg(long, default_value_t = 16)]
    patch_size: u16,
    /// Spike threshold.
    #[arg(long, default_value_t = 256.0)]
    threshold: f64,
    /// Absolute refractory period.
    #[arg(long, value_parser = parse_ms, default_value = "0")]
    refractory_ms: u64,
    #[arg(long, value_enum, default_value_t = VariantArg::Plain)]
    variant: VariantArg,
    /// Potential leak per millisecond (decay variant).
    #[arg(long, default_value_t = 0.0)]
    decay_lambda: f64,
    /// Relative refractory period following the absolute one.
    #[arg(long, value_parser = parse_ms, default_value = "0")]
    rrp_ms: u64,
    /// Input gain inside the relative refractory period.
    #[arg(long, default_value_t = 0.5)]
    rrp_alpha: f64,
    /// Longest token span (discrete variant); unbounded when absent.
    #[arg(long, value_parser = parse_ms)]
    t_max_ms: Option<u64>,
}

impl TokenizerArgs {
    fn config(&self) -> TokenizerConfig {
        TokenizerConfig {
            patch_size: self.patch_size,
            threshold: self.threshold,
            refractory_us: self.refractory_ms,
            relative_refractory_us: self.rrp_ms,
            relative_scale: self.rrp_alpha,
            decay_per_us: self.decay_lambda / 1_000.0,
            max_token_span_us: self.t_max_ms,
            variant: match self.variant {
                VariantArg::Plain => Variant::Plain,
                VariantArg::Decay => Variant::Decay,
                VariantArg::Discrete => Variant::Discrete,
            },
        }
    }
}

#[derive(Debug, Args)]
struct TokenizeArgs {
    #[command(flatten)]
    input: EventInput,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Worker threads; the output does not depend on it.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Include member events in the token file.
    #[arg(long)]
    with_events: bool,
    /// Token file to write.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct VoxelizeArgs {
    #[command(flatten)]
    input: EventInput,
    #[arg(long, default_value_t = 16)]
    patch_size: u16,
    #[arg(long, value_parser = parse_ms, default_value = "50")]
    duration_ms: u64,
    /// Voxels with fewer events are dropped.
    #[arg(long, default_value_t = 1)]
    min_events: usize,
    #[arg(long)]
    with_events: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct FramesArgs {
    #[command(flatten)]
    input: EventInput,
    #[arg(long, default_value_t = 16)]
    patch_size: u16,
    #[arg(long, value_parser = parse_ms, default_value = "50")]
    duration_ms: u64,
    #[arg(long)]
    with_events: bool,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Args)]
struct EmbedArgs {
    /// Token file written with `--with-events`.
    tokens: PathBuf,
    /// Binary histogram file to write.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Analyze {
    /// Share of empty pixels or patches per window.
    Sparsity(SparsityArgs),
    /// Cumulative events made available over time.
    Accumulate(CurveArgs),
    /// Mean tokens per window.
    Counts(CountsArgs),
    /// Mean time an event waits before delivery in a token.
    Delay(CurveArgs),
}

#[derive(Debug, Args)]
struct SparsityArgs {
    /// Event file to measure at pixel level.
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    width: Option<u16>,
    #[arg(long)]
    height: Option<u16>,
    /// Token file to measure at patch level.
    #[arg(long)]
    tokens: Option<PathBuf>,
    #[arg(long, value_parser = parse_window_ms, default_value = "50")]
    window_ms: u64,
    /// Per-window records as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CurveArgs {
    #[command(flatten)]
    input: EventInput,
    /// Token file from the same events.
    #[arg(long)]
    tokens: PathBuf,
    /// Curve breakpoints as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CountsArgs {
    tokens: PathBuf,
    #[arg(long, value_parser = parse_window_ms, default_value = "50")]
    window_ms: u64,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    input: EventInput,
    #[command(flatten)]
    tokenizer: TokenizerArgs,
    /// Time the voxelizer (50 ms, min 1 event) instead of the tokenizer.
    #[arg(long)]
    voxels: bool,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
}

fn parse_ms(raw: &str) -> Result<u64, String> {
    let ms: f64 = raw.parse().map_err(|_| format!("{raw:?} is not a number of milliseconds"))?;
    if !ms.is_finite() || ms < 0.0 {
        return Err(format!("{raw:?} must be a non-negative duration"));
    }
    let us = (ms * 1_000.0).round();
    if us > u64::MAX as f64 {
        return Err(format!("{raw:?} is too long"));
    }
    Ok(us as u64)
}

fn parse_window_ms(raw: &str) -> Result<u64, String> {
    match parse_ms(raw)? {
        0 => Err(format!("{raw:?} must be at least 1 us")),
        us => Ok(us),
    }
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) => m,
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<StreamError> for CliError {
    fn from(e: StreamError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TokenizeError> for CliError {
    fn from(e: TokenizeError) -> Self {
        match e {
            TokenizeError::InvalidConfig(c) => CliError::Usage(c.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        match e {
            AnalysisError::ZeroWindow | AnalysisError::ZeroRepeats | AnalysisError::ZeroPatchSize => {
                CliError::Usage(e.to_string())
            }
            AnalysisError::Tokenize(t) => t.into(),
            AnalysisError::Baseline(b) => b.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    1
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message());
            e.code()
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Generate(Generate::Bar(a)) => generate_bar(a, out),
        Command::Generate(Generate::Poisson(a)) => generate_poisson(a, out),
        Command::Tokenize(a) => tokenize(a, out),
        Command::Voxelize(a) => run_voxelize(a, out),
        Command::Frames(a) => run_frames(a, out),
        Command::Embed(a) => embed(a, out),
        Command::Analyze(Analyze::Sparsity(a)) => analyze_sparsity(a, out),
        Command::Analyze(Analyze::Accumulate(a)) => analyze_accumulate(a, out),
        Command::Analyze(Analyze::Counts(a)) => analyze_counts(a, out),
        Command::Analyze(Analyze::Delay(a)) => analyze_delay(a, out),
        Command::Bench(a) => bench(a, out),
    }
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn geometry(width: Option<u16>, height: Option<u16>) -> Result<SensorGeometry, CliError> {
    match (width, height) {
        (Some(w), Some(h)) => SensorGeometry::new(w, h).map_err(|e| CliError::Usage(e.to_string())),
        _ => Err(CliError::Usage("CSV input needs --width and --height".into())),
    }
}

fn load_events(path: &Path, width: Option<u16>, height: Option<u16>) -> Result<EventStream, CliError> {
    if is_csv(path) {
        Ok(read_csv(path, geometry(width, height)?)?)
    } else {
        Ok(read_evs(path)?)
    }
}

impl EventInput {
    fn load(&self) -> Result<EventStream, CliError> {
        load_events(&self.input, self.width, self.height)
    }
}

fn save_events(stream: &EventStream, path: &Path) -> Result<(), CliError> {
    if is_csv(path) {
        write_csv(stream, path)?;
    } else {
        write_evs(stream, path)?;
    }
    Ok(())
}

fn sensor(args: &SensorArgs) -> Result<SensorGeometry, CliError> {
    SensorGeometry::new(args.width, args.height).map_err(|e| CliError::Usage(e.to_string()))
}

fn usage_on_spec(e: IoError) -> CliError {
    match e {
        IoError::SpecOutOfBounds(m) => CliError::Usage(m),
        other => other.into(),
    }
}

fn generate_bar(a: BarArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = MovingBarSpec {
        bar_width: a.bar_width,
        bar_height: a.bar_height,
        top_row: a.top_row,
        start_column: a.start_column,
        columns: a.columns,
        velocity_px_per_s: a.velocity,
        noise_rate_per_s: a.noise_rate,
        seed: a.seed,
    };
    let stream = generate_moving_bar(&spec, sensor(&a.sensor)?).map_err(usage_on_spec)?;
    save_events(&stream, &a.output)?;
    writeln!(out, "events={}", stream.len())?;
    Ok(())
}

fn generate_poisson(a: PoissonArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = PatchActivitySpec {
        duration_us: a.duration_ms,
        events_per_second: a.rate,
        patch_size: a.patch_size,
        activity_spread: a.spread,
        seed: a.seed,
    };
    let stream = generate_patch_activity(&spec, sensor(&a.sensor)?).map_err(usage_on_spec)?;
    save_events(&stream, &a.output)?;
    writeln!(out, "events={}", stream.len())?;
    Ok(())
}

fn report_tokens(tokens: &TokenStream, out: &mut dyn Write) -> Result<(), CliError> {
    writeln!(out, "events={}", tokens.input_events())?;
    writeln!(out, "tokens={}", tokens.len())?;
    writeln!(out, "tokenized_events={}", tokens.member_events())?;
    Ok(())
}

fn tokenize(a: TokenizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.threads == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    let config = a.tokenizer.config();
    config.validate().map_err(TokenizeError::from)?;
    let stream = a.input.load()?;
    let tokens = if a.threads == 1 {
        tokenize_stream(&config, &stream)?
    } else {
        tokenize_stream_sharded(&config, &stream, a.threads)?
    };
    write_tokens(&tokens, a.with_events, &a.output)?;
    report_tokens(&tokens, out)
}

fn run_voxelize(a: VoxelizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = VoxelConfig {
        patch_size: a.patch_size,
        duration_us: a.duration_ms,
        min_events: a.min_events,
    };
    config.validate()?;
    let tokens = voxelize(&a.input.load()?, &config)?;
    write_tokens(&tokens, a.with_events, &a.output)?;
    report_tokens(&tokens, out)
}

fn run_frames(a: FramesArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = FrameConfig {
        patch_size: a.patch_size,
        duration_us: a.duration_ms,
    };
    config.validate()?;
    let tokens = frame_patches(&a.input.load()?, &config)?;
    write_tokens(&tokens, a.with_events, &a.output)?;
    report_tokens(&tokens, out)
}

fn load_tokens(path: &Path) -> Result<TokenFile, CliError> {
    Ok(read_tokens(path)?)
}

fn embed(a: EmbedArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load_tokens(&a.tokens)?;
    let tokens = file
        .tokens()
        .ok_or_else(|| CliError::Data("token file has no member events; tokenize with --with-events".into()))?;
    let mut sink = BufWriter::new(File::create(&a.output)?);
    let mut channels = 0;
    for token in &tokens {
        let hist = stacked_histogram(token, file.header.patch_size)?;
        channels = hist.channels();
        write_histogram(&hist, &mut sink)?;
    }
    sink.flush()?;
    writeln!(out, "tokens={}", tokens.len())?;
    writeln!(out, "patch_size={}", file.header.patch_size)?;
    writeln!(out, "channels={channels}")?;
    Ok(())
}

#[derive(Serialize)]
struct SeriesRecord<'a> {
    series: &'static str,
    #[serde(flatten)]
    window: &'a WindowSparsity,
}

fn analyze_sparsity(a: SparsityArgs, out: &mut dyn Write) -> Result<(), CliError> {
    if a.events.is_none() && a.tokens.is_none() {
        return Err(CliError::Usage("give --events, --tokens or both".into()));
    }
    let events = match &a.events {
        Some(path) => {
            let stream = load_events(path, a.width, a.height)?;
            Some(event_sparsity(stream.events(), stream.geometry(), a.window_ms)?)
        }
        None => None,
    };
    let tokens = match &a.tokens {
        Some(path) => {
            let file = load_tokens(path)?;
            let geometry = file.header.geometry()?;
            Some(token_sparsity(&file.records, geometry, file.header.patch_size, a.window_ms)?)
        }
        None => None,
    };

    let mut records = Vec::new();
    let mut emit = |name: &'static str, series: &SparsitySeries, out: &mut dyn Write| -> Result<(), CliError> {
        for (key, value) in series.key_values() {
            writeln!(out, "{name}.{key}={value}")?;
        }
        records.extend(series.windows.iter().map(|w| (name, *w)));
        Ok(())
    };
    if let Some(series) = &events {
        emit("events", series, out)?;
    }
    if let Some(series) = &tokens {
        emit("tokens", series, out)?;
    }
    if let (Some(e), Some(t)) = (events, tokens) {
        let report = SparsityReport::compare(e, t);
        writeln!(out, "mean_difference_pct={:.6}", report.mean_difference_pct)?;
    }
    if let Some(path) = &a.records {
        let rows: Vec<SeriesRecord> = records
            .iter()
            .map(|(series, window)| SeriesRecord { series, window })
            .collect();
        let mut sink = BufWriter::new(File::create(path)?);
        write_json_lines(&rows, &mut sink)?;
        sink.flush()?;
    }
    Ok(())
}

fn curves(a: &CurveArgs) -> Result<(AccumulationCurve, AccumulationCurve), CliError> {
    let stream = a.input.load()?;
    let file = load_tokens(&a.tokens)?;
    Ok((
        AccumulationCurve::from_events(stream.events()),
        AccumulationCurve::from_tokens(&file.records),
    ))
}

#[derive(Serialize)]
struct CurvePoint {
    series: &'static str,
    t_us: u64,
    count: u64,
}

fn analyze_accumulate(a: CurveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (events, tokens) = curves(&a)?;
    writeln!(out, "events_total={}", events.total())?;
    writeln!(out, "tokens_total={}", tokens.total())?;
    writeln!(out, "event_breakpoints={}", events.points().len())?;
    writeln!(out, "token_breakpoints={}", tokens.points().len())?;
    if let Some(path) = &a.records {
        let rows: Vec<CurvePoint> = [("events", &events), ("tokens", &tokens)]
            .into_iter()
            .flat_map(|(series, curve)| {
                curve.points().iter().map(move |&(t_us, count)| CurvePoint { series, t_us, count })
            })
            .collect();
        let mut sink = BufWriter::new(File::create(path)?);
        write_json_lines(&rows, &mut sink)?;
        sink.flush()?;
    }
    Ok(())
}

fn analyze_delay(a: CurveArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let (events, tokens) = curves(&a)?;
    let delay_us = delay_estimate(&events, &tokens)?;
    writeln!(out, "tokenized_events={}", tokens.total())?;
    writeln!(out, "delay_ms={:.6}", delay_us / 1_000.0)?;
    Ok(())
}

fn analyze_counts(a: CountsArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let file = load_tokens(&a.tokens)?;
    let (first, last) = file
        .header
        .input_span_us
        .ok_or_else(|| CliError::Data("token file was made from an empty stream".into()))?;
    let windows = TimeWindows::covering(first, last, a.window_ms)?;
    let stats = token_count_stats_over(&file.records, &windows)?;
    stats.write_key_values(out)?;
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let stream = a.input.load()?;
    let report = if a.voxels {
        bench_voxelize(&stream, &VoxelConfig::default(), a.repeats)?
    } else {
        bench_throughput(&stream, &a.tokenizer.config(), a.repeats)?
    };
    report.write_key_values(out)?;
    Ok(())
}
