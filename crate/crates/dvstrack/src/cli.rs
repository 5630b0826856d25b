//! Command-line surface: `simulate`, `track`, `bench` and `replay`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use dvstrack_core::coding::{complete_bins, Frames};
use dvstrack_core::sim::{generate_events, BallScene, SceneKind, SceneSpec, SensorParams};
use dvstrack_core::tracker::track_iter;
use dvstrack_core::{
    frame_stats, validate_stream, BinningConfig, BoundingBox, EventStream, PolarityMode, TrackError, TrackerConfig,
};

use crate::bench::bench;
use crate::io::{read_events, write_events, EventFormat};
use crate::manifest::{manifest_path, Manifest};
use crate::render::{frame_file_name, render_ppm};
use crate::trajectory::write_trajectory;

/// Failure of a command, mapped onto a stable exit status.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Empty(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::Empty(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "dvstrack",
    version,
    about = "Simulate, track and benchmark DVS event streams"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render a synthetic scene and write its event stream.
    Simulate {
        #[command(subcommand)]
        scene: SceneCommand,
    },
    /// Track a bounding box through an event file.
    Track(TrackArgs),
    /// Measure tracking throughput on an event file.
    Bench(BenchArgs),
    /// Re-run the command recorded in a manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
pub enum SceneCommand {
    /// Bright disk bouncing over a dark background.
    Ball(BallArgs),
    /// Digit on cluttered paper panned across the sensor.
    Texture(TextureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Text,
    Aedat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolarityArg {
    Both,
    On,
    Off,
}

#[derive(Debug, Clone, Args)]
pub struct SensorArgs {
    /// Scene duration in seconds [default: 6 for ball, 4 for texture].
    #[arg(long)]
    pub duration_s: Option<f64>,
    /// Bin length used for the events-per-bin summary.
    #[arg(long, default_value_t = 10.0)]
    pub bin_preview_ms: f64,
    /// Log-intensity contrast threshold.
    #[arg(long, default_value_t = 0.1)]
    pub theta: f64,
    /// Background events per pixel per second.
    #[arg(long, default_value_t = 0.0)]
    pub noise_rate: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub render_period_us: u64,
    #[arg(long, value_enum, default_value_t = FormatArg::Text)]
    pub format: FormatArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct BallArgs {
    /// Ball radius in pixels.
    #[arg(long, default_value_t = 6.0)]
    pub radius: f64,
    /// Initial center X,Y in pixels.
    #[arg(long, value_parser = parse_pair, default_value = "40,30", allow_hyphen_values = true)]
    pub start: (f64, f64),
    /// Velocity VX,VY in pixels per second.
    #[arg(long, value_parser = parse_pair, default_value = "60,60", allow_hyphen_values = true)]
    pub velocity: (f64, f64),
    #[arg(long, default_value_t = 12.0)]
    pub fg: f64,
    #[arg(long, default_value_t = 1.0)]
    pub bg: f64,
    /// Reflect the center off walls this far inside the frame edge.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub bounce: bool,
    #[arg(long, default_value_t = 10.0)]
    pub margin: f64,
    #[command(flatten)]
    pub sensor: SensorArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TextureArgs {
    /// Pan velocity VX,VY in pixels per second.
    #[arg(long, value_parser = parse_pair, default_value = "60,60", allow_hyphen_values = true)]
    pub velocity: (f64, f64),
    /// Number of clutter rectangles around the digit.
    #[arg(long, default_value_t = 10)]
    pub clutter: usize,
    #[arg(long, default_value_t = 3)]
    pub texture_seed: u64,
    #[command(flatten)]
    pub sensor: SensorArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TrackerArgs {
    /// Event file (text or binary, detected from content).
    #[arg(long)]
    pub input: PathBuf,
    /// Initial box X,Y,W,H in pixels.
    #[arg(long, value_parser = parse_bbox)]
    pub bbox: BoundingBox,
    #[arg(long, default_value_t = 10.0)]
    pub bin_ms: f64,
    #[arg(long, value_enum, default_value_t = PolarityArg::Both)]
    pub polarity: PolarityArg,
    /// Search radius for candidate shifts.
    #[arg(long, default_value_t = 20)]
    pub gamma: u32,
    /// Radius for positive training windows.
    #[arg(long, default_value_t = 4)]
    pub alpha: u32,
    #[arg(long, default_value_t = 8)]
    pub neg_inner: u32,
    #[arg(long, default_value_t = 30)]
    pub neg_outer: u32,
    #[arg(long, default_value_t = 50)]
    pub negatives: usize,
    #[arg(long, default_value_t = 50)]
    pub features: usize,
    #[arg(long, default_value_t = 0.85)]
    pub lambda: f64,
    /// Smallest class deviation, in spikes.
    #[arg(long, default_value_t = 4.0)]
    pub sigma_floor_spikes: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    #[command(flatten)]
    pub tracker: TrackerArgs,
    /// Trajectory output path.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory for per-bin frame images.
    #[arg(long)]
    pub render: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    #[command(flatten)]
    pub tracker: TrackerArgs,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    /// Also write the report (and a manifest) to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("{t:?} is not a number"));
    Ok((num(a)?, num(b)?))
}

fn parse_bbox(s: &str) -> Result<BoundingBox, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected X,Y,W,H, got {s:?}"));
    }
    let mut v = [0u32; 4];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .trim()
            .parse()
            .map_err(|_| format!("{p:?} is not a non-negative integer"))?;
    }
    Ok(BoundingBox::new(v[0], v[1], v[2], v[3]))
}

/// Parses `args` (without the program name) and runs the command. Returns
/// what the command prints on standard output.
pub fn run<I, T>(args: I) -> Result<String, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv = std::iter::once(OsString::from("dvstrack")).chain(args.into_iter().map(Into::into));
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(e.to_string()),
                _ => Err(CliError::Usage(e.to_string())),
            };
        }
    };
    match cli.command {
        Command::Simulate { scene } => cmd_simulate(&scene),
        Command::Track(a) => cmd_track(&a),
        Command::Bench(a) => cmd_bench(&a),
        Command::Replay { manifest } => cmd_replay(&manifest),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io_err = |e: std::io::Error| CliError::Io(format!("cannot write {}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(bytes).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

fn write_with_manifest(path: &Path, bytes: &[u8], manifest: &Manifest) -> Result<(), CliError> {
    write_atomic(path, bytes)?;
    write_atomic(&manifest_path(path), manifest.to_text().as_bytes())
}

fn read_input(path: &Path) -> Result<EventStream, CliError> {
    let bytes = std::fs::read(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => usage(format!("input file not found: {}", path.display())),
        _ => CliError::Io(format!("cannot read {}: {e}", path.display())),
    })?;
    let stream = read_events(&bytes).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if let Some(v) = validate_stream(&stream).first() {
        return Err(usage(format!("{}: invalid stream: {v}", path.display())));
    }
    Ok(stream)
}

fn duration_us(seconds: f64) -> Result<u64, CliError> {
    let us = (seconds * 1e6).round();
    if !(us >= 1.0 && us < u64::MAX as f64) {
        return Err(usage(format!("--duration-s must be positive, got {seconds}")));
    }
    Ok(us as u64)
}

fn bin_us(ms: f64, flag: &str) -> Result<u64, CliError> {
    let us = (ms * 1e3).round();
    if !(us >= 1.0 && us < u64::MAX as f64) {
        return Err(usage(format!("--{flag} must be at least 1 µs, got {ms}")));
    }
    Ok(us as u64)
}

fn fmt_pair(p: (f64, f64)) -> String {
    format!("{},{}", p.0, p.1)
}

fn record_sensor(m: &mut Manifest, s: &SensorArgs, duration_s: f64) {
    m.set("duration-s", duration_s);
    m.set("bin-preview-ms", s.bin_preview_ms);
    m.set("theta", s.theta);
    m.set("noise-rate", s.noise_rate);
    m.set("seed", s.seed);
    m.set("render-period-us", s.render_period_us);
    m.set("format", if s.format == FormatArg::Text { "text" } else { "aedat" });
    m.set("out", s.out.display());
}

/// Scene, sensor settings and manifest for a `simulate` invocation.
pub fn scene_from_args(scene: &SceneCommand) -> Result<(SceneSpec, &SensorArgs, Manifest), CliError> {
    let mut m = Manifest::new("simulate");
    let (spec, sensor) = match scene {
        SceneCommand::Ball(a) => {
            let dur = a.sensor.duration_s.unwrap_or(6.0);
            let mut spec = SceneSpec::bouncing_ball();
            let SceneKind::Ball(ball) = &mut spec.kind else {
                unreachable!("ball scene")
            };
            let (w, h) = (spec.geometry.width as f64, spec.geometry.height as f64);
            *ball = BallScene {
                path: dvstrack_core::sim::Path {
                    start: a.start,
                    velocity: a.velocity,
                    bounds: a.bounce.then_some(((a.margin, w - a.margin), (a.margin, h - a.margin))),
                },
                radius: a.radius,
                foreground: a.fg,
                background: a.bg,
            };
            spec.duration_us = duration_us(dur)?;
            m.set("scene", "ball");
            m.set("radius", a.radius);
            m.set("start", fmt_pair(a.start));
            m.set("velocity", fmt_pair(a.velocity));
            m.set("fg", a.fg);
            m.set("bg", a.bg);
            m.set("bounce", a.bounce);
            m.set("margin", a.margin);
            record_sensor(&mut m, &a.sensor, dur);
            (spec, &a.sensor)
        }
        SceneCommand::Texture(a) => {
            let dur = a.sensor.duration_s.unwrap_or(4.0);
            let spec = SceneSpec::digit_pan_with(a.velocity, duration_us(dur)?, a.clutter, a.texture_seed);
            m.set("scene", "texture");
            m.set("velocity", fmt_pair(a.velocity));
            m.set("clutter", a.clutter);
            m.set("texture-seed", a.texture_seed);
            record_sensor(&mut m, &a.sensor, dur);
            (spec, &a.sensor)
        }
    };
    let spec = SceneSpec {
        render_period_us: sensor.render_period_us,
        ..spec
    };
    Ok((spec, sensor, m))
}

fn cmd_simulate(scene: &SceneCommand) -> Result<String, CliError> {
    let (spec, s, manifest) = scene_from_args(scene)?;
    spec.validate().map_err(|e| usage(e.to_string()))?;
    let params = SensorParams {
        theta: s.theta,
        noise_rate: s.noise_rate,
        seed: s.seed,
        ..SensorParams::default()
    };
    let stream = generate_events(&spec, &params).map_err(|e| usage(e.to_string()))?;
    let preview = bin_us(s.bin_preview_ms, "bin-preview-ms")?;
    let format = match s.format {
        FormatArg::Text => EventFormat::Text,
        FormatArg::Aedat => EventFormat::Aedat,
    };
    let bytes = write_events(&stream, format).map_err(|e| usage(e.to_string()))?;
    write_with_manifest(&s.out, &bytes, &manifest)?;

    let bins = complete_bins(&stream, preview);
    let mean = if bins == 0 {
        0.0
    } else {
        stream.len() as f64 / bins as f64
    };
    Ok(format!(
        "events={}\nbins={bins}\nmean_events_per_bin={mean:.2}\n",
        stream.len()
    ))
}

fn tracker_setup(a: &TrackerArgs) -> Result<(BinningConfig, TrackerConfig), CliError> {
    let binning = BinningConfig {
        bin_length_us: bin_us(a.bin_ms, "bin-ms")?,
        polarity_mode: match a.polarity {
            PolarityArg::Both => PolarityMode::BothSummed,
            PolarityArg::On => PolarityMode::PositiveOnly,
            PolarityArg::Off => PolarityMode::NegativeOnly,
        },
    };
    let config = TrackerConfig {
        search_radius: a.gamma,
        positive_radius: a.alpha,
        negative_inner: a.neg_inner,
        negative_outer: a.neg_outer,
        negative_count: a.negatives,
        n_features: a.features,
        lambda: a.lambda,
        sigma_floor_spikes: a.sigma_floor_spikes,
        seed: a.seed,
    };
    config.validate().map_err(|e| usage(e.to_string()))?;
    Ok((binning, config))
}

fn record_tracker(m: &mut Manifest, a: &TrackerArgs) {
    let b = a.bbox;
    m.set("input", a.input.display());
    m.set("bbox", format!("{},{},{},{}", b.x, b.y, b.w, b.h));
    m.set("bin-ms", a.bin_ms);
    m.set(
        "polarity",
        a.polarity.to_possible_value().expect("named variant").get_name(),
    );
    m.set("gamma", a.gamma);
    m.set("alpha", a.alpha);
    m.set("neg-inner", a.neg_inner);
    m.set("neg-outer", a.neg_outer);
    m.set("negatives", a.negatives);
    m.set("features", a.features);
    m.set("lambda", a.lambda);
    m.set("sigma-floor-spikes", a.sigma_floor_spikes);
    m.set("seed", a.seed);
}

fn track_error(e: TrackError) -> CliError {
    match e {
        TrackError::NoFrames => CliError::Empty("input has no complete bins".into()),
        other => usage(other.to_string()),
    }
}

fn load_for_tracking(a: &TrackerArgs) -> Result<(EventStream, BinningConfig, TrackerConfig), CliError> {
    let (binning, config) = tracker_setup(a)?;
    let stream = read_input(&a.input)?;
    if !a.bbox.is_valid_in(stream.geometry) {
        let b = a.bbox;
        return Err(usage(format!(
            "bbox {},{},{},{} does not fit the {}x{} sensor (needs w, h >= 2)",
            b.x, b.y, b.w, b.h, stream.geometry.width, stream.geometry.height
        )));
    }
    if complete_bins(&stream, binning.bin_length_us) == 0 {
        return Err(CliError::Empty(format!("{}: no complete bins", a.input.display())));
    }
    Ok((stream, binning, config))
}

fn cmd_track(a: &TrackArgs) -> Result<String, CliError> {
    let (stream, binning, config) = load_for_tracking(&a.tracker)?;
    let records = track_iter(Frames::new(&stream, binning), a.tracker.bbox, config).map_err(track_error)?;

    let mut manifest = Manifest::new("track");
    record_tracker(&mut manifest, &a.tracker);
    manifest.set("out", a.out.display());
    if let Some(dir) = &a.render {
        manifest.set("render", dir.display());
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
        for (frame, rec) in Frames::new(&stream, binning).zip(&records) {
            write_atomic(
                &dir.join(frame_file_name(rec.bin_index)),
                &render_ppm(&frame, Some(rec.bbox)),
            )?;
        }
    }
    write_with_manifest(&a.out, write_trajectory(&records).as_bytes(), &manifest)?;

    let mut out = String::new();
    let busiest = Frames::new(&stream, binning)
        .map(|f| frame_stats(&f).total_events)
        .max()
        .unwrap_or(0);
    let _ = writeln!(out, "bins={}", records.len());
    let _ = writeln!(out, "max_events_per_bin={busiest}");
    if let Some(last) = records.last() {
        let b = last.bbox;
        let _ = writeln!(out, "final_bbox={},{},{},{}", b.x, b.y, b.w, b.h);
    }
    Ok(out)
}

fn cmd_bench(a: &BenchArgs) -> Result<String, CliError> {
    if a.reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let (stream, binning, config) = load_for_tracking(&a.tracker)?;
    let report = bench(&stream, binning, a.tracker.bbox, config, a.reps).map_err(track_error)?;
    let text = report.to_text();
    if let Some(out) = &a.out {
        let mut manifest = Manifest::new("bench");
        record_tracker(&mut manifest, &a.tracker);
        manifest.set("reps", a.reps);
        manifest.set("out", out.display());
        write_with_manifest(out, text.as_bytes(), &manifest)?;
    }
    Ok(text)
}

fn cmd_replay(path: &Path) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => usage(format!("manifest not found: {}", path.display())),
        _ => CliError::Io(format!("cannot read {}: {e}", path.display())),
    })?;
    let manifest = Manifest::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if manifest.get("command") == Some("replay") {
        return Err(usage("a manifest cannot replay another replay"));
    }
    run(manifest.to_args().map_err(|e| usage(e.to_string()))?)
}
