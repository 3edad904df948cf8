use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tlf_harris::config::{ConfigError, Settings};
use tlf_harris::control::{Clock, VirtualClock, WallClock};
use tlf_harris::detector::CostModel;
use tlf_harris::eval::{cylinder_accuracy, CylinderParams, EvalError};
use tlf_harris::io::{self, IoError};
use tlf_harris::pipeline::candidate_patches;
use tlf_harris::report::{time_scores, DetectorMetrics, MetricsReport};
use tlf_harris::scoring::calibrate_lc_threshold;
use tlf_harris::synth::{preset, render_events, Scene, SceneError, PRESET_NAMES};
use tlf_harris::{build_detector, run_stream, DetectorKind, Event, RunOptions, SensorGeometry};

/// Event-camera corner detection and evaluation.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Sensor width in pixels.
    #[arg(long, global = true, default_value_t = 240)]
    width: u32,
    /// Sensor height in pixels.
    #[arg(long, global = true, default_value_t = 180)]
    height: u32,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic scene into an event file and a track file.
    Generate(GenerateArgs),
    /// Run one detector over an event file and write its corners.
    Detect(DetectArgs),
    /// Score a corner file against ground-truth tracks.
    Evaluate(EvaluateArgs),
    /// Run several detectors under the same simulated load and time the scores.
    Bench(BenchArgs),
    /// Match the LC-Harris threshold to the full-Harris corner rate.
    Calibrate(CalibrateArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    /// Named preset (see --list-presets).
    #[arg(long, conflicts_with = "scene", required_unless_present_any = ["scene", "list_presets"])]
    preset: Option<String>,
    /// JSON scene description.
    #[arg(long)]
    scene: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Overrides the scene's noise rate (events per pixel per second).
    #[arg(long)]
    noise_rate: Option<f64>,
    /// Directory receiving events.txt and tracks.txt.
    #[arg(long, required_unless_present = "list_presets")]
    out: Option<PathBuf>,
    /// Print the preset names and exit.
    #[arg(long)]
    list_presets: bool,
}

#[derive(Args, Debug, Clone)]
struct SettingsArgs {
    /// Config file of key=value lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single setting override, e.g. --set lc_threshold=2000. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args, Debug, Clone, Copy)]
struct LoadArgs {
    /// Simulated processing cost per incoming event, microseconds.
    #[arg(long, default_value_t = 0.0)]
    delay_us: f64,
    /// Extra simulated cost per event passing the first layer, microseconds.
    #[arg(long, default_value_t = 0.0)]
    pass_delay_us: f64,
    /// Measure real elapsed time (and busy-wait the delays) instead of
    /// advancing a virtual clock.
    #[arg(long)]
    wall_clock: bool,
    /// Events per throughput message.
    #[arg(long, default_value_t = 10_000)]
    message_size: usize,
}

#[derive(Args, Debug)]
struct DetectArgs {
    #[arg(long)]
    events: PathBuf,
    #[arg(long, value_enum, default_value_t = DetectorKind::TlfHarris)]
    detector: DetectorKind,
    /// Corner file to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write the report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingsArgs,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[arg(long)]
    corners: PathBuf,
    #[arg(long)]
    events: PathBuf,
    #[arg(long)]
    tracks: PathBuf,
    /// Label for the report rows.
    #[arg(long, value_enum, default_value_t = DetectorKind::TlfHarris)]
    detector: DetectorKind,
    #[arg(long, default_value_t = 3.0)]
    inner_radius: f64,
    #[arg(long, default_value_t = 5.0)]
    outer_radius: f64,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long)]
    events: PathBuf,
    /// Detectors to run; all of them by default.
    #[arg(long, value_enum, value_delimiter = ',')]
    detectors: Vec<DetectorKind>,
    /// Ground truth; adds accuracy to the report.
    #[arg(long)]
    tracks: Option<PathBuf>,
    /// Patches for the score timing (0 skips it).
    #[arg(long, default_value_t = 100_000)]
    score_patches: usize,
    #[arg(long)]
    json: Option<PathBuf>,
    #[command(flatten)]
    settings: SettingsArgs,
    #[command(flatten)]
    load: LoadArgs,
}

#[derive(Args, Debug)]
struct CalibrateArgs {
    /// Event files to calibrate on. Repeatable.
    #[arg(long)]
    events: Vec<PathBuf>,
    /// Presets to render and calibrate on; "all" selects every preset.
    #[arg(long, value_delimiter = ',')]
    preset: Vec<String>,
    /// Seeds for the presets.
    #[arg(long, value_delimiter = ',', default_values_t = [1u64])]
    seed: Vec<u64>,
    #[command(flatten)]
    settings: SettingsArgs,
}

#[derive(Debug)]
enum Failure {
    /// Bad arguments or input content.
    Invalid(String),
    /// The environment let us down: files, permissions.
    Runtime(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Runtime(_) => 2,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(e) => Failure::Runtime(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<SceneError> for Failure {
    fn from(e: SceneError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn with_path<T, E: Into<Failure>>(path: &Path, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| match e.into() {
        Failure::Invalid(m) => Failure::Invalid(format!("{}: {m}", path.display())),
        Failure::Runtime(m) => Failure::Runtime(format!("{}: {m}", path.display())),
    })
}

fn load_settings(a: &SettingsArgs) -> Result<Settings, Failure> {
    let mut s = Settings::default();
    if let Some(path) = &a.config {
        let text = with_path(path, fs::read_to_string(path))?;
        with_path(path, s.apply_file_contents(&text))?;
    }
    for kv in &a.overrides {
        s.apply_override(kv)?;
    }
    s.validate()?;
    Ok(s)
}

fn run_options(settings: &Settings, load: LoadArgs) -> Result<RunOptions, Failure> {
    if !(load.delay_us >= 0.0 && load.pass_delay_us >= 0.0) {
        return Err(Failure::Invalid("delays must be non-negative".into()));
    }
    if load.message_size == 0 {
        return Err(Failure::Invalid("message size must be positive".into()));
    }
    let mut opts = RunOptions::new(settings);
    opts.message_size = load.message_size;
    opts.cost = CostModel {
        per_event: load.delay_us * 1e-6,
        per_pass: load.pass_delay_us * 1e-6,
    };
    Ok(opts)
}

fn clock(load: LoadArgs) -> Box<dyn Clock> {
    if load.wall_clock {
        Box::new(WallClock::new())
    } else {
        Box::new(VirtualClock::new())
    }
}

fn write_json(path: Option<&PathBuf>, report: &MetricsReport) -> Result<(), Failure> {
    if let Some(p) = path {
        with_path(p, fs::write(p, report.to_json()))?;
    }
    Ok(())
}

fn generate(a: GenerateArgs, g: SensorGeometry) -> Result<(), Failure> {
    if a.list_presets {
        for name in PRESET_NAMES {
            println!("{name}");
        }
        return Ok(());
    }
    let mut scene = match (&a.preset, &a.scene) {
        (Some(name), _) => preset(name, a.seed)?,
        (None, Some(path)) => {
            let text = with_path(path, fs::read_to_string(path))?;
            let mut s: Scene = serde_json::from_str(&text)
                .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))?;
            s.seed = a.seed;
            s
        }
        (None, None) => unreachable!("clap requires a scene source"),
    };
    if let Some(rate) = a.noise_rate {
        scene.noise_rate = rate;
    }
    let rendered = render_events(&scene, g)?;
    let out = a.out.expect("clap requires --out");
    with_path(&out, fs::create_dir_all(&out))?;
    let (ev, tr) = (out.join("events.txt"), out.join("tracks.txt"));
    with_path(&ev, io::save_events(&ev, &rendered.events))?;
    with_path(&tr, io::save_tracks(&tr, &rendered.tracks))?;
    println!("events={}", rendered.events.len());
    println!("tracks={}", rendered.tracks.len());
    Ok(())
}

fn detect(a: DetectArgs, g: SensorGeometry) -> Result<(), Failure> {
    let settings = load_settings(&a.settings)?;
    let opts = run_options(&settings, a.load)?;
    let events = with_path(&a.events, io::load_events(&a.events, g))?;
    let mut det = build_detector(a.detector, g, &settings);
    let run = run_stream(det.as_mut(), &events, clock(a.load).as_mut(), &opts);
    with_path(&a.out, io::save_events(&a.out, &run.corners))?;
    let report = MetricsReport {
        detectors: vec![DetectorMetrics::from_run(a.detector, &run)],
        score_timing: None,
    };
    print!("{}", report.to_text());
    write_json(a.json.as_ref(), &report)
}

/// Every corner must be one of the input events.
fn check_subset(corners: &[Event], events: &[Event]) -> Result<(), Failure> {
    let key = |e: &Event| (e.ts, e.u, e.v, e.pol.bit());
    let known: HashSet<_> = events.iter().map(key).collect();
    match corners.iter().position(|c| !known.contains(&key(c))) {
        None => Ok(()),
        Some(n) => {
            let c = corners[n];
            Err(Failure::Invalid(format!(
                "corner {} ({} {} {} {}) is not an input event",
                n + 1,
                c.ts,
                c.u,
                c.v,
                c.pol.bit()
            )))
        }
    }
}

fn evaluate(a: EvaluateArgs, g: SensorGeometry) -> Result<(), Failure> {
    let params = CylinderParams {
        inner_radius: a.inner_radius,
        outer_radius: a.outer_radius,
    };
    params.validate()?;
    let events = with_path(&a.events, io::load_events(&a.events, g))?;
    let corners = with_path(&a.corners, io::load_events(&a.corners, g))?;
    let tracks = with_path(&a.tracks, io::load_tracks(&a.tracks))?;
    check_subset(&corners, &events)?;
    let cyl = cylinder_accuracy(&corners, &tracks, &params)?;
    if cyl.untracked > 0 {
        eprintln!(
            "warning: {} corners fall outside every track's time span",
            cyl.untracked
        );
    }
    if cyl.accuracy().is_none() {
        eprintln!(
            "warning: no corner lies within {} px of a track; accuracy undefined",
            params.outer_radius
        );
    }
    let m = DetectorMetrics {
        detector: a.detector.name().to_string(),
        events_in: events.len() as u64,
        passed_per_layer: None,
        corners: corners.len() as u64,
        reduction_pct: tlf_harris::eval::reduction_percentage(
            events.len() as u64,
            corners.len() as u64,
        )
        .ok(),
        cylinder: None,
        accuracy: None,
        mean_throughput: None,
        threshold_trace: Vec::new(),
    }
    .with_cylinder(cyl);
    let report = MetricsReport {
        detectors: vec![m],
        score_timing: None,
    };
    print!("{}", report.to_text());
    print!("{}", report.table());
    write_json(a.json.as_ref(), &report)
}

fn bench(a: BenchArgs, g: SensorGeometry) -> Result<(), Failure> {
    let settings = load_settings(&a.settings)?;
    let opts = run_options(&settings, a.load)?;
    let events = with_path(&a.events, io::load_events(&a.events, g))?;
    let tracks = match &a.tracks {
        Some(p) => Some(with_path(p, io::load_tracks(p))?),
        None => None,
    };
    let kinds = if a.detectors.is_empty() {
        DetectorKind::ALL.to_vec()
    } else {
        a.detectors.clone()
    };
    let mut report = MetricsReport::default();
    for kind in kinds {
        let mut det = build_detector(kind, g, &settings);
        let run = run_stream(det.as_mut(), &events, clock(a.load).as_mut(), &opts);
        let mut m = DetectorMetrics::from_run(kind, &run);
        if let Some(t) = &tracks {
            m = m.with_cylinder(cylinder_accuracy(
                &run.corners,
                t,
                &CylinderParams::default(),
            )?);
        }
        report.detectors.push(m);
    }
    if a.score_patches > 0 {
        let found = candidate_patches(g, settings.pipeline, &events);
        if found.is_empty() {
            eprintln!("warning: no corner candidates; score timing skipped");
        } else {
            let patches: Vec<_> = found
                .iter()
                .cycle()
                .take(a.score_patches)
                .copied()
                .collect();
            report.score_timing = Some(time_scores(&patches, &settings.harris, 3));
        }
    }
    print!("{}", report.to_text());
    print!("{}", report.table());
    write_json(a.json.as_ref(), &report)
}

fn calibrate(a: CalibrateArgs, g: SensorGeometry) -> Result<(), Failure> {
    let settings = load_settings(&a.settings)?;
    let mut names: Vec<String> = Vec::new();
    for p in &a.preset {
        if p == "all" {
            names.extend(PRESET_NAMES.iter().map(|s| s.to_string()));
        } else {
            names.push(p.clone());
        }
    }
    if names.is_empty() && a.events.is_empty() {
        return Err(Failure::Invalid("give --events or --preset".into()));
    }
    let mut patches = Vec::new();
    for path in &a.events {
        let events = with_path(path, io::load_events(path, g))?;
        patches.extend(candidate_patches(g, settings.pipeline, &events));
    }
    for name in &names {
        for &seed in &a.seed {
            let r = render_events(&preset(name, seed)?, g)?;
            patches.extend(candidate_patches(g, settings.pipeline, &r.events));
        }
    }
    let c = calibrate_lc_threshold(&patches, &settings.harris);
    println!("candidates={}", c.patches);
    println!("harris_corners={}", c.harris_corners);
    println!("lc_corners={}", c.lc_corners);
    println!("rate_mismatch_pct={:.2}", 100.0 * c.rate_mismatch());
    println!("lc_threshold={}", c.threshold);
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g =
        SensorGeometry::new(cli.width, cli.height).map_err(|e| Failure::Invalid(e.to_string()))?;
    match cli.command {
        Command::Generate(a) => generate(a, g),
        Command::Detect(a) => detect(a, g),
        Command::Evaluate(a) => evaluate(a, g),
        Command::Bench(a) => bench(a, g),
        Command::Calibrate(a) => calibrate(a, g),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Invalid(m) | Failure::Runtime(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.code())
        }
    }
}
