//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or validation errors, 2 when a
//! computation fails. Outputs are written only after the command succeeds.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde_json::{json, Value};

use crate::bench::{
    self, init_ablation, run_mede_benchmark, run_partial_benchmark, run_sequential_benchmark, score_landscape,
    BenchReport, BenchSettings, STANDARD_NOISE_LEVELS, STANDARD_SWITCH_RATIOS,
};
use crate::dmp::{self, DmpParams};
use crate::error::{Error, Result};
use crate::framekit::{self, build_frame, estimate_normal, Frame6, DEFAULT_K_NEIGHBORS};
use crate::inference::{infer_partial, infer_sequential, InitMode, Method, OptimizerConfig};
use crate::io::{trajectory_from_csv, trajectory_from_json, trajectory_to_csv, FileFormat};
use crate::rng::RngSpec;
use crate::scoring::{ScoreFunction, ScoreKind};
use crate::simulator::{
    accelerations_for_inference, episode_from_json, episode_to_json, simulate, AccelMode, SecondPoint, SimConfig,
    SimEpisode,
};
use crate::trajectory::{mede, Trajectory};

#[derive(Debug, Parser)]
#[command(name = "taskframe", version, about = "Influence-point inference, task frames and DMP transfer")]
struct Cli {
    /// Base seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Output file; standard output when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Output format [default: json, or csv for landscape].
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,

    /// Suppress progress and summaries on standard error.
    #[arg(long, global = true)]
    quiet: bool,

    /// TOML file of flag defaults; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for parallel work [env: TREF6_JOBS].
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one point-mass episode.
    Simulate(SimulateArgs),
    /// Infer the influence point of a trajectory or episode file.
    Infer(InferArgs),
    /// Run a Monte-Carlo benchmark.
    Bench(BenchArgs),
    /// Evaluate a score on a regular grid (CSV).
    Landscape(LandscapeArgs),
    /// Surface normals and task frames.
    #[command(subcommand)]
    Frame(FrameCommand),
    /// Fit and roll out movement primitives.
    #[command(subcommand)]
    Dmp(DmpCommand),
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Noise level ν in [0, 1].
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    /// Viscous damping (1/s).
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    /// Second target: `random`, `repeat` or coordinates `x,y[,z]`.
    #[arg(long, allow_hyphen_values = true, requires = "switch_step")]
    second_point: Option<String>,
    /// Step at which the second target takes over.
    #[arg(long, requires = "second_point")]
    switch_step: Option<usize>,
    /// Stream index under the base seed; matches the benchmark's seed index.
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AccelArg {
    Recorded,
    Differentiated,
}

impl From<AccelArg> for AccelMode {
    fn from(a: AccelArg) -> Self {
        match a {
            AccelArg::Recorded => AccelMode::Recorded,
            AccelArg::Differentiated => AccelMode::Differentiated,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Dcs,
    #[value(name = "dcs_random_init", alias = "dcs-random-init")]
    DcsRandomInit,
    Triangulate,
    Cosine,
    Quadratic,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Dcs => Method::Dcs,
            MethodArg::DcsRandomInit => Method::DcsRandomInit,
            MethodArg::Triangulate => Method::Triangulate,
            MethodArg::Cosine => Method::Cosine,
            MethodArg::Quadratic => Method::Quadratic,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InitArg {
    Structured,
    Random,
}

#[derive(Debug, Args)]
struct OptimizerArgs {
    /// Adam learning rate.
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Optimizer iterations.
    #[arg(long, default_value_t = 500)]
    iters: usize,
    /// Largest-acceleration samples used for the structured start.
    #[arg(long, default_value_t = 5)]
    top_k: usize,
    /// Gaussian jitter on the structured start (m).
    #[arg(long, default_value_t = 0.5)]
    sigma: f64,
    #[arg(long, value_enum, default_value_t = InitArg::Structured)]
    init: InitArg,
}

impl OptimizerArgs {
    fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            learning_rate: self.lr,
            steps: self.iters,
            top_k: self.top_k,
            init_sigma: self.sigma,
            init_mode: match self.init {
                InitArg::Structured => InitMode::Structured,
                InitArg::Random => InitMode::Random,
            },
            ..OptimizerConfig::default()
        }
    }
}

#[derive(Debug, Args)]
struct InferArgs {
    /// Trajectory or episode file (.json or .csv).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Dcs)]
    method: MethodArg,
    /// Replace the file's accelerations: `differentiated` recomputes them from positions.
    #[arg(long, value_enum)]
    accel: Option<AccelArg>,
    /// Use only the first N samples.
    #[arg(long, conflicts_with = "switch_step")]
    prefix: Option<usize>,
    /// Fit two points, split at this step.
    #[arg(long)]
    switch_step: Option<usize>,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Preset {
    Table3d,
    Table2d,
    Partial,
    Sequential,
    Ablation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BenchKindArg {
    Mede,
    Partial,
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SecondArg {
    Random,
    Repeat,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Preset sweep; other flags override its values.
    #[arg(long, value_enum)]
    reproduce: Option<Preset>,
    /// Sweep type [default: mede].
    #[arg(long, value_enum)]
    kind: Option<BenchKindArg>,
    /// Comma-separated methods [default: dcs].
    #[arg(long, value_enum, value_delimiter = ',')]
    methods: Vec<MethodArg>,
    /// Comma-separated noise levels [default: 0,0.1,0.3,0.5,0.8].
    #[arg(long, value_delimiter = ',')]
    noise: Vec<f64>,
    /// Seeds per cell [default: 50].
    #[arg(long)]
    seeds: Option<usize>,
    /// Dimension [default: 3].
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = AccelArg::Differentiated)]
    accel: AccelArg,
    /// Prefix lengths for partial sweeps [default: 3,5,10,20,...,100].
    #[arg(long, value_delimiter = ',')]
    prefixes: Vec<usize>,
    /// Switch ratios for sequential sweeps [default: 0.3,0.5,0.7].
    #[arg(long, value_delimiter = ',')]
    ratios: Vec<f64>,
    /// Second target of sequential episodes.
    #[arg(long, value_enum, default_value_t = SecondArg::Random)]
    second: SecondArg,
    #[arg(long, default_value_t = 100)]
    steps: usize,
    #[arg(long, default_value_t = 0.05)]
    dt: f64,
    #[arg(long, default_value_t = 0.0)]
    damping: f64,
    #[command(flatten)]
    optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
struct LandscapeArgs {
    /// Trajectory or episode file.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "dcs")]
    score: String,
    #[arg(long, value_enum)]
    accel: Option<AccelArg>,
    /// Lower grid corner, one value per axis or a single value for all.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "-5")]
    min: Vec<f64>,
    /// Upper grid corner.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "5")]
    max: Vec<f64>,
    /// Samples per axis.
    #[arg(long, value_delimiter = ',', default_value = "101")]
    resolution: Vec<usize>,
}

#[derive(Debug, Subcommand)]
enum FrameCommand {
    /// PCA surface normal of a point cloud.
    EstimateNormal(NormalArgs),
    /// Task frame from a refined point, a normal and an interaction point.
    Build(BuildArgs),
}

#[derive(Debug, Args)]
struct NormalArgs {
    /// Point cloud JSON.
    #[arg(long)]
    cloud: PathBuf,
    /// Query point `x,y,z`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_K_NEIGHBORS)]
    k: usize,
}

#[derive(Debug, Args)]
struct BuildArgs {
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    refined: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    interaction: Vec<f64>,
    /// Unit normal `x,y,z`; estimated from --cloud when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "cloud")]
    normal: Vec<f64>,
    #[arg(long, conflicts_with = "normal")]
    cloud: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_K_NEIGHBORS)]
    k: usize,
}

#[derive(Debug, Subcommand)]
enum DmpCommand {
    /// Fit position and orientation primitives to a demonstration.
    Fit(FitArgs),
    /// Roll a fitted skill out in a frame.
    Rollout(RolloutArgs),
}

#[derive(Debug, Args)]
struct FitArgs {
    /// Demonstration pose JSON in world coordinates.
    #[arg(long)]
    demo: PathBuf,
    /// Task frame JSON; identity when omitted.
    #[arg(long)]
    frame: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    basis: usize,
    #[arg(long, default_value_t = 25.0)]
    alpha_z: f64,
    #[arg(long, default_value_t = 4.0)]
    alpha_s: f64,
}

#[derive(Debug, Args)]
struct RolloutArgs {
    /// Skill JSON from `dmp fit`.
    #[arg(long)]
    model: PathBuf,
    /// Target frame JSON; identity when omitted.
    #[arg(long)]
    frame: Option<PathBuf>,
    /// World start position `x,y,z`; the demo's relative start when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "start_orientation")]
    start_position: Vec<f64>,
    /// World start orientation `w,x,y,z`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "start_position")]
    start_orientation: Vec<f64>,
    /// Number of samples; the demo length when omitted.
    #[arg(long)]
    steps: Option<usize>,
}

/// Runs the command line `args` (program name first) and returns the exit code.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let args = match apply_config(args) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return 1;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                1
            } else {
                2
            }
        }
    }
}

fn config_value_tokens(key: &str, value: &toml::Value) -> Result<Vec<String>> {
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &toml::Value| -> Result<String> {
        match v {
            toml::Value::String(s) => Ok(s.clone()),
            toml::Value::Integer(i) => Ok(i.to_string()),
            toml::Value::Float(f) => Ok(f.to_string()),
            other => Err(Error::validation(format!("config key {key}: unsupported value {other}"))),
        }
    };
    Ok(match value {
        toml::Value::Boolean(true) => vec![flag],
        toml::Value::Boolean(false) => vec![],
        toml::Value::Array(items) => {
            let parts = items.iter().map(scalar).collect::<Result<Vec<_>>>()?;
            vec![format!("{flag}={}", parts.join(","))]
        }
        v => vec![format!("{flag}={}", scalar(v)?)],
    })
}

fn subcommand_end(args: &[OsString]) -> Option<usize> {
    let top = ["simulate", "infer", "bench", "landscape", "frame", "dmp"];
    let i = args.iter().position(|a| a.to_str().is_some_and(|s| top.contains(&s)))?;
    let nested = matches!(args[i].to_str(), Some("frame" | "dmp"));
    Some(if nested { (i + 2).min(args.len()) } else { i + 1 })
}

/// Splices flags from a `--config` TOML file in after the subcommand, skipping
/// any flag already present on the command line.
fn apply_config(mut args: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            path = args.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(&path)
        .map_err(|e| Error::validation(format!("config {}: {e}", path.display())))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e| Error::parse(format!("config {}: {e}", path.display())))?;
    let present = |flag: &str| {
        args.iter().any(|a| {
            a.to_str()
                .is_some_and(|s| s == flag || s.starts_with(&format!("{flag}=")))
        })
    };
    let mut extra = Vec::new();
    for (key, value) in &table {
        let flag = format!("--{}", key.replace('_', "-"));
        if key == "config" || present(&flag) {
            continue;
        }
        extra.extend(config_value_tokens(key, value)?);
    }
    let at = subcommand_end(&args).unwrap_or(args.len());
    args.splice(at..at, extra.into_iter().map(OsString::from));
    Ok(args)
}

fn run(cli: &Cli) -> Result<()> {
    let output = bench::with_jobs(cli.jobs, || -> Result<String> {
        match &cli.command {
            Command::Simulate(a) => cmd_simulate(cli, a),
            Command::Infer(a) => cmd_infer(cli, a),
            Command::Bench(a) => cmd_bench(cli, a),
            Command::Landscape(a) => cmd_landscape(cli, a),
            Command::Frame(FrameCommand::EstimateNormal(a)) => cmd_normal(cli, a),
            Command::Frame(FrameCommand::Build(a)) => cmd_build(cli, a),
            Command::Dmp(DmpCommand::Fit(a)) => cmd_fit(cli, a),
            Command::Dmp(DmpCommand::Rollout(a)) => cmd_rollout(cli, a),
        }
    })??;
    match &cli.out {
        Some(path) => fs::write(path, output)?,
        None => print!("{output}"),
    }
    Ok(())
}

fn json_only(cli: &Cli, what: &str) -> Result<()> {
    if cli.format == Some(OutFormat::Csv) {
        return Err(Error::validation(format!("{what} output is JSON only")));
    }
    Ok(())
}

fn json_line(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable output");
    s.push('\n');
    s
}

fn point3(values: &[f64], name: &str) -> Result<Vector3<f64>> {
    match values {
        [x, y, z] => Ok(Vector3::new(*x, *y, *z)),
        _ => Err(Error::validation(format!("--{name} needs 3 comma-separated values, got {}", values.len()))),
    }
}

fn cmd_simulate(cli: &Cli, a: &SimulateArgs) -> Result<String> {
    let second_point = match a.second_point.as_deref() {
        None => None,
        Some("random") => Some(SecondPoint::Random),
        Some("repeat") => Some(SecondPoint::Repeat),
        Some(coords) => Some(SecondPoint::Fixed(
            coords
                .split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| Error::parse(format!("--second-point {coords:?}: {e}"))))
                .collect::<Result<Vec<_>>>()?,
        )),
    };
    let cfg = SimConfig {
        dim: a.dim,
        steps: a.steps,
        dt: a.dt,
        noise_level: a.noise,
        damping: a.damping,
        second_point,
        switch_step: a.switch_step,
        ..SimConfig::default()
    };
    let ep = simulate(&cfg, RngSpec::from_seed(cli.seed).derive(a.stream))?;
    if !cli.quiet {
        eprintln!("simulated {} steps, truth {:?}", ep.trajectory.len(), ep.truth.to_vec());
    }
    Ok(match cli.format.unwrap_or(OutFormat::Json) {
        OutFormat::Json => {
            let mut s = episode_to_json(&ep);
            s.push('\n');
            s
        }
        OutFormat::Csv => trajectory_to_csv(&ep.trajectory),
    })
}

/// A trajectory plus the episode it came from, when the file is one.
fn load_input(path: &Path, accel: Option<AccelArg>) -> Result<(Trajectory, Option<SimEpisode>)> {
    let text = crate::io::read_text(path)?;
    let (traj, episode) = match FileFormat::from_path(path) {
        FileFormat::Csv => (trajectory_from_csv(&text)?, None),
        FileFormat::Json => {
            let v: Value = serde_json::from_str(&text)?;
            if v.get("truth").is_some() {
                let ep = episode_from_json(&text)?;
                (ep.trajectory.clone(), Some(ep))
            } else {
                (trajectory_from_json(&text)?, None)
            }
        }
    };
    let traj = match accel {
        None => traj,
        Some(AccelArg::Recorded) => match &episode {
            Some(ep) => accelerations_for_inference(ep, AccelMode::Recorded)?,
            None => traj,
        },
        Some(AccelArg::Differentiated) => {
            traj.with_accelerations(crate::trajectory::numeric_accelerations(traj.positions(), traj.dt())?)?
        }
    };
    Ok((traj, episode))
}

fn cmd_infer(cli: &Cli, a: &InferArgs) -> Result<String> {
    json_only(cli, "infer")?;
    let (traj, episode) = load_input(&a.input, a.accel)?;
    let method: Method = a.method.into();
    let cfg = a.optimizer.config();
    let rng = RngSpec::from_seed(cli.seed).derive_all(&[a.stream, method.stream_tag()]);
    let optimizer_only = || {
        if method == Method::Triangulate {
            Err(Error::validation("triangulation does not support --prefix or --switch-step"))
        } else {
            Ok(())
        }
    };
    let cfg = if method == Method::DcsRandomInit {
        OptimizerConfig {
            init_mode: InitMode::Random,
            ..cfg
        }
    } else {
        cfg
    };
    let mut out = if let Some(step) = a.switch_step {
        optimizer_only()?;
        let r = infer_sequential(&method.score_function(), &traj, step, &cfg, rng)?;
        let mut v = serde_json::to_value(&r).expect("serializable");
        if let Some(ep) = &episode {
            v["mede_p1"] = json!(mede(r.p1(), &ep.truth)?);
            if let Some(t2) = &ep.truth2 {
                v["mede_p2"] = json!(mede(r.p2(), t2)?);
            }
        }
        v
    } else {
        let r = match a.prefix {
            Some(p) => {
                optimizer_only()?;
                infer_partial(&method.score_function(), &traj, p, &cfg, rng)?
            }
            None => method.infer(&traj, &cfg, rng)?,
        };
        let mut v = serde_json::to_value(&r).expect("serializable");
        if let Some(ep) = &episode {
            v["mede"] = json!(mede(&r.point, &ep.truth)?);
        }
        v
    };
    out["method"] = json!(method.name());
    out["seed"] = json!(cli.seed);
    out["stream"] = json!(a.stream);
    Ok(json_line(&out))
}

struct Sweep {
    kind: BenchKindArg,
    methods: Vec<Method>,
    noise: Vec<f64>,
    seeds: usize,
    dim: usize,
    prefixes: Vec<usize>,
    ratios: Vec<f64>,
}

fn preset_sweep(p: Option<Preset>) -> Sweep {
    let standard_noise = STANDARD_NOISE_LEVELS.to_vec();
    let base = Sweep {
        kind: BenchKindArg::Mede,
        methods: vec![Method::Dcs],
        noise: standard_noise,
        seeds: 50,
        dim: 3,
        prefixes: vec![3, 5, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100],
        ratios: STANDARD_SWITCH_RATIOS.to_vec(),
    };
    match p {
        None => base,
        Some(Preset::Table3d) => Sweep {
            methods: Method::ALL.to_vec(),
            ..base
        },
        Some(Preset::Table2d) => Sweep {
            methods: Method::ALL.to_vec(),
            dim: 2,
            ..base
        },
        Some(Preset::Ablation) => Sweep {
            methods: vec![Method::Dcs, Method::DcsRandomInit],
            ..base
        },
        Some(Preset::Partial) => Sweep {
            kind: BenchKindArg::Partial,
            ..base
        },
        Some(Preset::Sequential) => Sweep {
            kind: BenchKindArg::Sequential,
            ..base
        },
    }
}

fn cmd_bench(cli: &Cli, a: &BenchArgs) -> Result<String> {
    let mut sweep = preset_sweep(a.reproduce);
    if let Some(k) = a.kind {
        sweep.kind = k;
    }
    if !a.methods.is_empty() {
        sweep.methods = a.methods.iter().map(|&m| m.into()).collect();
    }
    if !a.noise.is_empty() {
        sweep.noise = a.noise.clone();
    }
    if let Some(s) = a.seeds {
        sweep.seeds = s;
    }
    if let Some(d) = a.dim {
        sweep.dim = d;
    }
    if !a.prefixes.is_empty() {
        sweep.prefixes = a.prefixes.clone();
    }
    if !a.ratios.is_empty() {
        sweep.ratios = a.ratios.clone();
    }
    let settings = BenchSettings {
        base_seed: cli.seed,
        seeds: sweep.seeds,
        accel_mode: a.accel.into(),
        sim: SimConfig {
            dim: sweep.dim,
            steps: a.steps,
            dt: a.dt,
            damping: a.damping,
            ..SimConfig::default()
        },
        optimizer: a.optimizer.config(),
    };
    let start = std::time::Instant::now();
    let report: BenchReport = match sweep.kind {
        BenchKindArg::Mede => run_mede_benchmark(&settings, &sweep.methods, &sweep.noise)?,
        BenchKindArg::Partial => {
            let mut prefixes = sweep.prefixes.clone();
            if a.prefixes.is_empty() {
                prefixes.retain(|&p| p <= settings.sim.steps);
            }
            run_partial_benchmark(&settings, &sweep.noise, &prefixes)?
        }
        BenchKindArg::Sequential => {
            let second = match a.second {
                SecondArg::Random => SecondPoint::Random,
                SecondArg::Repeat => SecondPoint::Repeat,
            };
            run_sequential_benchmark(&settings, &sweep.noise, &sweep.ratios, second)?
        }
    };
    if !cli.quiet {
        eprint!("{}", report.summary());
        if a.reproduce == Some(Preset::Ablation) {
            for row in init_ablation(&report)? {
                eprintln!(
                    "ν={:<4} structured {:.4}  random {:.4}  reduction {:+.1}%",
                    row.noise,
                    row.structured_mean,
                    row.random_mean,
                    100.0 * row.reduction
                );
            }
        }
        eprintln!("wall time {:.2?}", start.elapsed());
    }
    Ok(match cli.format.unwrap_or(OutFormat::Json) {
        OutFormat::Json => report.to_json(),
        OutFormat::Csv => report.to_csv(),
    })
}

fn broadcast<T: Copy>(values: &[T], dim: usize, name: &str) -> Result<Vec<T>> {
    match values.len() {
        1 => Ok(vec![values[0]; dim]),
        n if n == dim => Ok(values.to_vec()),
        n => Err(Error::validation(format!("--{name} needs 1 or {dim} values, got {n}"))),
    }
}

fn cmd_landscape(cli: &Cli, a: &LandscapeArgs) -> Result<String> {
    if cli.format == Some(OutFormat::Json) {
        return Err(Error::validation("landscape output is CSV only"));
    }
    let (traj, _) = load_input(&a.input, a.accel)?;
    let kind: ScoreKind = a.score.parse()?;
    let score = ScoreFunction::new(kind, crate::scoring::DEFAULT_EPSILON)?;
    let dim = traj.dim();
    let l = score_landscape(
        &traj,
        &score,
        &broadcast(&a.min, dim, "min")?,
        &broadcast(&a.max, dim, "max")?,
        &broadcast(&a.resolution, dim, "resolution")?,
    )?;
    Ok(l.to_csv())
}

fn cmd_normal(cli: &Cli, a: &NormalArgs) -> Result<String> {
    json_only(cli, "frame")?;
    let cloud = framekit::load_cloud(&a.cloud)?;
    let n = estimate_normal(&cloud, &point3(&a.at, "at")?, a.k)?;
    Ok(json_line(&json!({ "normal": [n.x, n.y, n.z] })))
}

fn cmd_build(cli: &Cli, a: &BuildArgs) -> Result<String> {
    json_only(cli, "frame")?;
    let refined = point3(&a.refined, "refined")?;
    let normal = match &a.cloud {
        Some(path) => estimate_normal(&framekit::load_cloud(path)?, &refined, a.k)?,
        None => point3(&a.normal, "normal")?,
    };
    let frame = build_frame(&refined, &normal, &point3(&a.interaction, "interaction")?)?;
    Ok(json_line(&frame))
}

fn load_frame_or_identity(path: &Option<PathBuf>) -> Result<Frame6> {
    match path {
        Some(p) => framekit::load_frame(p),
        None => Ok(Frame6::identity()),
    }
}

fn cmd_fit(cli: &Cli, a: &FitArgs) -> Result<String> {
    json_only(cli, "dmp")?;
    let demo = dmp::load_pose(&a.demo)?;
    let frame = load_frame_or_identity(&a.frame)?;
    let params = DmpParams {
        alpha_z: a.alpha_z,
        alpha_s: a.alpha_s,
        n_basis: a.basis,
    };
    let skill = dmp::fit_skill(&demo, &frame, &params)?;
    if !cli.quiet {
        for (name, m) in [("position", &skill.position), ("orientation", &skill.orientation)] {
            if m.degenerate_axes.iter().any(|&d| d) {
                eprintln!("{name}: axes {:?} have no goal amplitude; their forcing is zero", m.degenerate_axes);
            }
        }
    }
    let mut s = dmp::skill_to_json(&skill);
    s.push('\n');
    Ok(s)
}

fn cmd_rollout(cli: &Cli, a: &RolloutArgs) -> Result<String> {
    json_only(cli, "dmp")?;
    let skill = dmp::skill_from_json(&crate::io::read_text(&a.model)?)?;
    let frame = load_frame_or_identity(&a.frame)?;
    let start = if a.start_position.is_empty() {
        None
    } else {
        let x = point3(&a.start_position, "start-position")?;
        let q = match a.start_orientation.as_slice() {
            [w, i, j, k] => Quaternion::new(*w, *i, *j, *k),
            other => {
                return Err(Error::validation(format!(
                    "--start-orientation needs 4 values, got {}",
                    other.len()
                )))
            }
        };
        if (q.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::validation(format!("start orientation has norm {}", q.norm())));
        }
        Some((x, UnitQuaternion::new_unchecked(q)))
    };
    let pose = dmp::rollout_skill(&skill, &frame, start, a.steps)?;
    let mut s = dmp::pose_to_json(&pose);
    s.push('\n');
    Ok(s)
}
