//! Monte-Carlo benchmarks over simulated episodes, and score landscapes.
//!
//! Every trial draws its episode from a stream that depends only on the base
//! seed and the seed index, so all methods and noise levels see the same
//! targets and start velocities. Optimizer streams add the method's tag.
//! Trials run in parallel on the current rayon pool and are collected in a
//! fixed order, so reports do not depend on the worker count.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::inference::{infer_partial, infer_sequential, Method, OptimizerConfig};
use crate::rng::RngSpec;
use crate::scoring::ScoreFunction;
use crate::simulator::{accelerations_for_inference, simulate, AccelMode, SecondPoint, SimConfig, SimEpisode};
use crate::trajectory::{mede, vector_from_slice, InfluencePoint, Trajectory};

/// Worker-count fallback when no explicit count is given.
pub const JOBS_ENV: &str = "TREF6_JOBS";

pub const STANDARD_NOISE_LEVELS: [f64; 5] = [0.0, 0.1, 0.3, 0.5, 0.8];
pub const STANDARD_SWITCH_RATIOS: [f64; 3] = [0.3, 0.5, 0.7];

/// Round to 6 significant digits.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().expect("formatted float parses")
}

fn ser_sig6<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(sig6(*x))
}

fn ser_sig6_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&sig6(*v)),
        None => s.serialize_none(),
    }
}

/// Shared settings for every benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSettings {
    pub base_seed: u64,
    pub seeds: usize,
    pub accel_mode: AccelMode,
    /// Episode template; `noise_level` is replaced per cell.
    pub sim: SimConfig,
    pub optimizer: OptimizerConfig,
}

impl Default for BenchSettings {
    fn default() -> Self {
        Self {
            base_seed: 0,
            seeds: 50,
            accel_mode: AccelMode::Differentiated,
            sim: SimConfig::default(),
            optimizer: OptimizerConfig::default(),
        }
    }
}

impl BenchSettings {
    pub fn validate(&self, noise_levels: &[f64]) -> Result<()> {
        if self.seeds == 0 {
            return Err(Error::validation("seeds must be at least 1"));
        }
        if noise_levels.is_empty() {
            return Err(Error::validation("noise level list is empty"));
        }
        for &nu in noise_levels {
            SimConfig {
                noise_level: nu,
                ..self.sim.clone()
            }
            .validate()?;
        }
        self.optimizer.validate(self.sim.steps)
    }

    pub fn episode_stream(&self, seed: u64) -> RngSpec {
        RngSpec::from_seed(self.base_seed).derive(seed)
    }

    pub fn method_stream(&self, seed: u64, method: Method) -> RngSpec {
        RngSpec::from_seed(self.base_seed).derive_all(&[seed, method.stream_tag()])
    }

    pub fn episode(&self, noise_level: f64, seed: u64) -> Result<SimEpisode> {
        let cfg = SimConfig {
            noise_level,
            ..self.sim.clone()
        };
        simulate(&cfg, self.episode_stream(seed))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub seed: u64,
    #[serde(serialize_with = "ser_sig6_opt")]
    pub mede: Option<f64>,
    /// `ok` or the error kind that excluded the trial.
    pub status: String,
}

impl Trial {
    fn from_result(seed: u64, r: Result<f64>) -> Self {
        match r {
            Ok(e) if e.is_finite() => Trial {
                seed,
                mede: Some(e),
                status: "ok".into(),
            },
            Ok(_) => Trial {
                seed,
                mede: None,
                status: "non_finite".into(),
            },
            Err(e) => Trial {
                seed,
                mede: None,
                status: e.kind().into(),
            },
        }
    }
}

/// Aggregate over the seeds of one (method, noise, key) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: String,
    pub noise: f64,
    /// Extra axis of the sweep, such as `prefix=30`; empty for plain tables.
    pub key: String,
    #[serde(serialize_with = "ser_sig6_opt")]
    pub mean: Option<f64>,
    /// Population standard deviation.
    #[serde(serialize_with = "ser_sig6_opt")]
    pub std: Option<f64>,
    pub successes: usize,
    pub failures: usize,
    pub trials: Vec<Trial>,
}

impl Cell {
    fn new(method: String, noise: f64, key: String, mut trials: Vec<Trial>) -> Self {
        trials.sort_by_key(|t| t.seed);
        let ok: Vec<f64> = trials.iter().filter_map(|t| t.mede).collect();
        let (mean, std) = mean_std(&ok);
        Self {
            method,
            noise,
            key,
            mean,
            std,
            successes: ok.len(),
            failures: trials.len() - ok.len(),
            trials,
        }
    }

    pub fn values(&self) -> Vec<f64> {
        self.trials.iter().filter_map(|t| t.mede).collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.trials.iter().map(|t| t.seed).collect()
    }
}

/// Mean and population standard deviation; `None` for an empty sample.
pub fn mean_std(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (Some(mean), Some(var.sqrt()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchKind {
    Mede,
    Partial,
    Sequential,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub kind: BenchKind,
    pub settings: BenchSettings,
    pub methods: Vec<Method>,
    pub noise_levels: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prefix_lens: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub switch_ratios: Option<Vec<f64>>,
    pub cells: Vec<Cell>,
}

impl BenchReport {
    pub fn cell(&self, method: &str, noise: f64, key: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.noise == noise && c.key == key)
    }

    pub fn mean(&self, method: &str, noise: f64, key: &str) -> Option<f64> {
        self.cell(method, noise, key).and_then(|c| c.mean)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per trial: `method,noise,key,seed,mede,status`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method", "noise", "key", "seed", "mede", "status"])
            .expect("in-memory write");
        for c in &self.cells {
            for t in &c.trials {
                let mede = t.mede.map(|m| sig6(m).to_string()).unwrap_or_default();
                w.write_record([
                    c.method.as_str(),
                    &c.noise.to_string(),
                    &c.key,
                    &t.seed.to_string(),
                    &mede,
                    &t.status,
                ])
                .expect("in-memory write");
            }
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }

    /// Human-readable `mean ± std` table.
    pub fn summary(&self) -> String {
        let mut out = String::new();
        for c in &self.cells {
            let label = if c.key.is_empty() {
                c.method.clone()
            } else {
                format!("{} {}", c.method, c.key)
            };
            let stats = match (c.mean, c.std) {
                (Some(m), Some(s)) => format!("{m:.4} ± {s:.4}"),
                _ => "n/a".into(),
            };
            let _ = write!(out, "{label:<28} ν={:<4} {stats}", c.noise);
            if c.failures > 0 {
                let _ = write!(out, "  ({} failed)", c.failures);
            }
            out.push('\n');
        }
        out
    }
}

/// Runs `f` on a pool of `jobs` workers, falling back to `TREF6_JOBS`, then
/// to rayon's default.
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let jobs = match jobs {
        Some(j) => Some(j),
        None => match std::env::var(JOBS_ENV) {
            Ok(v) if !v.trim().is_empty() => Some(
                v.trim()
                    .parse::<usize>()
                    .map_err(|e| Error::validation(format!("{JOBS_ENV}={v:?}: {e}")))?,
            ),
            _ => None,
        },
    };
    match jobs {
        Some(0) => Err(Error::validation("jobs must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::validation(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

fn episode_error(settings: &BenchSettings, noise: f64, seed: u64, method: Method) -> Result<f64> {
    let ep = settings.episode(noise, seed)?;
    let traj = accelerations_for_inference(&ep, settings.accel_mode)?;
    let r = method.infer(&traj, &settings.optimizer, settings.method_stream(seed, method))?;
    mede(&r.point, &ep.truth)
}

/// MEDE table: every method at every noise level over `settings.seeds` seeds.
pub fn run_mede_benchmark(settings: &BenchSettings, methods: &[Method], noise_levels: &[f64]) -> Result<BenchReport> {
    settings.validate(noise_levels)?;
    if methods.is_empty() {
        return Err(Error::validation("method list is empty"));
    }
    let jobs: Vec<(Method, f64, u64)> = methods
        .iter()
        .flat_map(|&m| {
            noise_levels
                .iter()
                .flat_map(move |&nu| (0..settings.seeds as u64).map(move |s| (m, nu, s)))
        })
        .collect();
    let trials: Vec<Trial> = jobs
        .par_iter()
        .map(|&(m, nu, s)| Trial::from_result(s, episode_error(settings, nu, s, m)))
        .collect();
    let mut chunks = trials.chunks(settings.seeds);
    let mut cells = Vec::new();
    for &m in methods {
        for &nu in noise_levels {
            let chunk = chunks.next().expect("one chunk per cell").to_vec();
            cells.push(Cell::new(m.name().into(), nu, String::new(), chunk));
        }
    }
    Ok(BenchReport {
        kind: BenchKind::Mede,
        settings: settings.clone(),
        methods: methods.to_vec(),
        noise_levels: noise_levels.to_vec(),
        prefix_lens: None,
        switch_ratios: None,
        cells,
    })
}

/// The first `len` samples as an observer would see them: differentiated
/// accelerations use only the prefix positions.
pub fn observed_prefix(ep: &SimEpisode, mode: AccelMode, len: usize) -> Result<Trajectory> {
    match mode {
        AccelMode::Recorded => accelerations_for_inference(ep, mode)?.prefix(len),
        AccelMode::Differentiated => {
            let positions = ep.trajectory.prefix(len)?.positions().to_vec();
            Trajectory::from_positions(ep.trajectory.dim(), ep.trajectory.dt(), positions)
        }
    }
}

fn min_prefix(mode: AccelMode) -> usize {
    match mode {
        AccelMode::Recorded => 2,
        AccelMode::Differentiated => 3,
    }
}

/// DCS error as a function of how much of the trajectory is observed.
pub fn run_partial_benchmark(settings: &BenchSettings, noise_levels: &[f64], prefix_lens: &[usize]) -> Result<BenchReport> {
    settings.validate(noise_levels)?;
    let floor = min_prefix(settings.accel_mode);
    if prefix_lens.is_empty() {
        return Err(Error::validation("prefix list is empty"));
    }
    if let Some(&bad) = prefix_lens.iter().find(|&&p| p < floor || p > settings.sim.steps) {
        return Err(Error::validation(format!(
            "prefix {bad} outside {floor}..={} for {:?} accelerations",
            settings.sim.steps, settings.accel_mode
        )));
    }
    let method = Method::Dcs;
    let score = method.score_function();
    let jobs: Vec<(f64, usize, u64)> = noise_levels
        .iter()
        .flat_map(|&nu| {
            prefix_lens
                .iter()
                .flat_map(move |&p| (0..settings.seeds as u64).map(move |s| (nu, p, s)))
        })
        .collect();
    let trials: Vec<Trial> = jobs
        .par_iter()
        .map(|&(nu, p, s)| {
            let r = (|| {
                let ep = settings.episode(nu, s)?;
                let traj = observed_prefix(&ep, settings.accel_mode, p)?;
                let r = infer_partial(&score, &traj, p, &settings.optimizer, settings.method_stream(s, method))?;
                mede(&r.point, &ep.truth)
            })();
            Trial::from_result(s, r)
        })
        .collect();
    let mut chunks = trials.chunks(settings.seeds);
    let mut cells = Vec::new();
    for &nu in noise_levels {
        for &p in prefix_lens {
            let chunk = chunks.next().expect("one chunk per cell").to_vec();
            cells.push(Cell::new(method.name().into(), nu, prefix_key(p), chunk));
        }
    }
    Ok(BenchReport {
        kind: BenchKind::Partial,
        settings: settings.clone(),
        methods: vec![method],
        noise_levels: noise_levels.to_vec(),
        prefix_lens: Some(prefix_lens.to_vec()),
        switch_ratios: None,
        cells,
    })
}

pub fn prefix_key(len: usize) -> String {
    format!("prefix={len}")
}

/// Cell key for one part of a sequential run; `part` is `p1`, `p2` or `overall`.
pub fn ratio_key(ratio: f64, part: &str) -> String {
    format!("ratio={ratio}:{part}")
}

pub fn switch_step_for(ratio: f64, steps: usize) -> usize {
    (ratio * steps as f64).round() as usize
}

/// Two-target episodes split at `round(ratio · steps)`, each segment fitted
/// on its own. Cells report the error on each point and their average.
pub fn run_sequential_benchmark(
    settings: &BenchSettings,
    noise_levels: &[f64],
    switch_ratios: &[f64],
    second: SecondPoint,
) -> Result<BenchReport> {
    settings.validate(noise_levels)?;
    if switch_ratios.is_empty() {
        return Err(Error::validation("switch ratio list is empty"));
    }
    for &r in switch_ratios {
        if !(r > 0.0 && r < 1.0) {
            return Err(Error::validation(format!("switch ratio must lie in (0, 1), got {r}")));
        }
        let step = switch_step_for(r, settings.sim.steps);
        settings.sim.clone().sequential(second.clone(), step).validate()?;
    }
    let method = Method::Dcs;
    let score = method.score_function();
    let jobs: Vec<(f64, f64, u64)> = noise_levels
        .iter()
        .flat_map(|&nu| {
            switch_ratios
                .iter()
                .flat_map(move |&r| (0..settings.seeds as u64).map(move |s| (nu, r, s)))
        })
        .collect();
    let results: Vec<[Trial; 3]> = jobs
        .par_iter()
        .map(|&(nu, ratio, s)| {
            let r = (|| {
                let step = switch_step_for(ratio, settings.sim.steps);
                let cfg = SimConfig {
                    noise_level: nu,
                    ..settings.sim.clone().sequential(second.clone(), step)
                };
                let ep = simulate(&cfg, settings.episode_stream(s))?;
                let traj = accelerations_for_inference(&ep, settings.accel_mode)?;
                let seq = infer_sequential(&score, &traj, step, &settings.optimizer, settings.method_stream(s, method))?;
                let truth2 = ep.truth2.as_ref().expect("sequential episode has a second target");
                Ok((mede(seq.p1(), &ep.truth)?, mede(seq.p2(), truth2)?))
            })();
            match r {
                Ok((e1, e2)) => [
                    Trial::from_result(s, Ok(e1)),
                    Trial::from_result(s, Ok(e2)),
                    Trial::from_result(s, Ok(0.5 * (e1 + e2))),
                ],
                Err(e) => {
                    let t = Trial::from_result(s, Err(e));
                    [t.clone(), t.clone(), t]
                }
            }
        })
        .collect();
    let mut chunks = results.chunks(settings.seeds);
    let mut cells = Vec::new();
    for &nu in noise_levels {
        for &ratio in switch_ratios {
            let chunk = chunks.next().expect("one chunk per cell");
            for (i, part) in ["p1", "p2", "overall"].into_iter().enumerate() {
                let trials = chunk.iter().map(|t| t[i].clone()).collect();
                cells.push(Cell::new(method.name().into(), nu, ratio_key(ratio, part), trials));
            }
        }
    }
    Ok(BenchReport {
        kind: BenchKind::Sequential,
        settings: settings.clone(),
        methods: vec![method],
        noise_levels: noise_levels.to_vec(),
        prefix_lens: None,
        switch_ratios: Some(switch_ratios.to_vec()),
        cells,
    })
}

/// Structured against random initialization at one noise level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub noise: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub structured_mean: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub random_mean: f64,
    /// `1 − structured / random`
    #[serde(serialize_with = "ser_sig6")]
    pub reduction: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub structured_var: f64,
    #[serde(serialize_with = "ser_sig6")]
    pub random_var: f64,
}

/// Compares the `dcs` and `dcs_random_init` cells of a MEDE report.
pub fn init_ablation(report: &BenchReport) -> Result<Vec<AblationRow>> {
    report
        .noise_levels
        .iter()
        .map(|&nu| {
            let get = |m: Method| {
                report
                    .cell(m.name(), nu, "")
                    .and_then(|c| Some((c.mean?, c.std?)))
                    .ok_or_else(|| Error::validation(format!("report has no {m} cell with successes at ν={nu}")))
            };
            let (sm, ss) = get(Method::Dcs)?;
            let (rm, rs) = get(Method::DcsRandomInit)?;
            Ok(AblationRow {
                noise: nu,
                structured_mean: sm,
                random_mean: rm,
                reduction: 1.0 - sm / rm,
                structured_var: ss * ss,
                random_var: rs * rs,
            })
        })
        .collect()
}

/// Score values on a regular grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    /// Sample coordinates along each axis.
    pub axes: Vec<Vec<f64>>,
    /// Row-major over `axes`, the last axis varying fastest.
    pub values: Vec<f64>,
}

impl Landscape {
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        let mut idx = flat;
        let mut out = vec![0.0; self.axes.len()];
        for (d, axis) in self.axes.iter().enumerate().rev() {
            out[d] = axis[idx % axis.len()];
            idx /= axis.len();
        }
        out
    }

    /// Grid point with the highest score; ties keep the first.
    pub fn argmax(&self) -> (Vec<f64>, f64) {
        let (i, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
        (self.point(i), v)
    }

    /// `px,py[,pz],score`
    pub fn to_csv(&self) -> String {
        let names = ["px", "py", "pz"];
        let mut out = names[..self.dim()].join(",");
        out.push_str(",score\n");
        for (i, v) in self.values.iter().enumerate() {
            for c in self.point(i) {
                let _ = write!(out, "{c},");
            }
            let _ = writeln!(out, "{v}");
        }
        out
    }
}

fn axis_samples(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect()
}

/// Evaluates `score` on a regular grid with `resolution[d]` samples along
/// axis `d`, endpoints included. A single sample sits at the midpoint.
/// Axes past the trajectory dimension are not allowed; a 3D trajectory can be
/// sliced by giving one axis a single sample.
pub fn score_landscape(
    traj: &Trajectory,
    score: &ScoreFunction,
    grid_min: &[f64],
    grid_max: &[f64],
    resolution: &[usize],
) -> Result<Landscape> {
    let dim = traj.dim();
    if grid_min.len() != dim || grid_max.len() != dim || resolution.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: grid_min.len().max(grid_max.len()).max(resolution.len()),
        });
    }
    for d in 0..dim {
        if !(grid_min[d].is_finite() && grid_max[d].is_finite()) {
            return Err(Error::validation("grid bounds must be finite"));
        }
        if grid_min[d] > grid_max[d] {
            return Err(Error::validation(format!(
                "inverted bounds on axis {d}: {} > {}",
                grid_min[d], grid_max[d]
            )));
        }
        if resolution[d] == 0 {
            return Err(Error::validation("resolution must be at least 1 per axis"));
        }
    }
    let axes: Vec<Vec<f64>> = (0..dim)
        .map(|d| axis_samples(grid_min[d], grid_max[d], resolution[d]))
        .collect();
    let total: usize = resolution.iter().product();
    let grid = Landscape {
        axes,
        values: Vec::new(),
    };
    let values = (0..total)
        .into_par_iter()
        .map(|i| {
            let p = InfluencePoint::new(dim, vector_from_slice(dim, &grid.point(i))?)?;
            score.evaluate(traj, &p)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Landscape { values, ..grid })
}
