//! Influence-point estimators.
//!
//! The main estimator seeds a finite-difference Adam ascent near the
//! high-acceleration part of the trajectory and keeps the best iterate it
//! visits. Alternatives: a uniformly random seed (ablation), closed-form ray
//! triangulation, and the same ascent on the two baseline scores.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSpec;
use crate::scoring::{fd_gradient_at, ScoreFunction, DEFAULT_FD_STEP};
use crate::trajectory::{InfluencePoint, Trajectory};

/// Accelerations at or below this norm carry no direction.
pub const MIN_RAY_NORM: f64 = 1e-12;
pub const MAX_CONDITION_NUMBER: f64 = 1e10;
/// Inflation of the trajectory bounding box for random initialization (m).
pub const RANDOM_INIT_MARGIN: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitMode {
    Structured,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub steps: usize,
    pub top_k: usize,
    pub init_sigma: f64,
    pub fd_step: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub convergence_tol: f64,
    pub init_mode: InitMode,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            steps: 500,
            top_k: 5,
            init_sigma: 0.5,
            fd_step: DEFAULT_FD_STEP,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            convergence_tol: 1e-6,
            init_mode: InitMode::Structured,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self, traj_len: usize) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.learning_rate) {
            return Err(Error::validation("learning rate must be positive"));
        }
        if self.steps == 0 {
            return Err(Error::validation("steps must be at least 1"));
        }
        if self.top_k == 0 || self.top_k > traj_len {
            return Err(Error::validation(format!(
                "top_k must be in 1..={traj_len}, got {}",
                self.top_k
            )));
        }
        if !(self.init_sigma.is_finite() && self.init_sigma >= 0.0) {
            return Err(Error::validation("init_sigma must be non-negative"));
        }
        if !positive(self.fd_step) || !positive(self.adam_eps) {
            return Err(Error::validation("fd_step and adam_eps must be positive"));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::validation("Adam betas must lie in [0, 1)"));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol >= 0.0) {
            return Err(Error::validation("convergence_tol must be non-negative"));
        }
        Ok(())
    }

    /// Copy with `top_k` clamped to a trajectory of `len` samples.
    fn clamped_to(&self, len: usize) -> Self {
        Self {
            top_k: self.top_k.min(len),
            ..*self
        }
    }
}

/// Estimated point plus optimizer bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InferenceResult {
    #[serde(with = "point_serde")]
    pub point: InfluencePoint,
    pub score: f64,
    pub iterations: usize,
    #[serde(with = "point_serde")]
    pub init_point: InfluencePoint,
    pub converged: bool,
}

pub(crate) mod point_serde {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::trajectory::InfluencePoint;

    pub fn serialize<S: Serializer>(p: &InfluencePoint, s: S) -> Result<S::Ok, S::Error> {
        p.to_vec().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<InfluencePoint, D::Error> {
        let v = Vec::<f64>::deserialize(d)?;
        InfluencePoint::from_slice(&v).map_err(serde::de::Error::custom)
    }
}

/// Two independent estimates for a trajectory split at a known step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequentialResult {
    pub switch_step: usize,
    pub first: InferenceResult,
    pub second: InferenceResult,
}

impl SequentialResult {
    pub fn p1(&self) -> &InfluencePoint {
        &self.first.point
    }

    pub fn p2(&self) -> &InfluencePoint {
        &self.second.point
    }

    pub fn scores(&self) -> (f64, f64) {
        (self.first.score, self.second.score)
    }
}

fn sample_gaussian(rng: &mut impl Rng, dim: usize, sigma: f64) -> Vector3<f64> {
    let mut n = Vector3::zeros();
    for i in 0..dim {
        let z: f64 = rng.sample(StandardNormal);
        n[i] = sigma * z;
    }
    n
}

/// Centroid of the positions at the `k` largest-acceleration steps, plus
/// isotropic Gaussian noise of scale `sigma`. Ties go to the earlier step.
pub fn topk_init(traj: &Trajectory, k: usize, sigma: f64, rng: RngSpec) -> Result<InfluencePoint> {
    if k == 0 || k > traj.len() {
        return Err(Error::validation(format!(
            "k must be in 1..={}, got {k}",
            traj.len()
        )));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(Error::validation("sigma must be non-negative"));
    }
    let norms: Vec<f64> = traj.accelerations().iter().map(|a| a.norm()).collect();
    let mut order: Vec<usize> = (0..traj.len()).collect();
    order.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let centroid = order[..k]
        .iter()
        .fold(Vector3::zeros(), |acc, &t| acc + traj.positions()[t])
        / k as f64;
    let noise = sample_gaussian(&mut rng.rng(), traj.dim(), sigma);
    InfluencePoint::new(traj.dim(), centroid + noise)
}

/// Uniform draw from the position bounding box grown by `margin` on every side.
pub fn random_init(traj: &Trajectory, margin: f64, rng: RngSpec) -> Result<InfluencePoint> {
    let (lo, hi) = traj.bounding_box();
    let mut r = rng.rng();
    let mut p = Vector3::zeros();
    for i in 0..traj.dim() {
        let u: f64 = r.random();
        let (a, b) = (lo[i] - margin, hi[i] + margin);
        p[i] = a + u * (b - a);
    }
    InfluencePoint::new(traj.dim(), p)
}

/// Finite-difference Adam ascent from `init`. Returns the best iterate visited.
pub fn optimize_from(
    score: &ScoreFunction,
    traj: &Trajectory,
    cfg: &OptimizerConfig,
    init: &InfluencePoint,
) -> Result<InferenceResult> {
    cfg.validate(traj.len())?;
    if init.dim() != traj.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: init.dim(),
        });
    }
    let dim = traj.dim();
    let mut p = *init.coords();
    let mut best_p = p;
    let mut best_score = score.evaluate_at(traj, &p);
    if !best_score.is_finite() {
        return Err(Error::NonFinite);
    }

    let mut m = Vector3::<f64>::zeros();
    let mut v = Vector3::<f64>::zeros();
    let mut b1_pow = 1.0;
    let mut b2_pow = 1.0;
    let mut iterations = 0;
    let mut converged = false;
    let mut diverged = false;

    for step in 1..=cfg.steps {
        let g = fd_gradient_at(score, traj, &p, cfg.fd_step);
        if !g.iter().all(|c| c.is_finite()) {
            diverged = true;
            break;
        }
        if g.norm() < cfg.convergence_tol {
            converged = true;
            break;
        }
        m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
        v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.component_mul(&g);
        b1_pow *= cfg.adam_beta1;
        b2_pow *= cfg.adam_beta2;
        for i in 0..dim {
            let m_hat = m[i] / (1.0 - b1_pow);
            let v_hat = v[i] / (1.0 - b2_pow);
            // Ascent: S is maximized.
            p[i] += cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_eps);
        }
        iterations = step;

        let s = score.evaluate_at(traj, &p);
        if !(s.is_finite() && p.iter().all(|c| c.is_finite())) {
            diverged = true;
            break;
        }
        if s > best_score {
            best_score = s;
            best_p = p;
        }
    }

    if !converged && !diverged {
        converged = fd_gradient_at(score, traj, &p, cfg.fd_step).norm() < cfg.convergence_tol;
    }

    Ok(InferenceResult {
        point: InfluencePoint::new(dim, best_p)?,
        score: best_score,
        iterations,
        init_point: *init,
        converged,
    })
}

/// Initialize per `cfg.init_mode`, then ascend.
pub fn optimize(
    score: &ScoreFunction,
    traj: &Trajectory,
    cfg: &OptimizerConfig,
    rng: RngSpec,
) -> Result<InferenceResult> {
    cfg.validate(traj.len())?;
    let init = match cfg.init_mode {
        InitMode::Structured => topk_init(traj, cfg.top_k, cfg.init_sigma, rng)?,
        InitMode::Random => random_init(traj, RANDOM_INIT_MARGIN, rng)?,
    };
    optimize_from(score, traj, cfg, &init)
}

/// Least-squares point closest to every acceleration ray.
pub fn triangulate(traj: &Trajectory) -> Result<InfluencePoint> {
    let dim = traj.dim();
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    let mut b = DVector::<f64>::zeros(dim);
    let mut rays = 0usize;
    for (x, acc) in traj.positions().iter().zip(traj.accelerations()) {
        let n = acc.norm();
        if n <= MIN_RAY_NORM {
            continue;
        }
        let u = acc / n;
        rays += 1;
        for r in 0..dim {
            for c in 0..dim {
                let proj = if r == c { 1.0 } else { 0.0 } - u[r] * u[c];
                a[(r, c)] += proj;
                b[r] += proj * x[c];
            }
        }
    }
    if rays < 2 {
        return Err(Error::DegenerateRays(format!(
            "{rays} usable rays, need at least 2"
        )));
    }
    let eig = a.clone().symmetric_eigen();
    let lo = eig.eigenvalues.min();
    let hi = eig.eigenvalues.max();
    if !(lo > 0.0) || hi / lo > MAX_CONDITION_NUMBER {
        return Err(Error::DegenerateRays(format!(
            "normal matrix is ill-conditioned (eigenvalues {lo:e}..{hi:e})"
        )));
    }
    let chol = a
        .cholesky()
        .ok_or_else(|| Error::DegenerateRays("normal matrix is not positive definite".into()))?;
    let sol = chol.solve(&b);
    let mut p = Vector3::zeros();
    p.as_mut_slice()[..dim].copy_from_slice(sol.as_slice());
    InfluencePoint::new(dim, p)
}

/// Runs `optimize` on the first `prefix_len` samples. `top_k` is clamped to
/// the prefix length.
pub fn infer_partial(
    score: &ScoreFunction,
    traj: &Trajectory,
    prefix_len: usize,
    cfg: &OptimizerConfig,
    rng: RngSpec,
) -> Result<InferenceResult> {
    if prefix_len < 2 || prefix_len > traj.len() {
        return Err(Error::validation(format!(
            "prefix_len must be in 2..={}, got {prefix_len}",
            traj.len()
        )));
    }
    let prefix = traj.prefix(prefix_len)?;
    optimize(score, &prefix, &cfg.clamped_to(prefix_len), rng)
}

/// Stream tags for the two segments of a sequential inference.
pub const FIRST_SEGMENT_STREAM: u64 = 1;
pub const SECOND_SEGMENT_STREAM: u64 = 2;

/// Splits at `switch_step` and fits each segment independently.
pub fn infer_sequential(
    score: &ScoreFunction,
    traj: &Trajectory,
    switch_step: usize,
    cfg: &OptimizerConfig,
    rng: RngSpec,
) -> Result<SequentialResult> {
    let n = traj.len();
    if switch_step < 2 || switch_step + 2 > n {
        return Err(Error::validation(format!(
            "switch_step must be in 2..={}, got {switch_step}",
            n.saturating_sub(2)
        )));
    }
    let head = traj.slice(0, switch_step)?;
    let tail = traj.slice(switch_step, n)?;
    let first = optimize(score, &head, &cfg.clamped_to(head.len()), rng.derive(FIRST_SEGMENT_STREAM))?;
    let second = optimize(score, &tail, &cfg.clamped_to(tail.len()), rng.derive(SECOND_SEGMENT_STREAM))?;
    Ok(SequentialResult {
        switch_step,
        first,
        second,
    })
}

/// The estimators compared in the benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Dcs,
    DcsRandomInit,
    Triangulate,
    Cosine,
    Quadratic,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Dcs,
        Method::DcsRandomInit,
        Method::Triangulate,
        Method::Cosine,
        Method::Quadratic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Dcs => "dcs",
            Method::DcsRandomInit => "dcs_random_init",
            Method::Triangulate => "triangulate",
            Method::Cosine => "cosine",
            Method::Quadratic => "quadratic",
        }
    }

    /// Stable tag for RNG stream derivation.
    pub fn stream_tag(&self) -> u64 {
        match self {
            Method::Dcs => 11,
            Method::DcsRandomInit => 12,
            Method::Triangulate => 13,
            Method::Cosine => 14,
            Method::Quadratic => 15,
        }
    }

    /// The score this method ascends; triangulation reports the
    /// directional consistency of its point.
    pub fn score_function(&self) -> ScoreFunction {
        match self {
            Method::Cosine => ScoreFunction::cosine_similarity(),
            Method::Quadratic => ScoreFunction::quadratic_residual(),
            _ => ScoreFunction::directional_consistency(),
        }
    }

    pub fn infer(&self, traj: &Trajectory, cfg: &OptimizerConfig, rng: RngSpec) -> Result<InferenceResult> {
        match self {
            Method::Triangulate => {
                let point = triangulate(traj)?;
                Ok(InferenceResult {
                    score: self.score_function().evaluate(traj, &point)?,
                    point,
                    iterations: 0,
                    init_point: point,
                    converged: true,
                })
            }
            Method::DcsRandomInit => {
                let cfg = OptimizerConfig {
                    init_mode: InitMode::Random,
                    ..*cfg
                };
                optimize(&self.score_function(), traj, &cfg, rng)
            }
            _ => optimize(&self.score_function(), traj, cfg, rng),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .iter()
            .copied()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::parse(format!("unknown method {s:?}")))
    }
}
