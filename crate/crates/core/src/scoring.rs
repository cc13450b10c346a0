//! Score functions over (trajectory, candidate point).
//!
//! Every score is oriented so that larger is better. The residual score is
//! negated for that reason.

use std::fmt;
use std::str::FromStr;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trajectory::{InfluencePoint, Trajectory};

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_FD_STEP: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreKind {
    DirectionalConsistency,
    CosineSimilarity,
    QuadraticResidual,
}

impl fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ScoreKind::DirectionalConsistency => "directional_consistency",
            ScoreKind::CosineSimilarity => "cosine_similarity",
            ScoreKind::QuadraticResidual => "quadratic_residual",
        })
    }
}

impl FromStr for ScoreKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "directional_consistency" | "dcs" => Ok(ScoreKind::DirectionalConsistency),
            "cosine_similarity" | "cosine" => Ok(ScoreKind::CosineSimilarity),
            "quadratic_residual" | "quadratic" => Ok(ScoreKind::QuadraticResidual),
            other => Err(Error::parse(format!("unknown score {other:?}"))),
        }
    }
}

/// A score kind together with its regularizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreFunction {
    pub kind: ScoreKind,
    pub epsilon: f64,
}

impl ScoreFunction {
    pub fn new(kind: ScoreKind, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::validation(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { kind, epsilon })
    }

    pub fn directional_consistency() -> Self {
        Self {
            kind: ScoreKind::DirectionalConsistency,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn cosine_similarity() -> Self {
        Self {
            kind: ScoreKind::CosineSimilarity,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn quadratic_residual() -> Self {
        Self {
            kind: ScoreKind::QuadraticResidual,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn evaluate(&self, traj: &Trajectory, p: &InfluencePoint) -> Result<f64> {
        check_dims(traj, p)?;
        Ok(self.evaluate_at(traj, p.coords()))
    }

    /// Unchecked evaluation on a raw vector. Components beyond `traj.dim()`
    /// must be zero.
    pub(crate) fn evaluate_at(&self, traj: &Trajectory, p: &Vector3<f64>) -> f64 {
        match self.kind {
            ScoreKind::DirectionalConsistency => dcs(traj, p, self.epsilon),
            ScoreKind::CosineSimilarity => cosine(traj, p, self.epsilon),
            ScoreKind::QuadraticResidual => quadratic(traj, p),
        }
    }
}

impl Default for ScoreFunction {
    fn default() -> Self {
        Self::directional_consistency()
    }
}

fn check_dims(traj: &Trajectory, p: &InfluencePoint) -> Result<()> {
    if traj.dim() != p.dim() {
        return Err(Error::DimensionMismatch {
            expected: traj.dim(),
            found: p.dim(),
        });
    }
    Ok(())
}

fn dcs(traj: &Trajectory, p: &Vector3<f64>, eps: f64) -> f64 {
    let sum: f64 = traj
        .positions()
        .iter()
        .zip(traj.accelerations())
        .map(|(x, a)| {
            let d = p - x;
            (d / (d.norm() + eps) - a).norm()
        })
        .sum();
    -sum / traj.len() as f64
}

fn cosine(traj: &Trajectory, p: &Vector3<f64>, eps: f64) -> f64 {
    let sum: f64 = traj
        .positions()
        .iter()
        .zip(traj.accelerations())
        .map(|(x, a)| {
            let d = p - x;
            (d.dot(a) / (d.norm() * a.norm() + eps)).abs()
        })
        .sum();
    sum / traj.len() as f64
}

fn quadratic(traj: &Trajectory, p: &Vector3<f64>) -> f64 {
    let sum: f64 = traj
        .positions()
        .iter()
        .zip(traj.accelerations())
        .map(|(x, a)| (p - x - a).norm_squared())
        .sum();
    -sum / traj.len() as f64
}

/// Negative mean distance between the regularized unit direction toward `p`
/// and the observed acceleration.
pub fn directional_consistency_score(
    traj: &Trajectory,
    p: &InfluencePoint,
    epsilon: f64,
) -> Result<f64> {
    ScoreFunction::new(ScoreKind::DirectionalConsistency, epsilon)?.evaluate(traj, p)
}

/// Mean absolute cosine between the direction toward `p` and the acceleration.
pub fn cosine_similarity_score(traj: &Trajectory, p: &InfluencePoint, epsilon: f64) -> Result<f64> {
    ScoreFunction::new(ScoreKind::CosineSimilarity, epsilon)?.evaluate(traj, p)
}

/// Negative mean squared residual between `p - x_t` and the acceleration.
pub fn quadratic_residual_score(traj: &Trajectory, p: &InfluencePoint) -> Result<f64> {
    check_dims(traj, p)?;
    Ok(quadratic(traj, p.coords()))
}

/// Central finite-difference gradient over the active axes. Inactive
/// components of the result are zero.
pub fn fd_gradient(
    score: &ScoreFunction,
    traj: &Trajectory,
    p: &InfluencePoint,
    step: f64,
) -> Result<Vector3<f64>> {
    check_dims(traj, p)?;
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::validation(format!("fd step must be positive, got {step}")));
    }
    Ok(fd_gradient_at(score, traj, p.coords(), step))
}

pub(crate) fn fd_gradient_at(
    score: &ScoreFunction,
    traj: &Trajectory,
    p: &Vector3<f64>,
    step: f64,
) -> Vector3<f64> {
    let mut grad = Vector3::zeros();
    let mut probe = *p;
    for i in 0..traj.dim() {
        probe[i] = p[i] + step;
        let hi = score.evaluate_at(traj, &probe);
        probe[i] = p[i] - step;
        let lo = score.evaluate_at(traj, &probe);
        probe[i] = p[i];
        grad[i] = (hi - lo) / (2.0 * step);
    }
    grad
}
