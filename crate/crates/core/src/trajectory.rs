//! Observed trajectories and candidate influence points.
//!
//! Everything is stored in `Vector3<f64>`; planar data keeps a zero third
//! component and carries `dim == 2` so that scores, gradients and solvers only
//! touch the active axes.

use nalgebra::{UnitQuaternion, Vector3};

use crate::error::{Error, Result};

const UNIT_NORM_TOL: f64 = 1e-9;

fn check_dim(dim: usize) -> Result<()> {
    if dim == 2 || dim == 3 {
        Ok(())
    } else {
        Err(Error::validation(format!("dim must be 2 or 3, got {dim}")))
    }
}

fn check_planar(dim: usize, v: &Vector3<f64>, what: &str) -> Result<()> {
    if !v.iter().all(|c| c.is_finite()) {
        return Err(Error::validation(format!("{what} has non-finite entries")));
    }
    if dim == 2 && v.z != 0.0 {
        return Err(Error::validation(format!(
            "{what} has a nonzero third component in a 2D trajectory"
        )));
    }
    Ok(())
}

/// Builds a `Vector3` from a `dim`-length slice.
pub fn vector_from_slice(dim: usize, values: &[f64]) -> Result<Vector3<f64>> {
    check_dim(dim)?;
    if values.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: values.len(),
        });
    }
    let mut v = Vector3::zeros();
    v.as_mut_slice()[..dim].copy_from_slice(values);
    Ok(v)
}

/// A time-indexed trajectory with positions, accelerations and optional orientations.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    dim: usize,
    dt: f64,
    positions: Vec<Vector3<f64>>,
    accelerations: Vec<Vector3<f64>>,
    orientations: Option<Vec<UnitQuaternion<f64>>>,
}

impl Trajectory {
    pub fn new(
        dim: usize,
        dt: f64,
        positions: Vec<Vector3<f64>>,
        accelerations: Vec<Vector3<f64>>,
    ) -> Result<Self> {
        check_dim(dim)?;
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation(format!("dt must be positive, got {dt}")));
        }
        if positions.len() != accelerations.len() {
            return Err(Error::validation(format!(
                "{} positions but {} accelerations",
                positions.len(),
                accelerations.len()
            )));
        }
        if positions.len() < 2 {
            return Err(Error::validation(format!(
                "trajectory needs at least 2 samples, got {}",
                positions.len()
            )));
        }
        for (t, (x, a)) in positions.iter().zip(&accelerations).enumerate() {
            check_planar(dim, x, &format!("position {t}"))?;
            check_planar(dim, a, &format!("acceleration {t}"))?;
        }
        Ok(Self {
            dim,
            dt,
            positions,
            accelerations,
            orientations: None,
        })
    }

    /// Builds a trajectory from positions alone, differentiating twice.
    pub fn from_positions(dim: usize, dt: f64, positions: Vec<Vector3<f64>>) -> Result<Self> {
        let accelerations = numeric_accelerations(&positions, dt)?;
        Self::new(dim, dt, positions, accelerations)
    }

    /// Attaches orientations (3D only). Each quaternion must already be unit
    /// norm within 1e-9; it is stored as given, without renormalizing.
    pub fn with_orientations(mut self, orientations: Vec<UnitQuaternion<f64>>) -> Result<Self> {
        if self.dim != 3 {
            return Err(Error::validation("orientations require a 3D trajectory"));
        }
        if orientations.len() != self.positions.len() {
            return Err(Error::validation(format!(
                "{} orientations for {} positions",
                orientations.len(),
                self.positions.len()
            )));
        }
        for (t, q) in orientations.iter().enumerate() {
            let n = q.as_ref().coords.norm();
            if !n.is_finite() || (n - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::validation(format!(
                    "orientation {t} has norm {n}, expected 1"
                )));
            }
        }
        self.orientations = Some(orientations);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    pub fn accelerations(&self) -> &[Vector3<f64>] {
        &self.accelerations
    }

    pub fn orientations(&self) -> Option<&[UnitQuaternion<f64>]> {
        self.orientations.as_deref()
    }

    /// Samples `[start, end)` as a new trajectory. Accelerations are sliced, not
    /// recomputed.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() || end - start < 2 {
            return Err(Error::validation(format!(
                "invalid slice {start}..{end} of a {}-sample trajectory",
                self.len()
            )));
        }
        Ok(Self {
            dim: self.dim,
            dt: self.dt,
            positions: self.positions[start..end].to_vec(),
            accelerations: self.accelerations[start..end].to_vec(),
            orientations: self.orientations.as_ref().map(|o| o[start..end].to_vec()),
        })
    }

    /// The first `len` samples.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        self.slice(0, len)
    }

    /// Same positions with a replacement acceleration sequence.
    pub fn with_accelerations(&self, accelerations: Vec<Vector3<f64>>) -> Result<Self> {
        let mut out = Self::new(self.dim, self.dt, self.positions.clone(), accelerations)?;
        out.orientations = self.orientations.clone();
        Ok(out)
    }

    /// Axis-aligned bounds of the positions, `(min, max)`.
    pub fn bounding_box(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut lo = self.positions[0];
        let mut hi = self.positions[0];
        for x in &self.positions[1..] {
            lo = lo.inf(x);
            hi = hi.sup(x);
        }
        (lo, hi)
    }
}

/// Central second differences with nearest-interior endpoint copies.
pub fn numeric_accelerations(positions: &[Vector3<f64>], dt: f64) -> Result<Vec<Vector3<f64>>> {
    if positions.len() < 3 {
        return Err(Error::validation(format!(
            "second differences need at least 3 samples, got {}",
            positions.len()
        )));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    let inv_dt2 = 1.0 / (dt * dt);
    let n = positions.len();
    let mut acc = Vec::with_capacity(n);
    acc.push(Vector3::zeros());
    for w in positions.windows(3) {
        acc.push((w[2] - 2.0 * w[1] + w[0]) * inv_dt2);
    }
    acc.push(acc[n - 2]);
    acc[0] = acc[1];
    Ok(acc)
}

/// A candidate or ground-truth influence point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluencePoint {
    dim: usize,
    coords: Vector3<f64>,
}

impl InfluencePoint {
    pub fn new(dim: usize, coords: Vector3<f64>) -> Result<Self> {
        check_dim(dim)?;
        check_planar(dim, &coords, "influence point")?;
        Ok(Self { dim, coords })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        let dim = values.len();
        Self::new(dim, vector_from_slice(dim, values)?)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &Vector3<f64> {
        &self.coords
    }

    /// The active components only.
    pub fn to_vec(&self) -> Vec<f64> {
        self.coords.as_slice()[..self.dim].to_vec()
    }
}

/// Euclidean distance between an estimate and the ground truth.
pub fn mede(predicted: &InfluencePoint, truth: &InfluencePoint) -> Result<f64> {
    if predicted.dim != truth.dim {
        return Err(Error::DimensionMismatch {
            expected: truth.dim,
            found: predicted.dim,
        });
    }
    Ok((predicted.coords - truth.coords).norm())
}
