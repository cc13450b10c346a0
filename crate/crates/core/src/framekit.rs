//! Task-relevant frames from a refined point, a surface normal and an
//! interaction point.
//!
//! The z-axis is the surface normal at the refined point. The direction from
//! the refined point to the interaction point spans the yz-plane together with
//! z, and x completes a right-handed basis.

use std::path::Path;

use nalgebra::{Matrix3, Rotation3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_K_NEIGHBORS: usize = 30;
const DEGENERATE_EIGEN_GAP: f64 = 1e-9;
const PARALLEL_TOL: f64 = 1e-6;

/// Origin plus a rotation whose columns are the frame axes in world coordinates.
///
/// JSON: `{"origin":[x,y,z],"rotation":[[..],[..],[..]]}` with the rotation row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "FrameFile", try_from = "FrameFile")]
pub struct Frame6 {
    pub origin: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl Frame6 {
    pub fn identity() -> Self {
        Self {
            origin: Vector3::zeros(),
            rotation: Matrix3::identity(),
        }
    }

    pub fn new(origin: Vector3<f64>, rotation: Matrix3<f64>) -> Result<Self> {
        let frame = Self { origin, rotation };
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).norm();
        let det = rotation.determinant();
        if !(ortho < 1e-9 && (det - 1.0).abs() < 1e-9) {
            return Err(Error::validation(format!(
                "rotation is not proper orthonormal (|RtR - I| = {ortho:e}, det = {det})"
            )));
        }
        Ok(frame)
    }

    pub fn x_axis(&self) -> Vector3<f64> {
        self.rotation.column(0).into_owned()
    }

    pub fn y_axis(&self) -> Vector3<f64> {
        self.rotation.column(1).into_owned()
    }

    pub fn z_axis(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    pub fn quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.rotation))
    }

    /// World point to frame coordinates.
    pub fn to_local_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (x - self.origin)
    }

    /// Frame coordinates to world point.
    pub fn to_world_point(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * x + self.origin
    }

    /// The frame after applying a world-space rigid motion `(rot, shift)`.
    pub fn transformed(&self, rot: &Matrix3<f64>, shift: &Vector3<f64>) -> Self {
        Self {
            origin: rot * self.origin + shift,
            rotation: rot * self.rotation,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct FrameFile {
    origin: [f64; 3],
    rotation: [[f64; 3]; 3],
}

impl From<Frame6> for FrameFile {
    fn from(frame: Frame6) -> Self {
        let r = &frame.rotation;
        Self {
            origin: frame.origin.into(),
            rotation: std::array::from_fn(|i| std::array::from_fn(|j| r[(i, j)])),
        }
    }
}

impl TryFrom<FrameFile> for Frame6 {
    type Error = Error;

    fn try_from(f: FrameFile) -> Result<Self> {
        let rows = f.rotation;
        Frame6::new(Vector3::from(f.origin), Matrix3::from_fn(|i, j| rows[i][j]))
    }
}

pub fn frame_to_json(frame: &Frame6) -> String {
    serde_json::to_string(frame).expect("finite values serialize")
}

pub fn frame_from_json(text: &str) -> Result<Frame6> {
    Ok(serde_json::from_str(text)?)
}

pub fn load_frame(path: &Path) -> Result<Frame6> {
    frame_from_json(&crate::io::read_text(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Vector3<f64>>,
    viewpoint: Option<Vector3<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vector3<f64>>, viewpoint: Option<Vector3<f64>>) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::validation(format!(
                "point cloud needs at least 3 points, got {}",
                points.len()
            )));
        }
        let finite = |v: &Vector3<f64>| v.iter().all(|c| c.is_finite());
        if !points.iter().all(finite) || !viewpoint.as_ref().map_or(true, finite) {
            return Err(Error::validation("point cloud has non-finite coordinates"));
        }
        Ok(Self { points, viewpoint })
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn viewpoint(&self) -> Option<&Vector3<f64>> {
        self.viewpoint.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CloudFile {
    points: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    viewpoint: Option<[f64; 3]>,
}

pub fn cloud_from_json(text: &str) -> Result<PointCloud> {
    let f: CloudFile = serde_json::from_str(text)?;
    PointCloud::new(
        f.points.into_iter().map(Vector3::from).collect(),
        f.viewpoint.map(Vector3::from),
    )
}

pub fn cloud_to_json(cloud: &PointCloud) -> String {
    let f = CloudFile {
        points: cloud.points.iter().map(|p| (*p).into()).collect(),
        viewpoint: cloud.viewpoint.map(Into::into),
    };
    serde_json::to_string(&f).expect("finite values serialize")
}

pub fn load_cloud(path: &Path) -> Result<PointCloud> {
    cloud_from_json(&crate::io::read_text(path)?)
}

/// PCA normal of the `k` points nearest to `at`.
///
/// The sign faces the cloud's viewpoint when there is one, otherwise it is
/// chosen so the normal has a non-negative z component.
pub fn estimate_normal(cloud: &PointCloud, at: &Vector3<f64>, k_neighbors: usize) -> Result<Vector3<f64>> {
    if k_neighbors < 3 || k_neighbors > cloud.len() {
        return Err(Error::validation(format!(
            "k_neighbors must be in 3..={}, got {k_neighbors}",
            cloud.len()
        )));
    }
    let mut order: Vec<(f64, usize)> = cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| ((p - at).norm_squared(), i))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let neighbors: Vec<Vector3<f64>> = order[..k_neighbors].iter().map(|&(_, i)| cloud.points[i]).collect();

    let mean = neighbors.iter().sum::<Vector3<f64>>() / k_neighbors as f64;
    let cov = neighbors
        .iter()
        .map(|p| {
            let d = p - mean;
            d * d.transpose()
        })
        .sum::<Matrix3<f64>>()
        / k_neighbors as f64;

    let eig = cov.symmetric_eigen();
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (l0, l1, l2) = (
        eig.eigenvalues[idx[0]],
        eig.eigenvalues[idx[1]],
        eig.eigenvalues[idx[2]],
    );
    if !(l2 > 0.0) || (l1 - l0) <= DEGENERATE_EIGEN_GAP * l2 {
        return Err(Error::DegenerateNeighborhood(format!(
            "covariance eigenvalues {l0:e}, {l1:e}, {l2:e} do not isolate a normal"
        )));
    }
    let mut n: Vector3<f64> = eig.eigenvectors.column(idx[0]).into_owned();
    n /= n.norm();
    let flip = match cloud.viewpoint {
        Some(vp) => n.dot(&(vp - at)) < 0.0,
        None => n.z < 0.0,
    };
    if flip {
        n = -n;
    }
    Ok(n)
}

/// Builds the task frame. `normal` becomes z exactly.
pub fn build_frame(
    refined_point: &Vector3<f64>,
    normal: &Vector3<f64>,
    interaction_point: &Vector3<f64>,
) -> Result<Frame6> {
    if (normal.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::validation(format!(
            "normal must be unit length, got norm {}",
            normal.norm()
        )));
    }
    let offset = interaction_point - refined_point;
    if offset.norm() == 0.0 {
        return Err(Error::validation("interaction point coincides with the refined point"));
    }
    let z = *normal;
    let v = offset / offset.norm();
    let cross = v.cross(&z);
    if cross.norm() < PARALLEL_TOL {
        return Err(Error::DegenerateDirection(
            "interaction direction is parallel to the surface normal".into(),
        ));
    }
    let x = cross / cross.norm();
    let y = z.cross(&x);
    Ok(Frame6 {
        origin: *refined_point,
        rotation: Matrix3::from_columns(&[x, y, z]),
    })
}
