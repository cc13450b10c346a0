//! Dynamic movement primitives in a task frame.
//!
//! A demonstration is moved into the task frame, reduced to motion relative to
//! its first pose, and fitted with one DMP for position and one for
//! orientation. Orientation is handled on rotation vectors `r = 2 log(Δq)`.
//!
//! Transformation system, per axis:
//!
//! ```text
//! τ ż = α_z (β_z (g − y) − z) + f(s)      τ ẏ = z      τ ṡ = −α_s s
//! f(s) = (Σ ψ_i(s) w_i / Σ ψ_i(s)) · s · g
//! ```

use std::path::Path;

use nalgebra::{Quaternion, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::framekit::Frame6;

const DEGENERATE_GOAL: f64 = 1e-9;
const UNIT_TOL: f64 = 1e-9;

/// A pose sequence expressed in `frame`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseTrajectory {
    dt: f64,
    positions: Vec<Vector3<f64>>,
    orientations: Vec<UnitQuaternion<f64>>,
    frame: Frame6,
}

impl PoseTrajectory {
    pub fn new(
        dt: f64,
        positions: Vec<Vector3<f64>>,
        orientations: Vec<UnitQuaternion<f64>>,
        frame: Frame6,
    ) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::validation(format!("dt must be positive, got {dt}")));
        }
        if positions.len() != orientations.len() {
            return Err(Error::validation(format!(
                "{} positions but {} orientations",
                positions.len(),
                orientations.len()
            )));
        }
        if positions.len() < 2 {
            return Err(Error::validation("pose trajectory needs at least 2 samples"));
        }
        if positions.iter().any(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::NonFinite);
        }
        for (t, q) in orientations.iter().enumerate() {
            let n = q.as_ref().norm();
            if !((n - 1.0).abs() <= UNIT_TOL) {
                return Err(Error::validation(format!("orientation {t} has norm {n}")));
            }
        }
        Ok(Self { dt, positions, orientations, frame })
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

    pub fn orientations(&self) -> &[UnitQuaternion<f64>] {
        &self.orientations
    }

    pub fn frame(&self) -> &Frame6 {
        &self.frame
    }
}

#[derive(Serialize, Deserialize)]
struct PoseFile {
    dt: f64,
    positions: Vec<[f64; 3]>,
    /// `[w, x, y, z]`
    orientations: Vec<[f64; 4]>,
    #[serde(default = "Frame6::identity")]
    frame: Frame6,
}

fn quat_to_array(q: &UnitQuaternion<f64>) -> [f64; 4] {
    let q = q.as_ref();
    [q.w, q.i, q.j, q.k]
}

fn quat_from_array(q: [f64; 4]) -> UnitQuaternion<f64> {
    UnitQuaternion::new_unchecked(Quaternion::new(q[0], q[1], q[2], q[3]))
}

pub fn pose_to_json(pose: &PoseTrajectory) -> String {
    let file = PoseFile {
        dt: pose.dt,
        positions: pose.positions.iter().map(|p| (*p).into()).collect(),
        orientations: pose.orientations.iter().map(quat_to_array).collect(),
        frame: pose.frame,
    };
    serde_json::to_string(&file).expect("finite values serialize")
}

pub fn pose_from_json(text: &str) -> Result<PoseTrajectory> {
    let f: PoseFile = serde_json::from_str(text)?;
    PoseTrajectory::new(
        f.dt,
        f.positions.into_iter().map(Vector3::from).collect(),
        f.orientations.into_iter().map(quat_from_array).collect(),
        f.frame,
    )
}

pub fn load_pose(path: &Path) -> Result<PoseTrajectory> {
    pose_from_json(&crate::io::read_text(path)?)
}

/// Express a world-frame pose trajectory in `frame`.
pub fn to_local(pose_world: &PoseTrajectory, frame: &Frame6) -> PoseTrajectory {
    let rq_inv = frame.quaternion().inverse();
    PoseTrajectory {
        dt: pose_world.dt,
        positions: pose_world.positions.iter().map(|x| frame.to_local_point(x)).collect(),
        orientations: pose_world.orientations.iter().map(|q| rq_inv * q).collect(),
        frame: *frame,
    }
}

/// Map a trajectory expressed in `frame` back to world coordinates.
pub fn to_world(pose_local: &PoseTrajectory, frame: &Frame6) -> PoseTrajectory {
    let rq = frame.quaternion();
    PoseTrajectory {
        dt: pose_local.dt,
        positions: pose_local.positions.iter().map(|x| frame.to_world_point(x)).collect(),
        orientations: pose_local.orientations.iter().map(|q| rq * q).collect(),
        frame: Frame6::identity(),
    }
}

/// Displacements and rotations relative to the first pose.
pub fn relative_motion(local: &PoseTrajectory) -> (Vec<Vector3<f64>>, Vec<UnitQuaternion<f64>>) {
    let x0 = local.positions[0];
    let q0_inv = local.orientations[0].inverse();
    let dx = local.positions.iter().map(|x| x - x0).collect();
    let mut dq: Vec<_> = local.orientations.iter().map(|q| q * q0_inv).collect();
    dq[0] = UnitQuaternion::identity();
    (dx, dq)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmpParams {
    pub alpha_z: f64,
    pub alpha_s: f64,
    pub n_basis: usize,
}

impl Default for DmpParams {
    fn default() -> Self {
        Self {
            alpha_z: 25.0,
            alpha_s: 4.0,
            n_basis: 20,
        }
    }
}

impl DmpParams {
    fn validate(&self) -> Result<()> {
        if !(self.alpha_z.is_finite() && self.alpha_z > 0.0) {
            return Err(Error::validation("alpha_z must be positive"));
        }
        if !(self.alpha_s.is_finite() && self.alpha_s > 0.0) {
            return Err(Error::validation("alpha_s must be positive"));
        }
        if self.n_basis < 2 {
            return Err(Error::validation("n_basis must be at least 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DmpChannel {
    Position,
    Orientation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DmpModel {
    pub channel: DmpChannel,
    pub alpha_z: f64,
    pub beta_z: f64,
    pub alpha_s: f64,
    /// Demonstration duration in seconds.
    pub tau: f64,
    pub n_basis: usize,
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    /// One row of `n_basis` weights per output axis.
    pub weights: [Vec<f64>; 3],
    /// `Δx_T` for position, `r_T` for orientation.
    pub goal: [f64; 3],
    /// Axes whose goal is too small for amplitude scaling; their weights are zero.
    pub degenerate_axes: [bool; 3],
    /// Distance from the influence point to the demo start, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_distance: Option<f64>,
}

fn basis(params: &DmpParams) -> (Vec<f64>, Vec<f64>) {
    let n = params.n_basis;
    let centers: Vec<f64> = (0..n)
        .map(|i| (-params.alpha_s * i as f64 / (n - 1) as f64).exp())
        .collect();
    let mut widths: Vec<f64> = centers.windows(2).map(|w| 1.0 / (w[1] - w[0]).powi(2)).collect();
    widths.push(widths[n - 2]);
    (centers, widths)
}

impl DmpModel {
    pub fn validate(&self) -> Result<()> {
        let n = self.n_basis;
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(Error::validation("tau must be positive"));
        }
        if (self.beta_z - self.alpha_z / 4.0).abs() > 1e-12 * self.alpha_z.abs().max(1.0) {
            return Err(Error::validation("beta_z must equal alpha_z / 4"));
        }
        if self.centers.len() != n || self.widths.len() != n || self.weights.iter().any(|w| w.len() != n) {
            return Err(Error::validation(format!("model arrays must have n_basis = {n} entries")));
        }
        if !self.centers.windows(2).all(|w| w[1] < w[0]) || self.centers.iter().any(|&c| !(c > 0.0 && c <= 1.0)) {
            return Err(Error::validation("basis centers must be strictly decreasing in (0, 1]"));
        }
        Ok(())
    }

    pub fn goal(&self) -> Vector3<f64> {
        Vector3::from(self.goal)
    }

    /// Phase at time `t`.
    pub fn phase(&self, t: f64) -> f64 {
        (-self.alpha_s * t / self.tau).exp()
    }

    /// Forcing term at phase `s` for amplitude `goal`.
    pub fn forcing(&self, s: f64, goal: &Vector3<f64>) -> Vector3<f64> {
        let psi: Vec<f64> = self
            .centers
            .iter()
            .zip(&self.widths)
            .map(|(c, h)| (-h * (s - c).powi(2)).exp())
            .collect();
        let total: f64 = psi.iter().sum();
        if !(total > 1e-300) {
            return Vector3::zeros();
        }
        Vector3::from_fn(|j, _| {
            let avg: f64 = psi.iter().zip(&self.weights[j]).map(|(p, w)| p * w).sum::<f64>() / total;
            avg * s * goal[j]
        })
    }

    /// Integrates the transformation system toward `goal` from rest at zero.
    pub fn integrate(&self, goal: &Vector3<f64>, steps: usize, dt: f64) -> Vec<Vector3<f64>> {
        let mut y = Vector3::zeros();
        let mut z = Vector3::<f64>::zeros();
        let mut out = Vec::with_capacity(steps);
        if steps == 0 {
            return out;
        }
        out.push(y);
        for t in 0..steps - 1 {
            let s = self.phase(t as f64 * dt);
            let zdot = (self.alpha_z * (self.beta_z * (goal - y) - z) + self.forcing(s, goal)) / self.tau;
            z += zdot * dt;
            y += z / self.tau * dt;
            out.push(y);
        }
        out
    }
}

fn central_velocity(x: &[Vector3<f64>], dt: f64) -> Vec<Vector3<f64>> {
    let n = x.len();
    (0..n)
        .map(|t| match t {
            0 => (x[1] - x[0]) / dt,
            t if t == n - 1 => (x[n - 1] - x[n - 2]) / dt,
            t => (x[t + 1] - x[t - 1]) / (2.0 * dt),
        })
        .collect()
}

fn fit_channel(channel: DmpChannel, y: &[Vector3<f64>], dt: f64, params: &DmpParams) -> Result<DmpModel> {
    params.validate()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    let n = y.len();
    if n < 3 {
        return Err(Error::validation(format!("DMP fit needs at least 3 samples, got {n}")));
    }
    if y.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
        return Err(Error::NonFinite);
    }
    let tau = (n - 1) as f64 * dt;
    let goal = y[n - 1];
    let vel = central_velocity(y, dt);
    let acc = crate::trajectory::numeric_accelerations(y, dt)?;
    let (centers, widths) = basis(params);
    let alpha_z = params.alpha_z;
    let beta_z = alpha_z / 4.0;

    let mut model = DmpModel {
        channel,
        alpha_z,
        beta_z,
        alpha_s: params.alpha_s,
        tau,
        n_basis: params.n_basis,
        centers,
        widths,
        weights: std::array::from_fn(|_| vec![0.0; params.n_basis]),
        goal: goal.into(),
        degenerate_axes: [false; 3],
        anchor_distance: None,
    };
    let phases: Vec<f64> = (0..n).map(|t| model.phase(t as f64 * dt)).collect();
    for j in 0..3 {
        if goal[j].abs() < DEGENERATE_GOAL {
            model.degenerate_axes[j] = true;
            continue;
        }
        for i in 0..params.n_basis {
            let (mut num, mut den) = (0.0, 0.0);
            for t in 0..n {
                let s = phases[t];
                let psi = (-model.widths[i] * (s - model.centers[i]).powi(2)).exp();
                let target =
                    tau * tau * acc[t][j] - alpha_z * (beta_z * (goal[j] - y[t][j]) - tau * vel[t][j]);
                let xi = s * goal[j];
                num += psi * xi * target;
                den += psi * xi * xi;
            }
            model.weights[j][i] = if den > 0.0 { num / den } else { 0.0 };
        }
    }
    Ok(model)
}

/// Fits the position channel on displacements `Δx_t` from the start pose.
pub fn fit_position_dmp(dx: &[Vector3<f64>], dt: f64, params: &DmpParams) -> Result<DmpModel> {
    fit_channel(DmpChannel::Position, dx, dt, params)
}

/// Goal after rescaling by the ratio of new-to-demo distances from the influence point.
pub fn deploy_goal(
    model: &DmpModel,
    x0_new: &Vector3<f64>,
    p_star: &Vector3<f64>,
    x0_demo: &Vector3<f64>,
) -> Result<Vector3<f64>> {
    let demo = (p_star - x0_demo).norm();
    if !(demo > 1e-9) {
        return Err(Error::validation(format!(
            "demo start is {demo:e} from the influence point; goal scaling is undefined"
        )));
    }
    Ok(model.goal() * ((p_star - x0_new).norm() / demo))
}

/// Position rollout, returned as absolute positions `x0_new + y_t`.
pub fn rollout_position(
    model: &DmpModel,
    x0_new: &Vector3<f64>,
    p_star: &Vector3<f64>,
    x0_demo: &Vector3<f64>,
    steps: usize,
    dt: f64,
) -> Result<Vec<Vector3<f64>>> {
    if model.channel != DmpChannel::Position {
        return Err(Error::validation("model is not a position DMP"));
    }
    check_rollout(steps, dt)?;
    let g = deploy_goal(model, x0_new, p_star, x0_demo)?;
    Ok(model.integrate(&g, steps, dt).into_iter().map(|y| x0_new + y).collect())
}

fn check_rollout(steps: usize, dt: f64) -> Result<()> {
    if steps < 1 {
        return Err(Error::validation("steps must be at least 1"));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::validation(format!("dt must be positive, got {dt}")));
    }
    Ok(())
}

/// Rotation vectors `2 log(Δq_t)` with the branch chosen to follow the previous sample.
pub fn rotation_vectors(dq: &[UnitQuaternion<f64>]) -> Result<Vec<Vector3<f64>>> {
    let mut out: Vec<Vector3<f64>> = Vec::with_capacity(dq.len());
    for (t, q) in dq.iter().enumerate() {
        let mut r = q.scaled_axis();
        if let Some(prev) = out.last() {
            let angle = r.norm();
            if angle > 0.0 {
                let axis = r / angle;
                let two_pi = 2.0 * std::f64::consts::PI;
                r = [r, r - axis * two_pi, r + axis * two_pi]
                    .into_iter()
                    .min_by(|a, b| (a - prev).norm().total_cmp(&(b - prev).norm()))
                    .expect("non-empty");
            }
            let jump = (r - prev).norm();
            if jump > std::f64::consts::PI {
                return Err(Error::AngleWrap(format!(
                    "rotation jumps by {jump:.3} rad between samples {} and {t}",
                    t - 1
                )));
            }
        }
        out.push(r);
    }
    Ok(out)
}

/// Fits the orientation channel on rotations `Δq_t` relative to the start.
pub fn fit_quaternion_dmp(dq: &[UnitQuaternion<f64>], dt: f64, params: &DmpParams) -> Result<DmpModel> {
    let r = rotation_vectors(dq)?;
    fit_channel(DmpChannel::Orientation, &r, dt, params)
}

/// Orientation rollout `q_t = exp(r_t / 2) ⊗ q0_new`.
pub fn rollout_quaternion(
    model: &DmpModel,
    q0_new: &UnitQuaternion<f64>,
    steps: usize,
    dt: f64,
) -> Result<Vec<UnitQuaternion<f64>>> {
    if model.channel != DmpChannel::Orientation {
        return Err(Error::validation("model is not an orientation DMP"));
    }
    check_rollout(steps, dt)?;
    let n = q0_new.as_ref().norm();
    if !((n - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::validation(format!("start orientation has norm {n}")));
    }
    Ok(model
        .integrate(&model.goal(), steps, dt)
        .into_iter()
        .map(|r| UnitQuaternion::new_normalize((UnitQuaternion::from_scaled_axis(r) * q0_new).into_inner()))
        .collect())
}

/// Both channels of a demonstration fitted in a task frame whose origin is the
/// influence point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillModel {
    pub position: DmpModel,
    pub orientation: DmpModel,
    /// Demo start in the task frame.
    pub x0_demo: [f64; 3],
    /// `[w, x, y, z]`
    pub q0_demo: [f64; 4],
    pub dt: f64,
    pub steps: usize,
}

pub fn fit_skill(demo_world: &PoseTrajectory, frame: &Frame6, params: &DmpParams) -> Result<SkillModel> {
    let local = to_local(demo_world, frame);
    let (dx, dq) = relative_motion(&local);
    let mut position = fit_position_dmp(&dx, local.dt, params)?;
    let x0 = local.positions[0];
    position.anchor_distance = Some(x0.norm());
    let orientation = fit_quaternion_dmp(&dq, local.dt, params)?;
    Ok(SkillModel {
        position,
        orientation,
        x0_demo: x0.into(),
        q0_demo: quat_to_array(&local.orientations[0]),
        dt: local.dt,
        steps: local.len(),
    })
}

/// Rolls a skill out in `frame`. The start pose is given in world coordinates;
/// without one the demo's start relative to its frame is reused.
pub fn rollout_skill(
    skill: &SkillModel,
    frame: &Frame6,
    start_world: Option<(Vector3<f64>, UnitQuaternion<f64>)>,
    steps: Option<usize>,
) -> Result<PoseTrajectory> {
    let (x0_local, q0_local) = match start_world {
        Some((x, q)) => (frame.to_local_point(&x), frame.quaternion().inverse() * q),
        None => (Vector3::from(skill.x0_demo), quat_from_array(skill.q0_demo)),
    };
    let steps = steps.unwrap_or(skill.steps);
    let positions = rollout_position(
        &skill.position,
        &x0_local,
        &Vector3::zeros(),
        &Vector3::from(skill.x0_demo),
        steps,
        skill.dt,
    )?;
    let orientations = rollout_quaternion(&skill.orientation, &q0_local, steps, skill.dt)?;
    let local = PoseTrajectory::new(skill.dt, positions, orientations, *frame)?;
    Ok(to_world(&local, frame))
}

pub fn skill_to_json(skill: &SkillModel) -> String {
    serde_json::to_string(skill).expect("finite values serialize")
}

pub fn skill_from_json(text: &str) -> Result<SkillModel> {
    let skill: SkillModel = serde_json::from_str(text)?;
    skill.position.validate()?;
    skill.orientation.validate()?;
    if skill.position.channel != DmpChannel::Position || skill.orientation.channel != DmpChannel::Orientation {
        return Err(Error::validation("skill channels are swapped"));
    }
    Ok(skill)
}
