//! Fit a pose demonstration in one task frame and replay it in another.
//!
//! The second frame is rotated and moved, and the robot starts twice as far
//! from the influence point, so the rollout is stretched to match.

use nalgebra::{UnitQuaternion, Vector3};
use taskframe::dmp::{fit_skill, rollout_skill, DmpParams, PoseTrajectory};
use taskframe::framekit::{build_frame, Frame6};

fn min_jerk(u: f64) -> f64 {
    10.0 * u.powi(3) - 15.0 * u.powi(4) + 6.0 * u.powi(5)
}

fn main() -> taskframe::Result<()> {
    let n = 150;
    let dt = 0.02;
    // Approach the point (0.4, 0.2, 0) from above while turning the wrist.
    let start = Vector3::new(0.6, 0.4, 0.3);
    let target = Vector3::new(0.42, 0.22, 0.02);
    let positions = (0..n).map(|t| start + (target - start) * min_jerk(t as f64 / (n - 1) as f64)).collect();
    let orientations = (0..n)
        .map(|t| UnitQuaternion::from_euler_angles(std::f64::consts::PI, 0.0, 0.6 * min_jerk(t as f64 / (n - 1) as f64)))
        .collect();
    let demo = PoseTrajectory::new(dt, positions, orientations, Frame6::identity())?;

    let demo_frame = build_frame(&Vector3::new(0.4, 0.2, 0.0), &Vector3::z(), &Vector3::new(0.6, 0.2, 0.0))?;
    let skill = fit_skill(&demo, &demo_frame, &DmpParams::default())?;

    let new_frame = build_frame(
        &Vector3::new(-0.3, 0.5, 0.1),
        &Vector3::new(0.0, -0.2, 1.0).normalize(),
        &Vector3::new(-0.3, 0.9, 0.1),
    )?;
    let local_start = Vector3::from(skill.x0_demo) * 2.0;
    let new_start = new_frame.to_world_point(&local_start);
    let q_start = new_frame.quaternion() * UnitQuaternion::from_euler_angles(std::f64::consts::PI, 0.0, 0.0);
    let rollout = rollout_skill(&skill, &new_frame, Some((new_start, q_start)), Some(2 * n))?;

    let end = rollout.positions().last().unwrap();
    println!("demo ends {:.3} m from its influence point", (demo.positions()[n - 1] - demo_frame.origin).norm());
    println!("rollout ends {:.3} m from the new one", (end - new_frame.origin).norm());
    println!(
        "final wrist turn {:.1} deg (demo {:.1})",
        rollout.orientations()[0].angle_to(rollout.orientations().last().unwrap()).to_degrees(),
        demo.orientations()[0].angle_to(&demo.orientations()[n - 1]).to_degrees()
    );
    Ok(())
}
