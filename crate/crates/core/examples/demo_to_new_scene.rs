//! The whole chain: watch a demonstration, find what it was reaching for,
//! anchor a frame there, and reproduce the motion around a new object.

use nalgebra::{UnitQuaternion, Vector3};
use taskframe::dmp::{fit_skill, rollout_skill, DmpParams, PoseTrajectory};
use taskframe::framekit::{build_frame, Frame6};
use taskframe::inference::{Method, OptimizerConfig};
use taskframe::rng::RngSpec;
use taskframe::simulator::{accelerations_for_inference, simulate, AccelMode, SimConfig};
use taskframe::trajectory::mede;

fn main() -> taskframe::Result<()> {
    // The demonstrator is pulled toward a hidden point on the table.
    let ep = simulate(&SimConfig::with_noise(0.1), RngSpec::from_seed(12))?;
    let observed = accelerations_for_inference(&ep, AccelMode::Differentiated)?;
    let found = Method::Dcs.infer(&observed, &OptimizerConfig::default(), RngSpec::from_seed(12).derive(1))?;
    println!("influence point error {:.3} m", mede(&found.point, &ep.truth)?);

    // Frame at the inferred point: table normal up, handle off to one side.
    let p = *found.point.coords();
    let frame = build_frame(&p, &Vector3::z(), &(p + Vector3::new(0.0, 1.0, 0.0)))?;

    let wrist = UnitQuaternion::identity();
    let demo = PoseTrajectory::new(
        observed.dt(),
        observed.positions().to_vec(),
        vec![wrist; observed.len()],
        Frame6::identity(),
    )?;
    let skill = fit_skill(&demo, &frame, &DmpParams::default())?;

    // Same task, new object somewhere else and turned by 90 degrees.
    let turn = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
    let moved = frame.transformed(&turn.to_rotation_matrix().into_inner(), &Vector3::new(2.0, -1.0, 0.0));
    let replay = rollout_skill(&skill, &moved, None, Some(2 * observed.len()))?;
    let end = replay.positions().last().unwrap();
    let demo_end = demo.positions().last().unwrap();
    println!(
        "demo ends {:.3} m from its anchor, replay ends {:.3} m from the new anchor",
        (demo_end - frame.origin).norm(),
        (end - moved.origin).norm()
    );
    Ok(())
}
