//! Estimate a surface normal from a noisy tabletop patch and build the task frame.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;
use taskframe::framekit::{build_frame, estimate_normal, frame_to_json, PointCloud, DEFAULT_K_NEIGHBORS};
use taskframe::rng::RngSpec;

fn main() -> taskframe::Result<()> {
    // A slightly tilted 40 cm patch with 2 mm depth noise, seen from above.
    let tilt = Vector3::new(0.05, -0.1, 1.0).normalize();
    let u = tilt.cross(&Vector3::x()).normalize();
    let v = tilt.cross(&u);
    let mut rng = RngSpec::from_seed(1).rng();
    let points = (0..500)
        .map(|_| {
            let a: f64 = rng.random_range(-0.2..0.2);
            let b: f64 = rng.random_range(-0.2..0.2);
            let e: f64 = rng.sample(StandardNormal);
            a * u + b * v + 0.002 * e * tilt
        })
        .collect();
    let cloud = PointCloud::new(points, Some(Vector3::new(0.0, 0.0, 1.5)))?;

    let refined = Vector3::zeros();
    let normal = estimate_normal(&cloud, &refined, DEFAULT_K_NEIGHBORS)?;
    println!(
        "normal error {:.3} deg",
        normal.dot(&tilt).clamp(-1.0, 1.0).acos().to_degrees()
    );

    // The handle we will push sits 15 cm to the side.
    let interaction = Vector3::new(0.15, 0.05, 0.0);
    let frame = build_frame(&refined, &normal, &interaction)?;
    println!("x {:.3?}", frame.x_axis().as_slice());
    println!("y {:.3?}", frame.y_axis().as_slice());
    println!("z {:.3?}", frame.z_axis().as_slice());
    println!("{}", frame_to_json(&frame));
    Ok(())
}
