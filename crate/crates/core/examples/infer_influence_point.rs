//! Recover the influence point of a simulated episode with every method.

use taskframe::inference::{Method, OptimizerConfig};
use taskframe::rng::RngSpec;
use taskframe::simulator::{accelerations_for_inference, simulate, AccelMode, SimConfig};
use taskframe::trajectory::mede;

fn main() -> taskframe::Result<()> {
    let root = RngSpec::from_seed(3);
    let ep = simulate(&SimConfig::with_noise(0.3), root.derive(0))?;
    // Accelerations recovered from positions, as a camera would see them.
    let traj = accelerations_for_inference(&ep, AccelMode::Differentiated)?;
    let cfg = OptimizerConfig::default();

    println!("truth {:?}", ep.truth.to_vec());
    for method in Method::ALL {
        match method.infer(&traj, &cfg, root.derive(method.stream_tag())) {
            Ok(r) => println!(
                "{:<16} error {:.4} m  score {:>9.4}  iterations {:>3}",
                method.name(),
                mede(&r.point, &ep.truth)?,
                r.score,
                r.iterations
            ),
            Err(e) => println!("{:<16} failed: {e}", method.name()),
        }
    }
    Ok(())
}
