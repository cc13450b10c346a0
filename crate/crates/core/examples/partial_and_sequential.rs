//! How much of a trajectory is needed, and what happens when the target moves.

use taskframe::bench::observed_prefix;
use taskframe::inference::{infer_partial, infer_sequential, OptimizerConfig};
use taskframe::rng::RngSpec;
use taskframe::scoring::ScoreFunction;
use taskframe::simulator::{accelerations_for_inference, simulate, AccelMode, SecondPoint, SimConfig};
use taskframe::trajectory::mede;

fn main() -> taskframe::Result<()> {
    let score = ScoreFunction::default();
    let cfg = OptimizerConfig::default();
    let rng = RngSpec::from_seed(5);

    let ep = simulate(&SimConfig::with_noise(0.1), rng.derive(0))?;
    println!("prefix  error (m)");
    for len in [5, 10, 20, 30, 50, 100] {
        let traj = observed_prefix(&ep, AccelMode::Differentiated, len)?;
        let r = infer_partial(&score, &traj, len, &cfg, rng.derive(1))?;
        println!("{len:>6}  {:.4}", mede(&r.point, &ep.truth)?);
    }

    let two = SimConfig::with_noise(0.1).sequential(SecondPoint::Random, 30);
    let ep = simulate(&two, rng.derive(2))?;
    let traj = accelerations_for_inference(&ep, AccelMode::Differentiated)?;
    let r = infer_sequential(&score, &traj, 30, &cfg, rng.derive(3))?;
    println!("\nswitch at step 30");
    println!("first target   error {:.4}", mede(r.p1(), &ep.truth)?);
    println!("second target  error {:.4}", mede(r.p2(), ep.truth2.as_ref().unwrap())?);
    Ok(())
}
