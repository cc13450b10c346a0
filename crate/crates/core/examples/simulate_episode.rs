//! Simulate one noisy 3D episode and print it as episode JSON.
//!
//! ```text
//! cargo run --example simulate_episode -- 0.3 > episode.json
//! ```

use taskframe::rng::RngSpec;
use taskframe::simulator::{episode_to_json, simulate, SimConfig};

fn main() -> taskframe::Result<()> {
    let noise: f64 = std::env::args().nth(1).map_or(Ok(0.1), |s| s.parse()).expect("noise level");
    let ep = simulate(&SimConfig::with_noise(noise), RngSpec::from_seed(7))?;

    let end = ep.trajectory.positions().last().unwrap();
    eprintln!("truth      {:?}", ep.truth.to_vec());
    eprintln!("end point  [{:.3}, {:.3}, {:.3}]", end.x, end.y, end.z);
    eprintln!("distance   {:.3} m after {} steps", (ep.truth.coords() - end).norm(), ep.trajectory.len());
    println!("{}", episode_to_json(&ep));
    Ok(())
}
