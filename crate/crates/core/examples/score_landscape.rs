//! Score landscapes of a 2D episode under the three objectives.
//!
//! Prints the grid maximum of each score; pass `csv` to dump the
//! directional consistency grid for plotting instead.

use taskframe::bench::score_landscape;
use taskframe::rng::RngSpec;
use taskframe::scoring::ScoreFunction;
use taskframe::simulator::{accelerations_for_inference, simulate, AccelMode, SimConfig};

fn main() -> taskframe::Result<()> {
    let cfg = SimConfig {
        dim: 2,
        ..SimConfig::with_noise(0.1)
    };
    let ep = simulate(&cfg, RngSpec::from_seed(21))?;
    let traj = accelerations_for_inference(&ep, AccelMode::Differentiated)?;

    let scores = [
        ScoreFunction::directional_consistency(),
        ScoreFunction::cosine_similarity(),
        ScoreFunction::quadratic_residual(),
    ];
    if std::env::args().nth(1).as_deref() == Some("csv") {
        let grid = score_landscape(&traj, &scores[0], &[-5.0, -5.0], &[5.0, 5.0], &[101, 101])?;
        print!("{}", grid.to_csv());
        return Ok(());
    }

    let t = ep.truth.coords();
    println!("truth ({:.2}, {:.2})", t.x, t.y);
    for score in scores {
        let grid = score_landscape(&traj, &score, &[-5.0, -5.0], &[5.0, 5.0], &[101, 101])?;
        let (p, v) = grid.argmax();
        let err = ((p[0] - t.x).powi(2) + (p[1] - t.y).powi(2)).sqrt();
        println!("{:<24} max {v:>10.4} at ({:.1}, {:.1})  off by {err:.2} m", score.kind.to_string(), p[0], p[1]);
    }
    Ok(())
}
