//! Infer where a demonstration was being pulled toward, build a task frame
//! there, and replay the demonstration around new objects.
//!
//! The pieces, roughly in pipeline order:
//!
//! - [`simulator`] generates point-mass episodes with a hidden influence point.
//! - [`scoring`] and [`inference`] recover that point from positions and
//!   accelerations, by finite-difference Adam on a score or by ray triangulation.
//! - [`framekit`] turns the point, a surface normal and an interaction point
//!   into a right-handed frame.
//! - [`dmp`] fits movement primitives in that frame and rolls them out in others.
//! - [`bench`] runs seeded Monte-Carlo comparisons and score landscapes.
//! - [`cli`] wraps all of it behind the `taskframe` binary.
//!
//! Runnable examples live in `examples/`:
//! `simulate_episode`, `infer_influence_point`, `compare_methods`,
//! `score_landscape`, `partial_and_sequential`, `build_task_frame`,
//! `dmp_transfer` and `demo_to_new_scene`.
//!
//! ```
//! use taskframe::inference::{Method, OptimizerConfig};
//! use taskframe::rng::RngSpec;
//! use taskframe::simulator::{accelerations_for_inference, simulate, AccelMode, SimConfig};
//! use taskframe::trajectory::mede;
//!
//! let ep = simulate(&SimConfig::with_noise(0.1), RngSpec::from_seed(1)).unwrap();
//! let traj = accelerations_for_inference(&ep, AccelMode::Differentiated).unwrap();
//! let found = Method::Dcs.infer(&traj, &OptimizerConfig::default(), RngSpec::from_seed(2)).unwrap();
//! assert!(mede(&found.point, &ep.truth).unwrap() < 0.5);
//! ```

pub mod bench;
pub mod cli;
pub mod dmp;
pub mod error;
pub mod framekit;
pub mod inference;
pub mod io;
pub mod rng;
pub mod scoring;
pub mod simulator;
pub mod trajectory;

pub use error::{Error, Result};
