//! A reduced version of the MEDE table: all methods, five noise levels.
//!
//! ```text
//! cargo run --release --example compare_methods -- 50
//! ```

use taskframe::bench::{run_mede_benchmark, BenchSettings, STANDARD_NOISE_LEVELS};
use taskframe::inference::Method;

fn main() -> taskframe::Result<()> {
    let seeds = std::env::args().nth(1).map_or(Ok(10), |s| s.parse()).expect("seed count");
    let settings = BenchSettings {
        seeds,
        ..BenchSettings::default()
    };
    let report = run_mede_benchmark(&settings, &Method::ALL, &STANDARD_NOISE_LEVELS)?;

    print!("{:<16}", "method");
    for nu in STANDARD_NOISE_LEVELS {
        print!("  ν={:<13}", nu);
    }
    println!();
    for method in Method::ALL {
        print!("{:<16}", method.name());
        for nu in STANDARD_NOISE_LEVELS {
            let c = report.cell(method.name(), nu, "").unwrap();
            match (c.mean, c.std) {
                (Some(m), Some(s)) => print!("  {m:.4}±{s:<8.4}"),
                _ => print!("  {:<15}", "n/a"),
            }
        }
        println!();
    }
    Ok(())
}
