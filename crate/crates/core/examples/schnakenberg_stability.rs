//! Largest stable constant step of each second-order method on the stiff
//! Schnakenberg system.
//!
//!     cargo run --release --example schnakenberg_stability [-- GAMMA GRID]

use imexp::integrators::IntegratorKind;
use imexp::problems::ProblemSpec;
use imexp::study::{run_stability_scan, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let gamma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1e4);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(32);
    let cfg = StudyConfig::new(ProblemSpec::Schnakenberg { gamma, n });
    let grid = [1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5];

    for method in [IntegratorKind::HImExp2J, IntegratorKind::Sbdf2] {
        let scan = run_stability_scan(&cfg, method, &grid)?;
        for r in &scan.records {
            println!("{:<9} h = {:<7} {:?}", method.name(), r.h, r.outcome);
        }
        match scan.largest_stable {
            Some(h) => println!("{:<9} largest stable h = {h}\n", method.name()),
            None => println!("{:<9} nothing stable on this grid\n", method.name()),
        }
    }
    Ok(())
}
