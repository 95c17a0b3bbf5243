//! Order of accuracy of all five integrators on the semilinear parabolic
//! problem with a nonlocal source, measured against its exact solution.
//!
//!     cargo run --release --example parabolic_convergence [-- N]

use imexp::integrators::IntegratorKind;
use imexp::problems::ProblemSpec;
use imexp::study::{run_convergence_study, ReferencePolicy, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(100);
    let cfg = StudyConfig::new(ProblemSpec::Parabolic { n });
    let study = run_convergence_study(&cfg, &IntegratorKind::ALL, 0.1, 4, &ReferencePolicy::exact())?;

    println!("{:<9} {:>9} {:>12} {:>8}", "method", "h", "error", "work");
    for r in &study.records {
        let err = r.error_max_norm.map_or("-".into(), |e| format!("{e:.3e}"));
        println!("{:<9} {:>9} {:>12} {:>8}", r.method.name(), r.h, err, r.total_work());
    }
    for s in &study.slopes {
        println!(
            "{:<9} observed order {:.2}",
            s.method.name(),
            s.slope.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
