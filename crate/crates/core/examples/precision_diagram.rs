//! Error against machine-independent work for the second-order methods,
//! with and without preconditioning. Writes the records as CSV.
//!
//!     cargo run --release --example precision_diagram [-- out.csv]

use imexp::integrators::IntegratorKind;
use imexp::problems::ProblemSpec;
use imexp::study::{emit_csv, run_precision_study, ReferencePolicy, StudyConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut cfg = StudyConfig::new(ProblemSpec::Parabolic { n: 100 });
    // GMRES(10) stalls without preconditioning at the larger steps
    cfg.gmres.restart = 20;
    let hs = [0.1, 0.05, 0.025, 0.0125];
    let records = run_precision_study(
        &cfg,
        &IntegratorKind::SECOND_ORDER,
        &hs,
        &[true, false],
        &ReferencePolicy::exact(),
    )?;

    println!(
        "{:<9} {:>7} {:>8} {:>11} {:>8} {:>8}",
        "method", "h", "precond", "error", "work", "gmres"
    );
    for r in &records {
        let err = r.error_max_norm.map_or("-".into(), |e| format!("{e:.3e}"));
        println!(
            "{:<9} {:>7} {:>8} {:>11} {:>8} {:>8}",
            r.method.name(),
            r.h,
            r.preconditioned,
            err,
            r.total_work(),
            r.gmres_iters
        );
    }
    if let Some(path) = std::env::args().nth(1) {
        emit_csv(&records, path.as_ref())?;
        println!("wrote {path}");
    }
    Ok(())
}
