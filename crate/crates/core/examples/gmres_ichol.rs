//! Shifted Laplacian solves with restarted GMRES, with and without IC(0).
//!
//!     cargo run --release --example gmres_ichol

use imexp::krylov::{gmres_solve, ichol_zero_fill, GmresConfig, PrecondSide};
use imexp::sparse::{build_laplacian_2d, norm2, shift_identity, BoundaryCondition, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g = GridSpec::square_2d(64, 0.0, 1.0, BoundaryCondition::NeumannHomogeneous);
    let l = build_laplacian_2d(&g)?;
    let b = g.sample(|x, y| (3.0 * x).sin() * (2.0 * y).cos() + 1.0);
    let x0 = vec![0.0; b.len()];

    for h in [1e-4, 1e-3, 1e-2] {
        let a = shift_identity(&l, h)?;
        let ic = ichol_zero_fill(&a)?;
        let cfg = GmresConfig {
            restart: 20,
            ..GmresConfig::default()
        };
        print!("h = {h:<6}");
        for (name, pc, side) in [
            ("none", None, PrecondSide::Left),
            ("left", Some(&ic), PrecondSide::Left),
            ("split", Some(&ic), PrecondSide::Split),
        ] {
            let cfg = GmresConfig { side, ..cfg.clone() };
            match gmres_solve(&a, &b, &x0, &cfg, pc) {
                Ok(out) => print!("  {name}: {:>3} its ({:.1e})", out.iterations, out.residual),
                Err(e) => print!("  {name}: {e}"),
            }
        }
        println!("  |b| = {:.3}", norm2(&b));
    }
    Ok(())
}
