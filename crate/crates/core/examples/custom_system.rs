//! Integrating a user-defined split system: 1D Fisher-KPP,
//! u' = D u_xx + r u (1 - u), with homogeneous Dirichlet ends.
//!
//!     cargo run --release --example custom_system

use imexp::integrators::{integrate, IntegratorConfig, IntegratorKind};
use imexp::problems::SplitSystem;
use imexp::sparse::{build_laplacian_1d_dirichlet, max_norm_diff, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (d, r) = (1e-3, 50.0);
    let grid = GridSpec::dirichlet_1d(199, 0.0, 1.0);
    let l = build_laplacian_1d_dirichlet(&grid)?.scaled(d);
    let u0 = grid.sample(|x, _| (-200.0 * (x - 0.5) * (x - 0.5)).exp());

    let sys = SplitSystem::new(
        "fisher-kpp",
        l,
        move |_t, u, out| {
            for (o, &v) in out.iter_mut().zip(u) {
                *o = r * v * (1.0 - v);
            }
        },
        move |u, v, out| {
            for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
                *o = r * (1.0 - 2.0 * ui) * vi;
            }
        },
        u0,
    )?;

    let t_end = 0.2;
    let fine = integrate(
        &sys,
        &IntegratorConfig::new(IntegratorKind::HImExp2J, t_end / 1024.0, 0.0, t_end),
        sys.initial_state(),
    )?
    .0;
    for kind in IntegratorKind::SECOND_ORDER {
        for steps in [16, 32, 64] {
            let cfg = IntegratorConfig::new(kind, t_end / steps as f64, 0.0, t_end);
            match integrate(&sys, &cfg, sys.initial_state()) {
                Ok((u, stats)) => println!(
                    "{:<9} {steps:>3} steps: diff to fine run {:.2e}, work {}",
                    kind.name(),
                    max_norm_diff(&u, &fine)?,
                    stats.total_work()
                ),
                Err(e) => println!("{:<9} {steps:>3} steps: {e}", kind.name()),
            }
        }
    }
    Ok(())
}
