//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Positional arguments select criteria by number,
//! e.g. `cargo test --release --test acceptance -- 4 6`.

use std::process::ExitCode;
use std::time::Instant;

use imexp::integrators::{integrate, integrate_with, IntegratorConfig, IntegratorKind};
use imexp::krylov::{gmres_solve, ichol_zero_fill, phi_times_vector, GmresConfig, KrylovConfig};
use imexp::phi::{phi_matrix, phi_scalar, DenseMatrix, PhiOrder};
use imexp::problems::{
    check_jacobian_action, make_allen_cahn, make_schnakenberg, make_semilinear_parabolic, ProblemSpec,
};
use imexp::sparse::{
    build_laplacian_1d_dirichlet, max_norm, max_norm_diff, norm2, shift_identity, CsrMatrix, GridSpec,
};
use imexp::study::{run_convergence_study, run_stability_scan, ReferencePolicy, StudyConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn order(k: usize) -> PhiOrder {
    PhiOrder::new(k).unwrap()
}

fn laplacian(n: usize) -> CsrMatrix {
    build_laplacian_1d_dirichlet(&GridSpec::dirichlet_1d(n, 0.0, 1.0)).unwrap()
}

fn c1_phi_identities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst_rec = 0.0f64;
    let mut worst_exp = 0.0f64;
    for _ in 0..200 {
        let z: f64 = rng.gen_range(-50.0..50.0);
        for k in 1..=3usize {
            let fact: f64 = (1..k).map(|i| i as f64).product();
            let prev = phi_scalar(order(k - 1), z);
            let r = (z * phi_scalar(order(k), z) + 1.0 / fact - prev).abs() / prev.abs().max(1.0);
            worst_rec = worst_rec.max(r);
        }
        let e = z.exp();
        worst_exp = worst_exp.max((1.0 + z * phi_scalar(order(1), z) - e).abs() / e.max(1.0));
    }
    let mut worst_mat = 0.0f64;
    for _ in 0..50 {
        let data: Vec<f64> = (0..36).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m = DenseMatrix::from_row_major(6, data).unwrap();
        let m = m.scaled(rng.gen_range(0.1..10.0) / m.norm1());
        let p2 = phi_matrix(order(2), &m).unwrap();
        let p3 = phi_matrix(order(3), &m).unwrap();
        let rhs = DenseMatrix::identity(6).scaled(0.5).add_scaled(1.0, &m.matmul(&p3));
        worst_mat = worst_mat.max(p2.max_abs_diff(&rhs));
    }
    let worst = worst_rec.max(worst_exp).max(worst_mat);
    verdict(
        worst <= 1e-10,
        format!("recurrence {worst_rec:.1e}, exp {worst_exp:.1e}, matrix {worst_mat:.1e} (tol 1e-10)"),
    )
}

/// `φₖ(τA)v` from `exp` of the augmented block matrix.
fn dense_phiv(a: &DMatrix<f64>, k: usize, v: &[f64], tau: f64) -> DVector<f64> {
    let n = a.nrows();
    let mut big = DMatrix::<f64>::zeros(n + k, n + k);
    big.view_mut((0, 0), (n, n)).copy_from(&(a * tau));
    if k == 0 {
        return big.exp() * DVector::from_column_slice(v);
    }
    for i in 0..n {
        big[(i, n)] = v[i];
    }
    for j in 0..k - 1 {
        big[(n + j, n + j + 1)] = 1.0;
    }
    big.exp().view((0, n + k - 1), (n, 1)).column(0).into_owned()
}

fn c2_krylov_vs_dense() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut ops: Vec<CsrMatrix> = [10, 30, 50].iter().map(|&n| laplacian(n)).collect();
    for n in [10, 20, 30] {
        let mut trips = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j || rng.gen_bool(0.3) {
                    trips.push((i, j, rng.gen_range(-1.0..1.0)));
                }
            }
        }
        ops.push(CsrMatrix::from_triplets(n, n, &trips).unwrap());
    }
    let cfg = KrylovConfig::default();
    let mut worst = 0.0f64;
    for a in &ops {
        let d = DMatrix::from_row_slice(a.n_rows(), a.n_cols(), &a.to_dense());
        let v: Vec<f64> = (0..a.n_rows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for k in 0..=2 {
            for tau in [1e-3, 1e-2] {
                let got = match phi_times_vector(a, order(k), &v, tau, &cfg) {
                    Ok(out) => out.result,
                    Err(e) => return verdict(false, format!("n={} k={k} tau={tau}: {e}", a.n_rows())),
                };
                let oracle = dense_phiv(&d, k, &v, tau);
                worst = worst.max((DVector::from_vec(got) - oracle).amax());
            }
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max-norm error {worst:.1e} over {} operators (tol 1e-10)", ops.len()),
    )
}

fn c3_stability_bounds() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let l = laplacian(100);
    let cfg = GmresConfig::default();
    let mut worst = f64::NEG_INFINITY;
    for h in [1e-3, 1.0, 10.0] {
        let full = shift_identity(&l, h).unwrap();
        let half = shift_identity(&l, 0.5 * h).unwrap();
        let plus = shift_identity(&l, -0.5 * h).unwrap();
        let (pf, ph) = (ichol_zero_fill(&full).unwrap(), ichol_zero_fill(&half).unwrap());
        for _ in 0..100 {
            let v: Vec<f64> = (0..100).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let nv = norm2(&v);
            let x = match gmres_solve(&full, &v, &[0.0; 100], &cfg, Some(&pf)) {
                Ok(o) => o.x,
                Err(e) => return verdict(false, format!("h={h}: {e}")),
            };
            let b = plus.spmv(&v).unwrap();
            let y = match gmres_solve(&half, &b, &[0.0; 100], &cfg, Some(&ph)) {
                Ok(o) => o.x,
                Err(e) => return verdict(false, format!("h={h}: {e}")),
            };
            worst = worst.max(norm2(&x) / nv - 1.0).max(norm2(&y) / nv - 1.0);
        }
    }
    verdict(
        worst <= 1e-10,
        format!("max ‖Rv‖/‖v‖ − 1 = {worst:.1e} over 600 solves (slack 1e-10)"),
    )
}

fn slopes_in(study: &imexp::study::ConvergenceStudy, methods: &[IntegratorKind], lo: f64, hi: f64) -> (bool, String) {
    let mut ok = true;
    let mut parts = Vec::new();
    for &m in methods {
        let s = study.slopes.iter().find(|s| s.method == m).and_then(|s| s.slope);
        match s {
            Some(p) if (lo..=hi).contains(&p) => parts.push(format!("{m} {p:.2}")),
            Some(p) => {
                ok = false;
                parts.push(format!("{m} {p:.2}!"));
            }
            None => {
                ok = false;
                parts.push(format!("{m} n/a!"));
            }
        }
    }
    (ok, parts.join(", "))
}

fn c4_parabolic_orders() -> Verdict {
    let cfg = StudyConfig::new(ProblemSpec::Parabolic { n: 200 });
    let study = match run_convergence_study(&cfg, &IntegratorKind::ALL, 0.1, 4, &ReferencePolicy::exact()) {
        Ok(s) => s,
        Err(e) => return verdict(false, e.to_string()),
    };
    let (ok1, d1) = slopes_in(&study, &[IntegratorKind::ImExpRk1], 0.8, 1.2);
    let (ok2, d2) = slopes_in(&study, &IntegratorKind::SECOND_ORDER, 1.7, 2.3);
    verdict(ok1 && ok2, format!("{d1} [0.8,1.2]; {d2} [1.7,2.3]"))
}

fn c5_two_d_orders() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    let cases = [
        (ProblemSpec::AllenCahn { eps: 0.02, n: 64 }, 0.075, 16),
        (ProblemSpec::Schnakenberg { gamma: 1000.0, n: 64 }, 0.1, 8),
    ];
    for (problem, t_end, refinement) in cases {
        let name = problem.name();
        let mut cfg = StudyConfig::new(problem);
        cfg.t_end = t_end;
        let policy = ReferencePolicy {
            refinement,
            ..ReferencePolicy::fine_step()
        };
        match run_convergence_study(&cfg, &IntegratorKind::SECOND_ORDER, t_end / 1024.0, 2, &policy) {
            Ok(study) => {
                let (ok, d) = slopes_in(&study, &IntegratorKind::SECOND_ORDER, 1.7, 2.3);
                pass &= ok;
                details.push(format!("{name}: {d}"));
            }
            Err(e) => {
                pass = false;
                details.push(format!("{name}: {e}"));
            }
        }
    }
    verdict(pass, format!("{} [1.7,2.3]", details.join("; ")))
}

fn c6_stability_advantage() -> Verdict {
    let grid = [1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5];
    let mut cfg = StudyConfig::new(ProblemSpec::Schnakenberg { gamma: 1e4, n: 64 });
    cfg.t_end = 0.1;
    let largest = |m| run_stability_scan(&cfg, m, &grid).map(|s| s.largest_stable);
    match (largest(IntegratorKind::HImExp2J), largest(IntegratorKind::Sbdf2)) {
        (Ok(Some(hj)), Ok(Some(hb))) => {
            let ratio = hj / hb;
            verdict(
                ratio >= 10.0 * (1.0 - 1e-12),
                format!("HImExp2J {hj:e}, 2-sBDF {hb:e}, ratio {ratio:.0} (need ≥ 10)"),
            )
        }
        (a, b) => verdict(false, format!("HImExp2J {a:?}, 2-sBDF {b:?}")),
    }
}

fn c7_imex_euler_residual() -> Verdict {
    let sys = make_semilinear_parabolic(200).unwrap();
    let cfg = IntegratorConfig::new(IntegratorKind::ImExpRk1, 1.0 / 50.0, 0.0, 1.0);
    let tol = cfg.gmres.tol;
    let h = cfg.h;
    let mut worst = 0.0f64;
    let mut steps = 0;
    let run = integrate_with(&sys, &cfg, sys.initial_state(), |ev| {
        let lu = sys.linear().spmv(ev.u).unwrap();
        let n = sys.nonlinear(ev.t_prev, ev.u_prev);
        let r = (0..ev.u.len())
            .map(|i| (ev.u[i] - ev.u_prev[i] - h * lu[i] - h * n[i]).abs())
            .fold(0.0, f64::max);
        worst = worst.max(r / (100.0 * tol * max_norm(ev.u)));
        steps += 1;
    });
    if let Err(e) = run {
        return verdict(false, e.to_string());
    }
    verdict(
        steps == 50 && worst <= 1.0,
        format!("{steps} steps, max residual / (100·tol·‖u₊‖∞) = {worst:.2e}"),
    )
}

fn c8_preconditioning() -> Verdict {
    let sys = make_semilinear_parabolic(200).unwrap();
    let run = |pre: bool| {
        let mut cfg = IntegratorConfig::new(IntegratorKind::ImExpRk2, 1e-2, 0.0, 1.0);
        // GMRES(10) without a preconditioner stalls near 1e-8 here
        cfg.gmres.restart = 20;
        cfg.use_preconditioner = pre;
        integrate(&sys, &cfg, sys.initial_state())
    };
    match (run(true), run(false)) {
        (Ok((up, sp)), Ok((un, sn))) => {
            let diff = max_norm_diff(&up, &un).unwrap();
            let tol = GmresConfig::default().tol;
            verdict(
                diff <= 10.0 * tol && sp.gmres_iters_total < sn.gmres_iters_total,
                format!(
                    "state difference {diff:.1e} (tol {:.0e}); GMRES iterations {} with IC(0) vs {} without",
                    10.0 * tol,
                    sp.gmres_iters_total,
                    sn.gmres_iters_total
                ),
            )
        }
        (a, b) => verdict(false, format!("preconditioned {:?}, plain {:?}", a.err(), b.err())),
    }
}

fn c9_jacobian_actions() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let systems = [
        make_semilinear_parabolic(200).unwrap(),
        make_allen_cahn(0.02, 64).unwrap(),
        make_schnakenberg(1000.0, 64).unwrap(),
    ];
    let mut failures = Vec::new();
    let mut ratios = Vec::new();
    for sys in &systems {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..20 {
            let u: Vec<f64> = sys
                .initial_state()
                .iter()
                .map(|x| x + 0.1 * rng.gen_range(-1.0..1.0))
                .collect();
            let v: Vec<f64> = (0..sys.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let c = check_jacobian_action(sys, 0.5, &u, &v, 1e-4);
            if !c.passes() {
                failures.push(format!("{}: {c:?}", sys.label()));
            }
            lo = lo.min(c.ratio());
            hi = hi.max(c.ratio());
        }
        ratios.push(format!("{} ratio [{lo:.3}, {hi:.3}]", sys.label()));
    }
    let mut detail = ratios.join("; ");
    if !failures.is_empty() {
        detail = format!("{detail}; failed: {}", failures.join(", "));
    } else {
        detail.push_str(" (affine N passes at rounding level)");
    }
    verdict(failures.is_empty(), detail)
}

type Criterion = (u32, &'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "phi identities", c1_phi_identities),
        (2, "Krylov phi*v vs dense", c2_krylov_vs_dense),
        (3, "stability bounds", c3_stability_bounds),
        (4, "parabolic orders", c4_parabolic_orders),
        (5, "2D orders", c5_two_d_orders),
        (6, "stability advantage", c6_stability_advantage),
        (7, "IMEX-Euler residual", c7_imex_euler_residual),
        (8, "preconditioning", c8_preconditioning),
        (9, "Jacobian actions", c9_jacobian_actions),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!(
            "{tag} {id} {name}: {} [{:.1}s]",
            v.detail,
            start.elapsed().as_secs_f64()
        );
        if !v.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
