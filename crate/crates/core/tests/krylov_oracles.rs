use imexp::krylov::{
    arnoldi, gmres_solve, ichol_zero_fill, phi_times_vector, Counted, FnOperator, GmresConfig, KrylovConfig,
    LinearOperator, PrecondSide,
};
use imexp::phi::PhiOrder;
use imexp::sparse::{build_laplacian_1d_dirichlet, norm2, shift_identity, CsrMatrix, GridSpec};
use imexp::SolverError;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dense(a: &CsrMatrix) -> DMatrix<f64> {
    DMatrix::from_row_slice(a.n_rows(), a.n_cols(), &a.to_dense())
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_csr(rng: &mut ChaCha8Rng, n: usize, density: f64) -> CsrMatrix {
    let mut trips = Vec::new();
    for i in 0..n {
        trips.push((i, i, rng.gen_range(-2.0..0.0)));
        for j in 0..n {
            if i != j && rng.gen_bool(density) {
                trips.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
    }
    CsrMatrix::from_triplets(n, n, &trips).unwrap()
}

fn laplacian(n: usize) -> CsrMatrix {
    build_laplacian_1d_dirichlet(&GridSpec::dirichlet_1d(n, 0.0, 1.0)).unwrap()
}

/// `φₖ(τA)v` as the top of the last column of `exp([[τA, v, 0], [0, 0, I], [0, 0, 0]])`.
fn dense_phiv(a: &DMatrix<f64>, k: usize, v: &[f64], tau: f64) -> DVector<f64> {
    let n = a.nrows();
    if k == 0 {
        return (a * tau).exp() * DVector::from_column_slice(v);
    }
    let mut big = DMatrix::<f64>::zeros(n + k, n + k);
    big.view_mut((0, 0), (n, n)).copy_from(&(a * tau));
    for i in 0..n {
        big[(i, n)] = v[i];
    }
    for j in 0..k - 1 {
        big[(n + j, n + j + 1)] = 1.0;
    }
    let e = big.exp();
    e.view((0, n + k - 1), (n, 1)).into_owned().column(0).into_owned()
}

#[test]
fn phiv_matches_dense_on_laplacians_and_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = KrylovConfig::default();
    let mut cases: Vec<CsrMatrix> = [10, 25, 50].iter().map(|&n| laplacian(n)).collect();
    cases.extend([8, 20, 30].iter().map(|&n| random_csr(&mut rng, n, 0.3)));
    for a in &cases {
        let d = dense(a);
        let v = random_vec(&mut rng, a.n_rows());
        for k in 0..=2 {
            for tau in [1e-3, 1e-2] {
                let out = phi_times_vector(a, PhiOrder::new(k).unwrap(), &v, tau, &cfg).unwrap();
                let oracle = dense_phiv(&d, k, &v, tau);
                let err = (DVector::from_vec(out.result.clone()) - &oracle).norm();
                assert!(err <= 1e-10 * norm2(&v), "n={} k={k} tau={tau}: {err}", a.n_rows());
                assert!(out.converged);
                assert_eq!(out.total_matvecs, out.basis_sizes.iter().sum::<usize>() as u64);
            }
        }
    }
}

#[test]
fn phiv_zero_vector_and_zero_tau() {
    let a = laplacian(12);
    let cfg = KrylovConfig::default();
    let zero = phi_times_vector(&a, PhiOrder::new(1).unwrap(), &[0.0; 12], 0.1, &cfg).unwrap();
    assert!(zero.result.iter().all(|&x| x == 0.0));
    assert_eq!(zero.total_matvecs, 0);
    let v: Vec<f64> = (0..12).map(|i| i as f64).collect();
    let at0 = phi_times_vector(&a, PhiOrder::new(2).unwrap(), &v, 0.0, &cfg).unwrap();
    for (r, x) in at0.result.iter().zip(&v) {
        assert!((r - 0.5 * x).abs() < 1e-14);
    }
}

#[test]
fn phiv_is_linear_in_v() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = laplacian(40);
    let cfg = KrylovConfig::default();
    let k = PhiOrder::new(2).unwrap();
    let x = random_vec(&mut rng, 40);
    let y = random_vec(&mut rng, 40);
    let (alpha, beta) = (1.7, -0.3);
    let comb: Vec<f64> = x.iter().zip(&y).map(|(a, b)| alpha * a + beta * b).collect();
    let fx = phi_times_vector(&a, k, &x, 1e-2, &cfg).unwrap().result;
    let fy = phi_times_vector(&a, k, &y, 1e-2, &cfg).unwrap().result;
    let fc = phi_times_vector(&a, k, &comb, 1e-2, &cfg).unwrap().result;
    let diff: Vec<f64> = (0..40).map(|i| fc[i] - alpha * fx[i] - beta * fy[i]).collect();
    assert!(norm2(&diff) <= 1e-10 * norm2(&comb));
}

#[test]
fn phiv_reports_nonconvergence() {
    let a = laplacian(200);
    let cfg = KrylovConfig {
        tol: 1e-14,
        max_basis: 3,
        max_substeps: 1,
    };
    let v = vec![1.0; 200];
    match phi_times_vector(&a, PhiOrder::new(1).unwrap(), &v, 10.0, &cfg) {
        Err(SolverError::Convergence(e)) => assert_eq!(e.best.len(), 200),
        other => panic!("expected convergence failure, got {other:?}"),
    }
}

#[test]
fn arnoldi_relation_and_orthonormality() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_csr(&mut rng, 20, 0.4);
    let v = random_vec(&mut rng, 20);
    let m = 8;
    let r = arnoldi(&a, &v, m).unwrap();
    assert_eq!(r.steps, m);
    assert!(!r.breakdown);
    assert!((r.beta - norm2(&v)).abs() < 1e-14);
    // A V_m = V_{m+1} H̄_m
    let vm1 = DMatrix::from_fn(20, m + 1, |i, j| r.basis[j][i]);
    let hbar = DMatrix::from_fn(m + 1, m, |i, j| r.h_bar[i][j]);
    let lhs = dense(&a) * vm1.columns(0, m);
    assert!((lhs - &vm1 * hbar).amax() < 1e-12);
    let gram = vm1.transpose() * &vm1;
    assert!((gram - DMatrix::identity(m + 1, m + 1)).amax() < 1e-12);
}

#[test]
fn arnoldi_breaks_down_on_invariant_subspace() {
    let d = CsrMatrix::from_diagonal(&[1.0, 2.0, 3.0, 4.0, 5.0]);
    let r = arnoldi(&d, &[1.0, 1.0, 0.0, 0.0, 0.0], 5).unwrap();
    assert!(r.breakdown);
    assert_eq!(r.steps, 2);
}

fn shifted_laplacian(n: usize, h: f64) -> CsrMatrix {
    shift_identity(&laplacian(n), h).unwrap()
}

#[test]
fn gmres_matches_lu_solve() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    let a = shifted_laplacian(30, 1e-3);
    let b = random_vec(&mut rng, 30);
    let oracle = dense(&a).lu().solve(&DVector::from_vec(b.clone())).unwrap();
    let cfg = GmresConfig::default();
    let ic = ichol_zero_fill(&a).unwrap();
    for precond in [None, Some(&ic)] {
        let out = gmres_solve(&a, &b, &[0.0; 30], &cfg, precond).unwrap();
        assert!(out.converged);
        let err = (DVector::from_vec(out.x) - &oracle).amax();
        assert!(err <= 1e-10 * oracle.amax(), "{err}");
        assert!(out.residual <= cfg.tol * 1.0001);
    }
}

#[test]
fn gmres_split_preconditioning_matches_left() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let a = shifted_laplacian(60, 1e-2);
    let b = random_vec(&mut rng, 60);
    let ic = ichol_zero_fill(&a).unwrap();
    let left = gmres_solve(&a, &b, &[0.0; 60], &GmresConfig::default(), Some(&ic)).unwrap();
    let split_cfg = GmresConfig {
        side: PrecondSide::Split,
        ..GmresConfig::default()
    };
    let split = gmres_solve(&a, &b, &[0.0; 60], &split_cfg, Some(&ic)).unwrap();
    let diff: Vec<f64> = left.x.iter().zip(&split.x).map(|(p, q)| p - q).collect();
    assert!(norm2(&diff) <= 1e-10 * norm2(&left.x));
}

#[test]
fn gmres_zero_rhs_and_exact_guess() {
    let a = shifted_laplacian(10, 0.1);
    let out = gmres_solve(&a, &[0.0; 10], &[0.0; 10], &GmresConfig::default(), None).unwrap();
    assert_eq!(out.iterations, 0);
    assert!(out.x.iter().all(|&x| x == 0.0));
    let x: Vec<f64> = (0..10).map(|i| (i as f64).sin()).collect();
    let b = a.spmv(&x).unwrap();
    let warm = gmres_solve(&a, &b, &x, &GmresConfig::default(), None).unwrap();
    assert_eq!(warm.iterations, 0);
}

#[test]
fn gmres_reports_best_iterate_on_failure() {
    let a = shifted_laplacian(100, 10.0);
    let b = vec![1.0; 100];
    let cfg = GmresConfig {
        restart: 2,
        max_iters: 6,
        ..GmresConfig::default()
    };
    match gmres_solve(&a, &b, &[0.0; 100], &cfg, None) {
        Err(SolverError::Convergence(e)) => {
            assert!(e.iterations <= 6);
            let r: Vec<f64> = a.spmv(&e.best).unwrap().iter().zip(&b).map(|(p, q)| q - p).collect();
            // best iterate is no worse than the zero guess
            assert!(norm2(&r) <= norm2(&b));
        }
        other => panic!("expected convergence failure, got {other:?}"),
    }
}

#[test]
fn gmres_through_matrix_free_operator_counts_applications() {
    let a = shifted_laplacian(20, 1e-2);
    let op = FnOperator::new(20, |x: &[f64], y: &mut [f64]| a.spmv_into(x, y).unwrap());
    let counted = Counted::new(&op);
    let b = vec![1.0; 20];
    let out = gmres_solve(&counted, &b, &[0.0; 20], &GmresConfig::default(), None).unwrap();
    assert!(out.converged);
    assert!(counted.count() >= out.iterations as u64);
}

#[test]
fn ic0_is_exact_cholesky_on_tridiagonal() {
    let a = shifted_laplacian(40, 0.5);
    let ic = ichol_zero_fill(&a).unwrap();
    let chol = dense(&a).cholesky().unwrap();
    assert!((dense(ic.lower()) - chol.l()).amax() < 1e-12);
    let b = vec![1.0; 40];
    let out = gmres_solve(&a, &b, &[0.0; 40], &GmresConfig::default(), Some(&ic)).unwrap();
    assert!(out.iterations <= 3, "{} iterations", out.iterations);
}

#[test]
fn ic0_apply_matches_dense_solve() {
    let a = shifted_laplacian(25, 0.2);
    let ic = ichol_zero_fill(&a).unwrap();
    let l = dense(ic.lower());
    let m = &l * l.transpose();
    let r: Vec<f64> = (0..25).map(|i| (i as f64 * 0.37).cos()).collect();
    let oracle = m.lu().solve(&DVector::from_vec(r.clone())).unwrap();
    let z = ic.apply(&r);
    assert!((DVector::from_vec(z) - oracle).amax() < 1e-12);
    assert!(ic.try_apply(&[1.0; 3]).is_err());
}

#[test]
fn ic0_rejects_indefinite_matrix() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
    assert!(matches!(ichol_zero_fill(&a), Err(SolverError::Factorization { .. })));
}

#[test]
fn operator_norm_inf_is_max_row_sum() {
    let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, -3.0), (0, 1, 1.0), (1, 1, 2.0)]).unwrap();
    assert_eq!(a.norm_inf(), Some(4.0));
    assert_eq!(Counted::new(&a).norm_inf(), Some(4.0));
}
