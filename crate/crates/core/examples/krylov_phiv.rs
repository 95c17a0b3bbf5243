//! φ_k(τA)v in a Krylov subspace, compared with the dense evaluation.
//!
//!     cargo run --release --example krylov_phiv

use imexp::krylov::{phi_times_vector, KrylovConfig};
use imexp::phi::{phi_matrix, DenseMatrix, PhiOrder};
use imexp::sparse::{build_laplacian_1d_dirichlet, max_norm_diff, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 50;
    let a = build_laplacian_1d_dirichlet(&GridSpec::dirichlet_1d(n, 0.0, 1.0))?;
    let v: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 5.0).collect();
    let dense = DenseMatrix::from_row_major(n, a.to_dense())?;

    for tau in [1e-3, 1e-2, 1e-1] {
        for k in 0..=2 {
            let order = PhiOrder::new(k)?;
            let out = phi_times_vector(&a, order, &v, tau, &KrylovConfig::default())?;
            let exact = phi_matrix(order, &dense.scaled(tau))?.matvec(&v);
            println!(
                "tau = {tau:<6} k = {k}: substeps {:>3}, matvecs {:>4}, error {:.2e}",
                out.basis_sizes.len(),
                out.total_matvecs,
                max_norm_diff(&out.result, &exact)?
            );
        }
    }
    Ok(())
}
