//! Assembles the finite-difference Laplacians and checks their basic
//! structure.
//!
//!     cargo run --example laplacian

use imexp::sparse::{build_laplacian_1d_dirichlet, build_laplacian_2d, BoundaryCondition, GridSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let g1 = GridSpec::dirichlet_1d(5, 0.0, 1.0);
    let l1 = build_laplacian_1d_dirichlet(&g1)?;
    println!("1D Dirichlet, {} unknowns, dx = {}", l1.n_rows(), g1.spacing(0));
    print!("{}", l1.to_matrix_market());

    for bc in [BoundaryCondition::Periodic, BoundaryCondition::NeumannHomogeneous] {
        let g = GridSpec::square_2d(16, 0.0, 1.0, bc);
        let l = build_laplacian_2d(&g)?;
        let ones = vec![1.0; l.n_rows()];
        let row_sum = l.spmv(&ones)?.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        println!(
            "2D {bc:?}: n = {}, nnz = {}, symmetric = {}, max |row sum| = {row_sum:e}",
            l.n_rows(),
            l.nnz(),
            l.is_symmetric()
        );
    }
    Ok(())
}
