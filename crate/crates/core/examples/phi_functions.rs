//! Scalar and matrix φ-functions.
//!
//!     cargo run --example phi_functions

use imexp::phi::{expm, phi_linear_combination, phi_matrix, phi_scalar, DenseMatrix, PhiOrder};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>8} {:>22} {:>22} {:>22}", "z", "phi_1", "phi_2", "phi_3");
    for z in [-10.0, -1.0, -1e-3, 0.0, 0.3, 1.0] {
        let p = |k| phi_scalar(PhiOrder::new(k).unwrap(), z);
        println!("{z:>8} {:>22.15e} {:>22.15e} {:>22.15e}", p(1), p(2), p(3));
    }

    // a small nonsymmetric matrix
    let m = DenseMatrix::from_row_major(3, vec![-2.0, 1.0, 0.0, 0.5, -1.0, 0.3, 0.0, 0.2, -4.0])?;
    let e = expm(&m);
    let p1 = phi_matrix(PhiOrder::new(1)?, &m)?;
    // e^M = I + M φ₁(M)
    let rhs = DenseMatrix::identity(3).add_scaled(1.0, &m.matmul(&p1));
    println!("|e^M - (I + M phi1(M))|max = {:e}", e.max_abs_diff(&rhs));

    // φ₀(M)b0 + φ₁(M)b1 + φ₂(M)b2 in one augmented exponential
    let (b0, b1, b2) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]);
    let combo = phi_linear_combination(&m, &[&b0, &b1, &b2])?;
    let p2 = phi_matrix(PhiOrder::new(2)?, &m)?;
    let direct: Vec<f64> = (0..3)
        .map(|i| e.matvec(&b0)[i] + p1.matvec(&b1)[i] + p2.matvec(&b2)[i])
        .collect();
    println!("augmented: {combo:.12?}");
    println!("direct:    {direct:.12?}");
    Ok(())
}
