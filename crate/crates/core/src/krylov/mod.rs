//! Krylov-subspace machinery: Arnoldi, adaptive φ-function/vector products,
//! restarted GMRES and the IC(0) preconditioner used for the implicit solves.

mod arnoldi;
mod gmres;
mod ichol;
mod phiv;

pub use arnoldi::{arnoldi, Arnoldi, ArnoldiResult};
pub use gmres::{gmres_solve, GmresConfig, GmresOutcome, PrecondSide};
pub use ichol::{ichol_zero_fill, IcFactor};
pub use phiv::{phi_times_vector, KrylovConfig, KrylovOutcome};

use std::cell::Cell;

use crate::sparse::CsrMatrix;

/// Action `x ↦ A x` of a square linear operator.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes `A x` into `y`. Both slices have length [`dim`](Self::dim).
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn apply_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.apply(x, &mut y);
        y
    }

    /// `‖A‖∞` when cheaply known. Lets solvers tell a residual that is still
    /// large from one sitting at the rounding level of `A x`.
    fn norm_inf(&self) -> Option<f64> {
        None
    }
}

impl LinearOperator for CsrMatrix {
    fn dim(&self) -> usize {
        self.n_rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv_into(x, y).expect("operator dimension");
    }

    fn norm_inf(&self) -> Option<f64> {
        Some(
            (0..self.n_rows())
                .map(|i| self.row(i).1.iter().map(|v| v.abs()).sum::<f64>())
                .fold(0.0, f64::max),
        )
    }
}

/// Matrix-free operator backed by a closure.
pub struct FnOperator<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[f64], &mut [f64])> FnOperator<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[f64], &mut [f64])> LinearOperator for FnOperator<F> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        (self.f)(x, y)
    }
}

/// Wraps an operator and tallies its applications.
pub struct Counted<'a> {
    inner: &'a dyn LinearOperator,
    count: Cell<u64>,
}

impl<'a> Counted<'a> {
    pub fn new(inner: &'a dyn LinearOperator) -> Self {
        Self {
            inner,
            count: Cell::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.get()
    }
}

impl LinearOperator for Counted<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.count.set(self.count.get() + 1);
        self.inner.apply(x, y)
    }

    fn norm_inf(&self) -> Option<f64> {
        self.inner.norm_inf()
    }
}
