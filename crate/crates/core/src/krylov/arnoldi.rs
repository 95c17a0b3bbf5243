use super::LinearOperator;
use crate::error::ArgumentError;
use crate::phi::DenseMatrix;
use crate::sparse::norm2;

/// Relative size of `h[j+1][j]` below which the Krylov space is invariant.
const BREAKDOWN_TOL: f64 = 1e-13;

/// Incremental Arnoldi process with modified Gram-Schmidt and one
/// re-orthogonalization pass.
///
/// After `m` steps, `A V_m = V_{m+1} H̄_m` where `H̄_m` is the
/// `(m+1) x m` upper Hessenberg matrix.
pub struct Arnoldi<'a> {
    op: &'a dyn LinearOperator,
    beta: f64,
    basis: Vec<Vec<f64>>,
    // column j holds h[0..=j+1][j]
    h_cols: Vec<Vec<f64>>,
    breakdown: bool,
    scratch: Vec<f64>,
}

impl<'a> Arnoldi<'a> {
    pub fn new(op: &'a dyn LinearOperator, v: &[f64]) -> Result<Self, ArgumentError> {
        let n = op.dim();
        if v.len() != n {
            return Err(ArgumentError::DimensionMismatch {
                what: "arnoldi start vector",
                expected: n,
                got: v.len(),
            });
        }
        let beta = norm2(v);
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(ArgumentError::InvalidConfig(
                "arnoldi start vector must be nonzero and finite".into(),
            ));
        }
        Ok(Self {
            op,
            beta,
            basis: vec![v.iter().map(|x| x / beta).collect()],
            h_cols: Vec::new(),
            breakdown: false,
            scratch: vec![0.0; n],
        })
    }

    /// Norm of the start vector.
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Completed steps (= operator applications).
    pub fn steps(&self) -> usize {
        self.h_cols.len()
    }

    pub fn breakdown(&self) -> bool {
        self.breakdown
    }

    /// Orthonormal basis vectors computed so far (`steps + 1`, or `steps`
    /// after a breakdown).
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Entry `h[i][j]` of the Hessenberg matrix.
    pub fn h(&self, i: usize, j: usize) -> f64 {
        self.h_cols[j].get(i).copied().unwrap_or(0.0)
    }

    /// Performs one step. Returns `false` once the space is invariant.
    pub fn step(&mut self) -> bool {
        if self.breakdown {
            return false;
        }
        let j = self.h_cols.len();
        let mut w = std::mem::take(&mut self.scratch);
        self.op.apply(&self.basis[j], &mut w);
        let w_norm = norm2(&w);
        let mut col = vec![0.0; j + 2];
        for _pass in 0..2 {
            for (i, q) in self.basis.iter().enumerate() {
                let c: f64 = q.iter().zip(&w).map(|(a, b)| a * b).sum();
                col[i] += c;
                for (wk, qk) in w.iter_mut().zip(q) {
                    *wk -= c * qk;
                }
            }
        }
        let h_next = norm2(&w);
        col[j + 1] = h_next;
        let invariant = h_next <= BREAKDOWN_TOL * w_norm || h_next == 0.0;
        if invariant {
            col[j + 1] = 0.0;
            self.breakdown = true;
            self.scratch = w;
        } else {
            let next: Vec<f64> = w.iter().map(|x| x / h_next).collect();
            self.basis.push(next);
            self.scratch = w;
        }
        self.h_cols.push(col);
        !self.breakdown
    }

    /// Square `m x m` leading Hessenberg block.
    pub fn hessenberg(&self, m: usize) -> DenseMatrix {
        let mut h = DenseMatrix::zeros(m);
        for j in 0..m {
            for i in 0..=(j + 1).min(m - 1) {
                h[(i, j)] = self.h(i, j);
            }
        }
        h
    }

    /// `Σ_{i<m} coeffs[i] · v_i`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.op.dim()];
        for (c, q) in coeffs.iter().zip(&self.basis) {
            for (o, qi) in out.iter_mut().zip(q) {
                *o += c * qi;
            }
        }
        out
    }
}

/// Output of a fixed-length Arnoldi run.
#[derive(Debug, Clone)]
pub struct ArnoldiResult {
    /// `V_{m+1}` (or `V_m` after breakdown), orthonormal columns.
    pub basis: Vec<Vec<f64>>,
    /// `(m+1) x m` Hessenberg matrix, row-major.
    pub h_bar: Vec<Vec<f64>>,
    /// Steps actually performed.
    pub steps: usize,
    /// Set when an exact invariant subspace was found.
    pub breakdown: bool,
    pub beta: f64,
}

/// Runs up to `m` Arnoldi steps from `v`.
pub fn arnoldi(a: &dyn LinearOperator, v: &[f64], m: usize) -> Result<ArnoldiResult, ArgumentError> {
    let mut it = Arnoldi::new(a, v)?;
    while it.steps() < m && it.step() {}
    let steps = it.steps();
    let h_bar = (0..=steps).map(|i| (0..steps).map(|j| it.h(i, j)).collect()).collect();
    Ok(ArnoldiResult {
        basis: it.basis.clone(),
        h_bar,
        steps,
        breakdown: it.breakdown,
        beta: it.beta,
    })
}
