use crate::error::{ArgumentError, SolverError};
use crate::sparse::CsrMatrix;

/// Zero-fill incomplete Cholesky factor `L` with `LLᵀ ≈ A`.
///
/// `L` is stored by rows, lower triangular, with the diagonal as the last
/// entry of each row.
#[derive(Debug, Clone, PartialEq)]
pub struct IcFactor {
    lower: CsrMatrix,
}

impl IcFactor {
    pub fn dim(&self) -> usize {
        self.lower.n_rows()
    }

    pub fn lower(&self) -> &CsrMatrix {
        &self.lower
    }

    /// Solves `L y = r`.
    pub fn solve_lower(&self, r: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = r.to_vec();
        for i in 0..n {
            let (cols, vals) = self.lower.row(i);
            let last = cols.len() - 1;
            let mut s = y[i];
            for k in 0..last {
                s -= vals[k] * y[cols[k]];
            }
            y[i] = s / vals[last];
        }
        y
    }

    /// Solves `Lᵀ z = y`.
    pub fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut z = y.to_vec();
        for i in (0..n).rev() {
            let (cols, vals) = self.lower.row(i);
            let last = cols.len() - 1;
            z[i] /= vals[last];
            let zi = z[i];
            for k in 0..last {
                z[cols[k]] -= vals[k] * zi;
            }
        }
        z
    }

    /// `(LLᵀ)⁻¹ r` by forward then backward substitution.
    pub fn apply(&self, r: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(r))
    }

    /// Like [`apply`](Self::apply) with a length check.
    pub fn try_apply(&self, r: &[f64]) -> Result<Vec<f64>, ArgumentError> {
        if r.len() != self.dim() {
            return Err(ArgumentError::DimensionMismatch {
                what: "apply_preconditioner",
                expected: self.dim(),
                got: r.len(),
            });
        }
        Ok(self.apply(r))
    }
}

/// IC(0) factorization of a symmetric matrix with positive diagonal.
///
/// Only the lower triangle of `a` is read. The factor keeps exactly that
/// sparsity pattern; fill-in is dropped.
pub fn ichol_zero_fill(a: &CsrMatrix) -> Result<IcFactor, SolverError> {
    if !a.is_square() {
        return Err(ArgumentError::NotSquare {
            rows: a.n_rows(),
            cols: a.n_cols(),
        }
        .into());
    }
    let n = a.n_rows();
    let mut row_ptr = vec![0usize];
    let mut col_idx: Vec<usize> = Vec::with_capacity(a.nnz() / 2 + n);
    let mut vals: Vec<f64> = Vec::with_capacity(a.nnz() / 2 + n);
    // position of each row's diagonal in `vals`
    let mut diag_pos = vec![0usize; n];

    for i in 0..n {
        let (cols, avals) = a.row(i);
        let start = col_idx.len();
        let mut has_diag = false;
        for (&c, &v) in cols.iter().zip(avals) {
            if c > i {
                break;
            }
            has_diag |= c == i;
            col_idx.push(c);
            vals.push(v);
        }
        if !has_diag {
            return Err(SolverError::Factorization { row: i, pivot: 0.0 });
        }
        let end = col_idx.len();
        for p in start..end {
            let k = col_idx[p];
            // dot of row i and row k of L over columns j < k
            let (klo, khi) = if k == i { (start, p) } else { (row_ptr[k], diag_pos[k]) };
            let mut s = vals[p];
            let (mut a_ptr, mut b_ptr) = (start, klo);
            while a_ptr < p && b_ptr < khi {
                let (ca, cb) = (col_idx[a_ptr], col_idx[b_ptr]);
                if ca == cb {
                    s -= vals[a_ptr] * vals[b_ptr];
                    a_ptr += 1;
                    b_ptr += 1;
                } else if ca < cb {
                    a_ptr += 1;
                } else {
                    b_ptr += 1;
                }
            }
            if k == i {
                if !(s > 0.0) || !s.is_finite() {
                    return Err(SolverError::Factorization { row: i, pivot: s });
                }
                vals[p] = s.sqrt();
                diag_pos[i] = p;
            } else {
                vals[p] = s / vals[diag_pos[k]];
            }
        }
        row_ptr.push(end);
    }
    let lower = CsrMatrix::from_raw(n, n, row_ptr, col_idx, vals)?;
    Ok(IcFactor { lower })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor() {
        let f = ichol_zero_fill(&CsrMatrix::identity(4)).unwrap();
        assert_eq!(f.lower().to_dense(), CsrMatrix::identity(4).to_dense());
        assert_eq!(f.apply(&[1.0, 2.0, 3.0, 4.0]), vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn diagonal_factor() {
        let f = ichol_zero_fill(&CsrMatrix::from_diagonal(&[4.0, 9.0])).unwrap();
        assert_eq!(f.lower().to_dense(), vec![2.0, 0.0, 0.0, 3.0]);
        let g = ichol_zero_fill(&CsrMatrix::from_diagonal(&[4.0])).unwrap();
        assert_eq!(g.apply(&[2.0]), vec![0.5]);
    }

    #[test]
    fn nonpositive_pivot() {
        let a = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]).unwrap();
        assert!(matches!(
            ichol_zero_fill(&a),
            Err(SolverError::Factorization { row: 1, .. })
        ));
        let no_diag = CsrMatrix::from_triplets(2, 2, &[(0, 0, 1.0), (1, 0, 0.5)]).unwrap();
        assert!(ichol_zero_fill(&no_diag).is_err());
    }

    #[test]
    fn dimension_checked() {
        let f = ichol_zero_fill(&CsrMatrix::identity(2)).unwrap();
        assert!(f.try_apply(&[1.0]).is_err());
    }
}
