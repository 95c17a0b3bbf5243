//! Dense vector kernels, compressed sparse row matrices and finite-difference
//! Laplacian assembly.
//!
//! Vectors are plain `[f64]` slices. Grid unknowns are ordered
//! lexicographically with the x index running fastest: `m = i + j * nx`.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::ArgumentError;

fn check_len(what: &'static str, expected: usize, got: usize) -> Result<(), ArgumentError> {
    if expected == got {
        Ok(())
    } else {
        Err(ArgumentError::DimensionMismatch { what, expected, got })
    }
}

/// `y <- alpha * x + y`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) -> Result<(), ArgumentError> {
    check_len("axpy", y.len(), x.len())?;
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
    Ok(())
}

pub fn scale(alpha: f64, x: &mut [f64]) {
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

pub fn dot(x: &[f64], y: &[f64]) -> Result<f64, ArgumentError> {
    check_len("dot", x.len(), y.len())?;
    Ok(x.iter().zip(y).map(|(a, b)| a * b).sum())
}

/// Euclidean norm.
pub fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Discrete maximum norm, `max_i |x_i|`. Zero for an empty vector.
pub fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Max-norm of `x - y`.
pub fn max_norm_diff(x: &[f64], y: &[f64]) -> Result<f64, ArgumentError> {
    check_len("max_norm_diff", x.len(), y.len())?;
    Ok(x.iter().zip(y).fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

pub fn all_finite(x: &[f64]) -> bool {
    x.iter().all(|v| v.is_finite())
}

/// Thread-safe tally of matrix-vector products.
#[derive(Debug, Default)]
pub struct MatvecCounter(AtomicU64);

impl MatvecCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.0.store(0, Ordering::Relaxed);
    }
}

/// Square or rectangular matrix in compressed sparse row form.
///
/// Canonical form is enforced at construction: column indices are strictly
/// increasing within each row and `row_ptr` brackets every row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n_rows: usize,
    n_cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from raw CSR arrays, validating canonical form.
    pub fn from_raw(
        n_rows: usize,
        n_cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        vals: Vec<f64>,
    ) -> Result<Self, ArgumentError> {
        let bad = |reason: String| Err(ArgumentError::InvalidCsr(reason));
        if row_ptr.len() != n_rows + 1 {
            return bad(format!(
                "row_ptr has {} entries, expected {}",
                row_ptr.len(),
                n_rows + 1
            ));
        }
        if row_ptr[0] != 0 || row_ptr[n_rows] != col_idx.len() || col_idx.len() != vals.len() {
            return bad("row_ptr endpoints disagree with col_idx/vals lengths".into());
        }
        for r in 0..n_rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if lo > hi {
                return bad(format!("row_ptr decreases at row {r}"));
            }
            let cols = &col_idx[lo..hi];
            if cols.iter().any(|&c| c >= n_cols) {
                return bad(format!("column index out of range in row {r}"));
            }
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return bad(format!("column indices not strictly increasing in row {r}"));
            }
        }
        Ok(Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        })
    }

    /// Assembles from `(row, col, value)` triplets; duplicates are summed and
    /// entries are sorted into canonical order. Explicit zeros are kept.
    pub fn from_triplets(
        n_rows: usize,
        n_cols: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, ArgumentError> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_rows];
        for &(r, c, v) in triplets {
            if r >= n_rows || c >= n_cols {
                return Err(ArgumentError::InvalidCsr(format!(
                    "triplet ({r}, {c}) outside {n_rows}x{n_cols}"
                )));
            }
            rows[r].push((c, v));
        }
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut vals = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            for (c, v) in row {
                if col_idx.len() > *row_ptr.last().unwrap() && *col_idx.last().unwrap() == c {
                    *vals.last_mut().unwrap() += v;
                } else {
                    col_idx.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self::from_raw(n_rows, n_cols, row_ptr, col_idx, vals)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: vec![1.0; n],
        }
    }

    /// Matrix with no stored entries.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self {
            n_rows,
            n_cols,
            row_ptr: vec![0; n_rows + 1],
            col_idx: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            n_rows: n,
            n_cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            vals: diag.to_vec(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_square(&self) -> bool {
        self.n_rows == self.n_cols
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn vals(&self) -> &[f64] {
        &self.vals
    }

    /// Column indices and values of row `r`.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.vals[lo..hi])
    }

    /// Stored value at `(r, c)`, zero when not in the pattern.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).map(|k| vals[k]).unwrap_or(0.0)
    }

    /// `y = A x` into a caller buffer.
    pub fn spmv_into(&self, x: &[f64], y: &mut [f64]) -> Result<(), ArgumentError> {
        check_len("spmv input", self.n_cols, x.len())?;
        check_len("spmv output", self.n_rows, y.len())?;
        for (yr, w) in y.iter_mut().zip(self.row_ptr.windows(2)) {
            let (cols, vals) = (&self.col_idx[w[0]..w[1]], &self.vals[w[0]..w[1]]);
            *yr = cols.iter().zip(vals).map(|(&c, &v)| v * x[c]).sum();
        }
        Ok(())
    }

    /// `A x` as a new vector.
    pub fn spmv(&self, x: &[f64]) -> Result<Vec<f64>, ArgumentError> {
        let mut y = vec![0.0; self.n_rows];
        self.spmv_into(x, &mut y)?;
        Ok(y)
    }

    /// `A x`, recording one product in `counter`.
    pub fn spmv_counted(&self, x: &[f64], counter: &MatvecCounter) -> Result<Vec<f64>, ArgumentError> {
        let y = self.spmv(x)?;
        counter.bump();
        Ok(y)
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        scale(alpha, &mut out.vals);
        out
    }

    pub fn transpose(&self) -> Self {
        let mut counts = vec![0usize; self.n_cols + 1];
        for &c in &self.col_idx {
            counts[c + 1] += 1;
        }
        for c in 0..self.n_cols {
            counts[c + 1] += counts[c];
        }
        let row_ptr = counts.clone();
        let mut next = counts;
        let mut col_idx = vec![0; self.nnz()];
        let mut vals = vec![0.0; self.nnz()];
        for r in 0..self.n_rows {
            let (cols, vs) = self.row(r);
            for (&c, &v) in cols.iter().zip(vs) {
                let slot = next[c];
                col_idx[slot] = r;
                vals[slot] = v;
                next[c] += 1;
            }
        }
        Self {
            n_rows: self.n_cols,
            n_cols: self.n_rows,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    /// Block-diagonal matrix `diag(blocks[0], blocks[1], ...)`.
    pub fn block_diagonal(blocks: &[&CsrMatrix]) -> Self {
        let n_rows = blocks.iter().map(|b| b.n_rows).sum();
        let n_cols = blocks.iter().map(|b| b.n_cols).sum();
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut vals = Vec::new();
        let mut col_off = 0;
        for b in blocks {
            for r in 0..b.n_rows {
                let (cols, vs) = b.row(r);
                col_idx.extend(cols.iter().map(|c| c + col_off));
                vals.extend_from_slice(vs);
                row_ptr.push(col_idx.len());
            }
            col_off += b.n_cols;
        }
        Self {
            n_rows,
            n_cols,
            row_ptr,
            col_idx,
            vals,
        }
    }

    /// Row-major dense copy, for tests and small diagnostics.
    pub fn to_dense(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_rows * self.n_cols];
        for r in 0..self.n_rows {
            let (cols, vs) = self.row(r);
            for (&c, &v) in cols.iter().zip(vs) {
                d[r * self.n_cols + c] = v;
            }
        }
        d
    }

    /// Matrix Market coordinate format (`real general`).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate real general\n");
        let _ = writeln!(s, "{} {} {}", self.n_rows, self.n_cols, self.nnz());
        for r in 0..self.n_rows {
            let (cols, vs) = self.row(r);
            for (&c, &v) in cols.iter().zip(vs) {
                let _ = writeln!(s, "{} {} {:e}", r + 1, c + 1, v);
            }
        }
        s
    }
}

/// Returns `I - alpha * A`, with a diagonal entry stored in every row.
pub fn shift_identity(a: &CsrMatrix, alpha: f64) -> Result<CsrMatrix, ArgumentError> {
    if !a.is_square() {
        return Err(ArgumentError::NotSquare {
            rows: a.n_rows,
            cols: a.n_cols,
        });
    }
    let n = a.n_rows;
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut col_idx = Vec::with_capacity(a.nnz() + n);
    let mut vals = Vec::with_capacity(a.nnz() + n);
    row_ptr.push(0);
    for r in 0..n {
        let (cols, vs) = a.row(r);
        let mut diag_done = false;
        for (&c, &v) in cols.iter().zip(vs) {
            if !diag_done && c > r {
                col_idx.push(r);
                vals.push(1.0);
                diag_done = true;
            }
            if c == r {
                col_idx.push(r);
                vals.push(1.0 - alpha * v);
                diag_done = true;
            } else {
                col_idx.push(c);
                vals.push(-alpha * v);
            }
        }
        if !diag_done {
            col_idx.push(r);
            vals.push(1.0);
        }
        row_ptr.push(col_idx.len());
    }
    CsrMatrix::from_raw(n, n, row_ptr, col_idx, vals)
}

/// Boundary-condition regime of a finite-difference grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Homogeneous Dirichlet; only interior nodes are unknowns.
    DirichletHomogeneous,
    /// Periodic; `points_per_axis` distinct cells, no duplicated endpoint.
    Periodic,
    /// Homogeneous Neumann on a cell-centered grid with mirrored ghost cells.
    NeumannHomogeneous,
}

/// Uniform grid on a line segment or an axis-aligned rectangle.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub dim: usize,
    pub points_per_axis: usize,
    pub lower: [f64; 2],
    pub upper: [f64; 2],
    pub bc: BoundaryCondition,
}

impl GridSpec {
    /// 1D Dirichlet grid with `interior` unknown nodes on `[lower, upper]`.
    pub fn dirichlet_1d(interior: usize, lower: f64, upper: f64) -> Self {
        Self {
            dim: 1,
            points_per_axis: interior + 2,
            lower: [lower, 0.0],
            upper: [upper, 0.0],
            bc: BoundaryCondition::DirichletHomogeneous,
        }
    }

    pub fn square_2d(n: usize, lower: f64, upper: f64, bc: BoundaryCondition) -> Self {
        Self {
            dim: 2,
            points_per_axis: n,
            lower: [lower, lower],
            upper: [upper, upper],
            bc,
        }
    }

    /// Grid spacing along `axis`.
    pub fn spacing(&self, axis: usize) -> f64 {
        let len = self.upper[axis] - self.lower[axis];
        match self.bc {
            BoundaryCondition::DirichletHomogeneous => len / (self.points_per_axis - 1) as f64,
            BoundaryCondition::Periodic | BoundaryCondition::NeumannHomogeneous => len / self.points_per_axis as f64,
        }
    }

    /// Unknowns along one axis.
    pub fn unknowns_per_axis(&self) -> usize {
        match self.bc {
            BoundaryCondition::DirichletHomogeneous => self.points_per_axis.saturating_sub(2),
            _ => self.points_per_axis,
        }
    }

    pub fn n_unknowns(&self) -> usize {
        self.unknowns_per_axis().pow(self.dim as u32)
    }

    /// Coordinate of unknown `i` along `axis`.
    pub fn coord(&self, axis: usize, i: usize) -> f64 {
        let h = self.spacing(axis);
        let lo = self.lower[axis];
        match self.bc {
            BoundaryCondition::DirichletHomogeneous => lo + (i + 1) as f64 * h,
            BoundaryCondition::Periodic => lo + i as f64 * h,
            BoundaryCondition::NeumannHomogeneous => lo + (i as f64 + 0.5) * h,
        }
    }

    /// Samples `f` at every unknown (x fastest).
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let m = self.unknowns_per_axis();
        if self.dim == 1 {
            (0..m).map(|i| f(self.coord(0, i), 0.0)).collect()
        } else {
            let mut out = Vec::with_capacity(m * m);
            for j in 0..m {
                let y = self.coord(1, j);
                for i in 0..m {
                    out.push(f(self.coord(0, i), y));
                }
            }
            out
        }
    }
}

/// Second-order Laplacian `(1, -2, 1)/h^2` on the interior nodes of a 1D
/// Dirichlet grid.
pub fn build_laplacian_1d_dirichlet(g: &GridSpec) -> Result<CsrMatrix, ArgumentError> {
    if g.dim != 1 || g.bc != BoundaryCondition::DirichletHomogeneous {
        return Err(ArgumentError::UnsupportedGrid(
            "1D Dirichlet Laplacian needs a 1D Dirichlet grid".into(),
        ));
    }
    if g.points_per_axis < 3 {
        return Err(ArgumentError::GridTooSmall {
            min: 3,
            got: g.points_per_axis,
        });
    }
    let n = g.unknowns_per_axis();
    let inv_h2 = 1.0 / g.spacing(0).powi(2);
    let mut trip = Vec::with_capacity(3 * n);
    for i in 0..n {
        if i > 0 {
            trip.push((i, i - 1, inv_h2));
        }
        trip.push((i, i, -2.0 * inv_h2));
        if i + 1 < n {
            trip.push((i, i + 1, inv_h2));
        }
    }
    CsrMatrix::from_triplets(n, n, &trip)
}

/// Five-point Laplacian on a periodic or Neumann square grid.
///
/// Periodic neighbours wrap around. Neumann neighbours outside the domain are
/// mirrored onto the boundary cell itself, which drops that coupling and keeps
/// the matrix symmetric with zero row sums.
pub fn build_laplacian_2d(g: &GridSpec) -> Result<CsrMatrix, ArgumentError> {
    if g.dim != 2 || g.bc == BoundaryCondition::DirichletHomogeneous {
        return Err(ArgumentError::UnsupportedGrid(
            "2D Laplacian needs a periodic or Neumann 2D grid".into(),
        ));
    }
    if g.points_per_axis < 3 {
        return Err(ArgumentError::GridTooSmall {
            min: 3,
            got: g.points_per_axis,
        });
    }
    let m = g.points_per_axis;
    let (cx, cy) = (1.0 / g.spacing(0).powi(2), 1.0 / g.spacing(1).powi(2));
    let periodic = g.bc == BoundaryCondition::Periodic;
    let idx = |i: usize, j: usize| i + j * m;
    let mut trip = Vec::with_capacity(5 * m * m);
    for j in 0..m {
        for i in 0..m {
            let row = idx(i, j);
            let mut diag = 0.0;
            let mut couple = |ni: Option<usize>, nj: Option<usize>, c: f64, trip: &mut Vec<_>| {
                // a mirrored ghost equals the cell itself: no net flux
                if let (Some(a), Some(b)) = (ni, nj) {
                    trip.push((row, idx(a, b), c));
                    diag -= c;
                }
            };
            let wrap = |k: usize, d: isize| -> Option<usize> {
                let t = k as isize + d;
                if (0..m as isize).contains(&t) {
                    Some(t as usize)
                } else if periodic {
                    Some(t.rem_euclid(m as isize) as usize)
                } else {
                    None
                }
            };
            couple(wrap(i, -1), Some(j), cx, &mut trip);
            couple(wrap(i, 1), Some(j), cx, &mut trip);
            couple(Some(i), wrap(j, -1), cy, &mut trip);
            couple(Some(i), wrap(j, 1), cy, &mut trip);
            trip.push((row, row, diag));
        }
    }
    CsrMatrix::from_triplets(m * m, m * m, &trip)
}
