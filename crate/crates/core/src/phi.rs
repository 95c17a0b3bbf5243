//! Dense evaluation of the φ-functions
//!
//! ```text
//! φ₀(z) = eᶻ,   φₖ(z) = ∫₀¹ e^{(1−θ)z} θ^{k−1}/(k−1)! dθ   (k ≥ 1)
//! ```
//!
//! for scalars and for small square matrices. Matrix arguments go through an
//! augmented exponential, so singular matrices need no special handling.

use crate::error::ArgumentError;

/// Highest φ index supported.
pub const MAX_PHI_ORDER: usize = 4;

/// Below this magnitude scalar φₖ uses its Taylor series.
pub const TAYLOR_SWITCH: f64 = 0.5;

/// Default limit on the dimension of dense φ evaluations.
pub const DENSE_CAP: usize = 400;

/// Index `k` of φₖ, bounded by [`MAX_PHI_ORDER`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PhiOrder(usize);

impl PhiOrder {
    pub fn new(k: usize) -> Result<Self, ArgumentError> {
        if k <= MAX_PHI_ORDER {
            Ok(Self(k))
        } else {
            Err(ArgumentError::InvalidConfig(format!(
                "phi order {k} exceeds {MAX_PHI_ORDER}"
            )))
        }
    }

    pub fn get(self) -> usize {
        self.0
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Scalar φₖ(z).
pub fn phi_scalar(k: PhiOrder, z: f64) -> f64 {
    let k = k.get();
    if k == 0 {
        return z.exp();
    }
    if z.abs() < TAYLOR_SWITCH {
        // Σ z^j/(j+k)!; 0.5^j/(j+k)! drops below 1e-17 well before 20 terms
        let mut term = 1.0 / factorial(k);
        let mut sum = term;
        for j in 1..20 {
            term *= z / (j + k) as f64;
            sum += term;
        }
        sum
    } else {
        let mut phi = z.exp();
        for j in 1..=k {
            phi = (phi - 1.0 / factorial(j - 1)) / z;
        }
        phi
    }
}

/// Square row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Wraps row-major data; `data.len()` must be `n * n`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self, ArgumentError> {
        if data.len() != n * n {
            return Err(ArgumentError::DimensionMismatch {
                what: "dense matrix data",
                expected: n * n,
                got: data.len(),
            });
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn matmul(&self, other: &Self) -> Self {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, &a) in row.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[k * n..(k + 1) * n];
                for (o, &b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| self.data[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|v| v * alpha).collect(),
        }
    }

    /// `self + alpha * other`.
    pub fn add_scaled(&self, alpha: f64, other: &Self) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect(),
        }
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.data[i * n + j].abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    /// Top-left `m x m` block.
    pub fn leading(&self, m: usize) -> Self {
        let mut out = Self::zeros(m);
        for i in 0..m {
            for j in 0..m {
                out[(i, j)] = self[(i, j)];
            }
        }
        out
    }

    /// Solves `self * X = rhs` by LU with partial pivoting.
    fn solve(&self, rhs: &Self) -> Self {
        let n = self.n;
        let mut a = self.data.clone();
        let mut x = rhs.data.clone();
        for col in 0..n {
            let piv = (col..n)
                .max_by(|&p, &q| a[p * n + col].abs().total_cmp(&a[q * n + col].abs()))
                .unwrap();
            if piv != col {
                for j in 0..n {
                    a.swap(col * n + j, piv * n + j);
                    x.swap(col * n + j, piv * n + j);
                }
            }
            let d = a[col * n + col];
            for r in col + 1..n {
                let f = a[r * n + col] / d;
                if f == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= f * a[col * n + j];
                }
                for j in 0..n {
                    x[r * n + j] -= f * x[col * n + j];
                }
            }
        }
        for col in (0..n).rev() {
            let d = a[col * n + col];
            for j in 0..n {
                let mut s = x[col * n + j];
                for k in col + 1..n {
                    s -= a[col * n + k] * x[k * n + j];
                }
                x[col * n + j] = s / d;
            }
        }
        Self { n, data: x }
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by scaling and squaring with the degree-13 Padé
/// approximant.
pub fn expm(a: &DenseMatrix) -> DenseMatrix {
    let n = a.dim();
    if n == 0 {
        return DenseMatrix::zeros(0);
    }
    let norm = a.norm1();
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as i32
    } else {
        0
    };
    let a = a.scaled(0.5f64.powi(squarings));
    let b = &PADE13;
    let id = DenseMatrix::identity(n);
    let a2 = a.matmul(&a);
    let a4 = a2.matmul(&a2);
    let a6 = a4.matmul(&a2);

    let u_inner = a6.scaled(b[13]).add_scaled(b[11], &a4).add_scaled(b[9], &a2);
    let u_sum = a6
        .matmul(&u_inner)
        .add_scaled(b[7], &a6)
        .add_scaled(b[5], &a4)
        .add_scaled(b[3], &a2)
        .add_scaled(b[1], &id);
    let u = a.matmul(&u_sum);
    let v_inner = a6.scaled(b[12]).add_scaled(b[10], &a4).add_scaled(b[8], &a2);
    let v = a6
        .matmul(&v_inner)
        .add_scaled(b[6], &a6)
        .add_scaled(b[4], &a4)
        .add_scaled(b[2], &a2)
        .add_scaled(b[0], &id);

    let p = v.add_scaled(1.0, &u);
    let q = v.add_scaled(-1.0, &u);
    let mut r = q.solve(&p);
    for _ in 0..squarings {
        r = r.matmul(&r);
    }
    r
}

fn check_cap(n: usize, cap: usize) -> Result<(), ArgumentError> {
    if n > cap {
        Err(ArgumentError::Capacity { n, cap })
    } else {
        Ok(())
    }
}

/// φₖ(M) as a full matrix.
///
/// Uses the block-Toeplitz augmentation: the top-right block of
/// `exp([[M, I, 0, …], [0, 0, I, …], …])` with `k+1` block rows is φₖ(M).
pub fn phi_matrix(k: PhiOrder, m: &DenseMatrix) -> Result<DenseMatrix, ArgumentError> {
    phi_matrix_capped(k, m, DENSE_CAP)
}

pub fn phi_matrix_capped(k: PhiOrder, m: &DenseMatrix, cap: usize) -> Result<DenseMatrix, ArgumentError> {
    let n = m.dim();
    check_cap(n, cap)?;
    let k = k.get();
    if k == 0 {
        return Ok(expm(m));
    }
    let big = n * (k + 1);
    let mut aug = DenseMatrix::zeros(big);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = m[(i, j)];
        }
    }
    for blk in 0..k {
        for i in 0..n {
            aug[(blk * n + i, (blk + 1) * n + i)] = 1.0;
        }
    }
    let e = expm(&aug);
    let mut out = DenseMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = e[(i, k * n + j)];
        }
    }
    Ok(out)
}

/// `Σⱼ φⱼ(M) bⱼ` for `j = 0..bs.len()` with a single augmented exponential of
/// size `n + p`, where `p = bs.len() - 1`.
pub fn phi_linear_combination(m: &DenseMatrix, bs: &[&[f64]]) -> Result<Vec<f64>, ArgumentError> {
    phi_linear_combination_capped(m, bs, DENSE_CAP)
}

pub fn phi_linear_combination_capped(m: &DenseMatrix, bs: &[&[f64]], cap: usize) -> Result<Vec<f64>, ArgumentError> {
    let n = m.dim();
    check_cap(n, cap)?;
    if bs.is_empty() {
        return Ok(vec![0.0; n]);
    }
    for b in bs {
        if b.len() != n {
            return Err(ArgumentError::DimensionMismatch {
                what: "phi_linear_combination vector",
                expected: n,
                got: b.len(),
            });
        }
    }
    let p = bs.len() - 1;
    if p > MAX_PHI_ORDER {
        return Err(ArgumentError::InvalidConfig(format!(
            "phi order {p} exceeds {MAX_PHI_ORDER}"
        )));
    }
    let mut aug = DenseMatrix::zeros(n + p);
    for i in 0..n {
        for j in 0..n {
            aug[(i, j)] = m[(i, j)];
        }
    }
    // columns n..n+p hold b_p, …, b_1; the trailing block is a shift
    for c in 0..p {
        let b = bs[p - c];
        for i in 0..n {
            aug[(i, n + c)] = b[i];
        }
        if c + 1 < p {
            aug[(n + c, n + c + 1)] = 1.0;
        }
    }
    let e = expm(&aug);
    let mut start = bs[0].to_vec();
    start.resize(n + p, 0.0);
    if p > 0 {
        start[n + p - 1] = 1.0;
    }
    let full = e.matvec(&start);
    Ok(full[..n].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ord(k: usize) -> PhiOrder {
        PhiOrder::new(k).unwrap()
    }

    #[test]
    fn scalar_values() {
        assert_eq!(phi_scalar(ord(0), 0.0), 1.0);
        assert_eq!(phi_scalar(ord(2), 0.0), 0.5);
        assert!((phi_scalar(ord(1), 1.0) - (std::f64::consts::E - 1.0)).abs() < 1e-15);
        assert!(PhiOrder::new(5).is_err());
    }

    #[test]
    fn scalar_branches_agree_at_switch() {
        for k in 1..=4 {
            let below = phi_scalar(ord(k), TAYLOR_SWITCH * (1.0 - 1e-12));
            let above = phi_scalar(ord(k), TAYLOR_SWITCH);
            assert!((below - above).abs() < 1e-12 * above.abs(), "k={k}");
            let below = phi_scalar(ord(k), -TAYLOR_SWITCH * (1.0 - 1e-12));
            let above = phi_scalar(ord(k), -TAYLOR_SWITCH);
            assert!((below - above).abs() < 1e-12 * above.abs(), "k={k}");
        }
    }

    #[test]
    fn matrix_trivial_cases() {
        let p1 = phi_matrix(ord(1), &DenseMatrix::zeros(3)).unwrap();
        assert!(p1.max_abs_diff(&DenseMatrix::identity(3)) < 1e-15);
        let ln2 = std::f64::consts::LN_2;
        let e = phi_matrix(ord(0), &DenseMatrix::from_diagonal(&[ln2, ln2])).unwrap();
        assert!(e.max_abs_diff(&DenseMatrix::from_diagonal(&[2.0, 2.0])) < 1e-14);
    }

    #[test]
    fn combination_trivial_cases() {
        let z = DenseMatrix::zeros(2);
        let r = phi_linear_combination(&z, &[&[0.0, 0.0], &[0.0, 0.0], &[2.0, 0.0]]).unwrap();
        assert!((r[0] - 1.0).abs() < 1e-15 && r[1].abs() < 1e-15);
        let m = DenseMatrix::from_diagonal(&[1.0, -1.0]);
        let r = phi_linear_combination(&m, &[&[1.0, 1.0]]).unwrap();
        assert!((r[0] - 1f64.exp()).abs() < 1e-14);
        assert!((r[1] - (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_matches_scalar() {
        let d = [-3.0, -0.1, 0.0, 0.2, 2.0];
        let m = DenseMatrix::from_diagonal(&d);
        for k in 0..=4 {
            let p = phi_matrix(ord(k), &m).unwrap();
            for (i, &z) in d.iter().enumerate() {
                let s = phi_scalar(ord(k), z);
                assert!((p[(i, i)] - s).abs() < 1e-13 * s.abs().max(1.0), "k={k} z={z}");
            }
        }
    }

    #[test]
    fn cap_enforced() {
        let m = DenseMatrix::zeros(5);
        assert!(matches!(
            phi_matrix_capped(ord(1), &m, 4),
            Err(ArgumentError::Capacity { n: 5, cap: 4 })
        ));
        assert!(phi_linear_combination_capped(&m, &[&[0.0; 5]], 4).is_err());
        assert!(phi_linear_combination(&m, &[&[0.0; 4]]).is_err());
    }

    #[test]
    fn expm_large_norm_scalar() {
        let e = expm(&DenseMatrix::from_diagonal(&[-200.0, 30.0]));
        assert!((e[(0, 0)] - (-200f64).exp()).abs() < 1e-100);
        assert!((e[(1, 1)] / 30f64.exp() - 1.0).abs() < 1e-12);
    }
}
