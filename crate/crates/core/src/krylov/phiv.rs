//! Adaptive Krylov evaluation of `φₖ(τA) v`.
//!
//! With `B = τA`, the function `w(θ) = θᵏ φₖ(θB) v` solves
//! `w' = B w + θ^{k−1}/(k−1)! v`, `w(0) = 0` (for `k = 0`: `w' = Bw`,
//! `w(0) = v`), and `w(1) = φₖ(B) v`. The interval `[0, 1]` is covered by
//! substeps; each substep of length `σ` is an exact exponential of the
//! `(n+k)`-dimensional augmented operator
//!
//! ```text
//! Ã = [[B, ηW], [0, J]],   W = [b_k, …, b_1],   b_j = θ^{k−j}/(k−j)! v
//! ```
//!
//! applied to `[w(θ); e_k/η]`, approximated in a Krylov space whose size
//! grows until the generalized residual estimate
//! `β h_{m+1,m} σ |e_mᵀ φ₁(σH_m) e₁|` meets the substep's share of the
//! tolerance. If the basis cap is reached the substep is halved, reusing the
//! basis since it does not depend on `σ`.

use super::{Arnoldi, LinearOperator};
use crate::error::{ArgumentError, ConvergenceError, SolverError};
use crate::phi::{expm, DenseMatrix, PhiOrder};
use crate::sparse::norm2;

/// Tolerances and limits of [`phi_times_vector`].
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovConfig {
    /// Target absolute error relative to `‖v‖₂`.
    pub tol: f64,
    /// Largest Krylov basis per substep.
    pub max_basis: usize,
    /// Largest number of substeps per evaluation.
    pub max_substeps: usize,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_basis: 100,
            max_substeps: 64,
        }
    }
}

impl KrylovConfig {
    pub fn validate(&self) -> Result<(), ArgumentError> {
        if !(self.tol > 0.0) {
            return Err(ArgumentError::InvalidConfig("krylov tol must be > 0".into()));
        }
        if self.max_basis < 2 {
            return Err(ArgumentError::InvalidConfig("krylov max_basis must be >= 2".into()));
        }
        if self.max_substeps == 0 {
            return Err(ArgumentError::InvalidConfig("krylov max_substeps must be >= 1".into()));
        }
        Ok(())
    }
}

/// Result and work statistics of one φ·v evaluation.
///
/// `total_matvecs` counts applications of the user operator and equals the
/// sum of `basis_sizes`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovOutcome {
    pub result: Vec<f64>,
    pub basis_sizes: Vec<usize>,
    pub total_matvecs: u64,
    pub converged: bool,
}

/// Basis sizes at which the error estimate is evaluated.
fn checkpoints(max_basis: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut m = 1usize;
    while m < max_basis {
        out.push(m);
        m = if m < 6 { m + 1 } else { m + (m / 6).max(1) };
    }
    out.push(max_basis);
    out
}

struct Augmented<'a> {
    a: &'a dyn LinearOperator,
    tau: f64,
    // columns of ηW, i.e. η b_k, …, η b_1
    w_cols: Vec<Vec<f64>>,
}

impl LinearOperator for Augmented<'_> {
    fn dim(&self) -> usize {
        self.a.dim() + self.w_cols.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.a.dim();
        let p = self.w_cols.len();
        let (xt, xz) = x.split_at(n);
        let (yt, yz) = y.split_at_mut(n);
        self.a.apply(xt, yt);
        for v in yt.iter_mut() {
            *v *= self.tau;
        }
        for (c, col) in self.w_cols.iter().enumerate() {
            let zc = xz[c];
            if zc != 0.0 {
                for (o, wi) in yt.iter_mut().zip(col) {
                    *o += zc * wi;
                }
            }
        }
        for c in 0..p {
            yz[c] = if c + 1 < p { xz[c + 1] } else { 0.0 };
        }
    }
}

/// Returns `(exp(σH)e₁, φ₁(σH)e₁)` for the leading `m x m` Hessenberg block.
fn small_exp(arn: &Arnoldi<'_>, m: usize, sigma: f64) -> (Vec<f64>, Vec<f64>) {
    let h = arn.hessenberg(m);
    let mut aug = DenseMatrix::zeros(m + 1);
    for i in 0..m {
        for j in 0..m {
            aug[(i, j)] = sigma * h[(i, j)];
        }
    }
    aug[(0, m)] = 1.0;
    let e = expm(&aug);
    let col0 = (0..m).map(|i| e[(i, 0)]).collect();
    let col_phi = (0..m).map(|i| e[(i, m)]).collect();
    (col0, col_phi)
}

/// Approximates `φₖ(τA) v` with estimated error at most `cfg.tol · ‖v‖₂`.
pub fn phi_times_vector(
    a: &dyn LinearOperator,
    k: PhiOrder,
    v: &[f64],
    tau: f64,
    cfg: &KrylovConfig,
) -> Result<KrylovOutcome, SolverError> {
    cfg.validate()?;
    let n = a.dim();
    if v.len() != n {
        return Err(ArgumentError::DimensionMismatch {
            what: "phi_times_vector",
            expected: n,
            got: v.len(),
        }
        .into());
    }
    if !tau.is_finite() {
        return Err(ArgumentError::InvalidConfig("tau must be finite".into()).into());
    }
    let k = k.get();
    let v_norm = norm2(v);
    if !v_norm.is_finite() {
        return Err(ArgumentError::InvalidConfig("phi_times_vector input is not finite".into()).into());
    }
    if v_norm == 0.0 || tau == 0.0 {
        // φₖ(0) = I/k!
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        return Ok(KrylovOutcome {
            result: v.iter().map(|x| x / fact).collect(),
            basis_sizes: Vec::new(),
            total_matvecs: 0,
            converged: true,
        });
    }

    let eta = 1.0 / v_norm;
    let marks = checkpoints(cfg.max_basis);
    let mut w = if k == 0 { v.to_vec() } else { vec![0.0; n] };
    let mut theta = 0.0f64;
    let mut sigma = 1.0f64;
    let mut basis_sizes = Vec::new();
    let mut matvecs = 0u64;

    while theta < 1.0 {
        if basis_sizes.len() >= cfg.max_substeps {
            return Err(ConvergenceError {
                solver: "phi_times_vector",
                iterations: basis_sizes.len(),
                residual: 1.0 - theta,
                best: w,
            }
            .into());
        }
        sigma = sigma.min(1.0 - theta);

        let w_cols: Vec<Vec<f64>> = (0..k)
            .map(|c| {
                let j = k - c;
                let coeff = eta * theta.powi((k - j) as i32) / (1..=(k - j)).map(|i| i as f64).product::<f64>();
                v.iter().map(|x| coeff * x).collect()
            })
            .collect();
        let op = Augmented { a, tau, w_cols };
        let mut start = w.clone();
        if k > 0 {
            start.resize(n + k, 0.0);
            start[n + k - 1] = 1.0 / eta;
        }
        let mut arn = Arnoldi::new(&op, &start)?;
        let beta = arn.beta();

        let mut accepted: Option<(usize, Vec<f64>)> = None;
        let mut halved = false;
        for &m in &marks {
            while arn.steps() < m && arn.step() {}
            let steps = arn.steps();
            if arn.breakdown() {
                // the space is invariant: exact for any substep length
                sigma = 1.0 - theta;
                let (e1, _) = small_exp(&arn, steps, sigma);
                accepted = Some((steps, e1));
                break;
            }
            let budget = cfg.tol * v_norm * sigma;
            let (e1, phi1) = small_exp(&arn, steps, sigma);
            let est = beta * arn.h(steps, steps - 1) * sigma * phi1[steps - 1].abs();
            if est <= budget {
                accepted = Some((steps, e1));
                break;
            }
            if steps == cfg.max_basis {
                // shrink the substep on the full basis
                let mut s = sigma;
                for _ in 0..60 {
                    s *= 0.5;
                    let (e1, phi1) = small_exp(&arn, steps, s);
                    let est = beta * arn.h(steps, steps - 1) * s * phi1[steps - 1].abs();
                    if est <= cfg.tol * v_norm * s {
                        sigma = s;
                        halved = true;
                        accepted = Some((steps, e1));
                        break;
                    }
                }
                break;
            }
        }

        let steps = arn.steps();
        matvecs += steps as u64;
        basis_sizes.push(steps);
        let Some((m, e1)) = accepted else {
            return Err(ConvergenceError {
                solver: "phi_times_vector",
                iterations: basis_sizes.len(),
                residual: 1.0 - theta,
                best: w,
            }
            .into());
        };
        let coeffs: Vec<f64> = e1.iter().map(|c| beta * c).collect();
        let next = arn.combine(&coeffs[..m]);
        w.copy_from_slice(&next[..n]);
        theta += sigma;
        if 1.0 - theta < 1e-14 {
            theta = 1.0;
        }
        if !halved && m < cfg.max_basis / 2 {
            sigma *= 2.0;
        }
    }

    Ok(KrylovOutcome {
        result: w,
        basis_sizes,
        total_matvecs: matvecs,
        converged: true,
    })
}
