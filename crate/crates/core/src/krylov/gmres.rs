use super::{IcFactor, LinearOperator};
use crate::error::{ArgumentError, ConvergenceError, SolverError};
use crate::sparse::norm2;

/// How an IC factor `M = LLᵀ` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecondSide {
    /// Solve `M⁻¹A x = M⁻¹b`.
    #[default]
    Left,
    /// Solve `L⁻¹AL⁻ᵀ y = L⁻¹b`, `x = L⁻ᵀy`; keeps SPD systems symmetric.
    Split,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresConfig {
    /// Relative tolerance on the true residual, `‖b − Ax‖ ≤ tol‖b‖`.
    pub tol: f64,
    /// Krylov cycle length.
    pub restart: usize,
    /// Cap on the total number of inner iterations.
    pub max_iters: usize,
    pub side: PrecondSide,
}

impl Default for GmresConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            restart: 10,
            max_iters: 500,
            side: PrecondSide::Left,
        }
    }
}

impl GmresConfig {
    pub fn validate(&self) -> Result<(), ArgumentError> {
        if !(self.tol > 0.0) {
            return Err(ArgumentError::InvalidConfig("gmres tol must be > 0".into()));
        }
        if self.restart == 0 {
            return Err(ArgumentError::InvalidConfig("gmres restart must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    /// Inner iterations, one operator application each.
    pub iterations: usize,
    /// Final relative true residual.
    pub residual: f64,
    pub converged: bool,
}

enum Precond<'a> {
    None,
    Left(&'a IcFactor),
    Split(&'a IcFactor),
}

impl Precond<'_> {
    /// Operator `x ↦ P_l A P_r x` as seen by the Krylov cycle.
    fn apply(&self, a: &dyn LinearOperator, x: &[f64], y: &mut [f64], tmp: &mut [f64]) {
        match self {
            Precond::None => a.apply(x, y),
            Precond::Left(f) => {
                a.apply(x, tmp);
                y.copy_from_slice(&f.apply(tmp));
            }
            Precond::Split(f) => {
                let z = f.solve_upper(x);
                a.apply(&z, tmp);
                y.copy_from_slice(&f.solve_lower(tmp));
            }
        }
    }

    /// Maps a true residual to the cycle's starting vector.
    fn residual(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Precond::None => r.to_vec(),
            Precond::Left(f) => f.apply(r),
            Precond::Split(f) => f.solve_lower(r),
        }
    }

    /// Maps a Krylov correction back to the solution space.
    fn correction(&self, y: Vec<f64>) -> Vec<f64> {
        match self {
            Precond::Split(f) => f.solve_upper(&y),
            _ => y,
        }
    }
}

fn true_residual(a: &dyn LinearOperator, b: &[f64], x: &[f64]) -> Vec<f64> {
    let ax = a.apply_vec(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

/// Restarted GMRES for `A x = b` from `x0`, optionally preconditioned by an
/// incomplete Cholesky factor.
///
/// A cycle stops early once its estimated residual has shrunk by the factor
/// the true residual still needs; convergence is always confirmed on the
/// true residual.
///
/// When the operator reports `‖A‖∞`, a residual within rounding of
/// `64 ε (‖A‖∞‖x‖ + ‖b‖)` also counts as converged, since no iterate can do
/// better in floating point.
pub fn gmres_solve(
    a: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    cfg: &GmresConfig,
    precond: Option<&IcFactor>,
) -> Result<GmresOutcome, SolverError> {
    cfg.validate()?;
    let n = a.dim();
    for (what, len) in [("gmres rhs", b.len()), ("gmres initial guess", x0.len())] {
        if len != n {
            return Err(ArgumentError::DimensionMismatch {
                what,
                expected: n,
                got: len,
            }
            .into());
        }
    }
    if let Some(f) = precond {
        if f.dim() != n {
            return Err(ArgumentError::DimensionMismatch {
                what: "gmres preconditioner",
                expected: n,
                got: f.dim(),
            }
            .into());
        }
    }
    let pc = match (precond, cfg.side) {
        (None, _) => Precond::None,
        (Some(f), PrecondSide::Left) => Precond::Left(f),
        (Some(f), PrecondSide::Split) => Precond::Split(f),
    };

    let b_norm = norm2(b);
    let mut x = x0.to_vec();
    if b_norm == 0.0 {
        return Ok(GmresOutcome {
            x: vec![0.0; n],
            iterations: 0,
            residual: 0.0,
            converged: true,
        });
    }
    let target = cfg.tol * b_norm;

    let a_norm = a.norm_inf();
    let attainable = |x: &[f64]| match a_norm {
        Some(an) => target.max(64.0 * f64::EPSILON * (an * norm2(x) + b_norm)),
        None => target,
    };

    let mut r = true_residual(a, b, &x);
    let mut r_norm = norm2(&r);
    let mut iterations = 0usize;
    let mut tmp = vec![0.0; n];
    let m = cfg.restart;

    while r_norm > attainable(&x) {
        if iterations >= cfg.max_iters {
            return Err(ConvergenceError {
                solver: "gmres",
                iterations,
                residual: r_norm / b_norm,
                best: x,
            }
            .into());
        }
        let z0 = pc.residual(&r);
        let beta = norm2(&z0);
        if !beta.is_finite() {
            return Err(ConvergenceError {
                solver: "gmres",
                iterations,
                residual: f64::INFINITY,
                best: x,
            }
            .into());
        }
        let mut basis: Vec<Vec<f64>> = vec![z0.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0usize;
        // ask the cycle for the reduction the true residual still needs, with
        // a factor 2 margin since the two norms differ under preconditioning
        let inner_goal = 0.5 * beta * attainable(&x) / r_norm;
        while k < m && iterations < cfg.max_iters {
            let mut w = vec![0.0; n];
            pc.apply(a, &basis[k], &mut w, &mut tmp);
            iterations += 1;
            let mut col = vec![0.0; k + 2];
            for _pass in 0..2 {
                for (i, q) in basis.iter().enumerate() {
                    let c: f64 = q.iter().zip(&w).map(|(p, s)| p * s).sum();
                    col[i] += c;
                    for (wi, qi) in w.iter_mut().zip(q) {
                        *wi -= c * qi;
                    }
                }
            }
            let hn = norm2(&w);
            col[k + 1] = hn;
            for i in 0..k {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i] * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c, s) = if denom == 0.0 {
                (1.0, 0.0)
            } else {
                (col[k] / denom, col[k + 1] / denom)
            };
            col[k] = c * col[k] + s * col[k + 1];
            col[k + 1] = 0.0;
            cs.push(c);
            sn.push(s);
            g[k + 1] = -s * g[k];
            g[k] *= c;
            h.push(col);
            k += 1;
            let lucky = hn <= 1e-14 * beta;
            if g[k].abs() <= inner_goal || lucky {
                break;
            }
            basis.push(w.iter().map(|v| v / hn).collect());
        }
        // back substitution on the triangularized Hessenberg
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut s = g[i];
            for j in i + 1..k {
                s -= h[j][i] * y[j];
            }
            y[i] = s / h[i][i];
        }
        let mut dx = vec![0.0; n];
        for (yj, q) in y.iter().zip(&basis) {
            for (d, qi) in dx.iter_mut().zip(q) {
                *d += yj * qi;
            }
        }
        let dx = pc.correction(dx);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        r = true_residual(a, b, &x);
        let new_norm = norm2(&r);
        if !(new_norm < r_norm) && new_norm > attainable(&x) {
            // no progress over a full cycle: stagnation
            return Err(ConvergenceError {
                solver: "gmres",
                iterations,
                residual: new_norm / b_norm,
                best: x,
            }
            .into());
        }
        r_norm = new_norm;
    }

    Ok(GmresOutcome {
        x,
        iterations,
        residual: r_norm / b_norm,
        converged: true,
    })
}
