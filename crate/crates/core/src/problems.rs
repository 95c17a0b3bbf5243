//! Test systems in split form `u' = Lu + N(t, u)`.
//!
//! * [`make_semilinear_parabolic`]: 1D heat equation with a nonlocal
//!   integral term and a manufactured source, exact solution
//!   `u(x, t) = x(1−x)eᵗ`.
//! * [`make_allen_cahn`]: 2D Allen-Cahn on the periodic square
//!   `[−0.5, 0.5]²` with a circular initial interface.
//! * [`make_schnakenberg`]: 2D two-species Schnakenberg kinetics with
//!   Neumann boundaries on `[0, 1]²`, started near equilibrium.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::ArgumentError;
use crate::krylov::GmresConfig;
use crate::sparse::{
    build_laplacian_1d_dirichlet, build_laplacian_2d, max_norm, BoundaryCondition, CsrMatrix, GridSpec,
};

pub type NonlinearFn = dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync;
pub type JacobianActionFn = dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync;
pub type ExactFn = dyn Fn(f64) -> Vec<f64> + Send + Sync;

/// One problem instance: the stiff linear operator `L`, the remainder
/// `N(t, u)`, its Jacobian action `N'(u)v`, and an initial state.
#[derive(Clone)]
pub struct SplitSystem {
    label: String,
    linear: CsrMatrix,
    nonlinear: Arc<NonlinearFn>,
    jacobian_action: Arc<JacobianActionFn>,
    exact: Option<Arc<ExactFn>>,
    grid: Option<GridSpec>,
    initial: Vec<f64>,
}

impl fmt::Debug for SplitSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SplitSystem")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("nnz", &self.linear.nnz())
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl SplitSystem {
    /// Builds a system from its parts. `initial` fixes the state dimension.
    pub fn new(
        label: impl Into<String>,
        linear: CsrMatrix,
        nonlinear: impl Fn(f64, &[f64], &mut [f64]) + Send + Sync + 'static,
        jacobian_action: impl Fn(&[f64], &[f64], &mut [f64]) + Send + Sync + 'static,
        initial: Vec<f64>,
    ) -> Result<Self, ArgumentError> {
        if !linear.is_square() {
            return Err(ArgumentError::NotSquare {
                rows: linear.n_rows(),
                cols: linear.n_cols(),
            });
        }
        if linear.n_rows() != initial.len() {
            return Err(ArgumentError::DimensionMismatch {
                what: "initial state",
                expected: linear.n_rows(),
                got: initial.len(),
            });
        }
        Ok(Self {
            label: label.into(),
            linear,
            nonlinear: Arc::new(nonlinear),
            jacobian_action: Arc::new(jacobian_action),
            exact: None,
            grid: None,
            initial,
        })
    }

    pub fn with_exact(mut self, exact: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.exact = Some(Arc::new(exact));
        self
    }

    pub fn with_grid(mut self, grid: GridSpec) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.initial.len()
    }

    pub fn linear(&self) -> &CsrMatrix {
        &self.linear
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn initial_state(&self) -> &[f64] {
        &self.initial
    }

    pub fn has_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn exact(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|f| f(t))
    }

    /// `N(t, u)` into `out`.
    pub fn nonlinear_into(&self, t: f64, u: &[f64], out: &mut [f64]) {
        (self.nonlinear)(t, u, out)
    }

    pub fn nonlinear(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.nonlinear_into(t, u, &mut out);
        out
    }

    /// `N'(u) v` into `out`.
    pub fn jacobian_action_into(&self, u: &[f64], v: &[f64], out: &mut [f64]) {
        (self.jacobian_action)(u, v, out)
    }

    pub fn jacobian_action(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.jacobian_action_into(u, v, &mut out);
        out
    }

    /// Full right-hand side `Lu + N(t, u)`.
    pub fn rhs(&self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut f = self.nonlinear(t, u);
        let lu = self.linear.spmv(u).expect("state dimension");
        for (fi, li) in f.iter_mut().zip(&lu) {
            *fi += li;
        }
        f
    }
}

/// Result of a finite-difference check of `N'(u)v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JacobianCheck {
    /// `‖(N(u+δv) − N(u))/δ − N'(u)v‖∞` at `δ`.
    pub err: f64,
    /// Same at `δ/2`.
    pub err_half: f64,
    /// Rounding level of the difference quotient at `δ/2`.
    pub floor: f64,
}

impl JacobianCheck {
    pub fn ratio(&self) -> f64 {
        self.err / self.err_half
    }

    /// First-order convergence of the difference quotient, or agreement to
    /// rounding when `N` is affine in `u`.
    pub fn passes(&self) -> bool {
        let r = self.ratio();
        (1.7..=2.3).contains(&r) || (self.err <= self.floor && self.err_half <= self.floor)
    }
}

/// Compares `N'(u)v` with one-sided difference quotients at `δ` and `δ/2`
/// (time held at `t`).
pub fn check_jacobian_action(sys: &SplitSystem, t: f64, u: &[f64], v: &[f64], delta: f64) -> JacobianCheck {
    let base = sys.nonlinear(t, u);
    let jv = sys.jacobian_action(u, v);
    let quotient_err = |d: f64| {
        let shifted: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + d * b).collect();
        let np = sys.nonlinear(t, &shifted);
        let err = np
            .iter()
            .zip(&base)
            .zip(&jv)
            .fold(0.0f64, |m, ((p, q), j)| m.max(((p - q) / d - j).abs()));
        (err, max_norm(&np))
    };
    let (err, _) = quotient_err(delta);
    let (err_half, n_half) = quotient_err(0.5 * delta);
    let floor = 1e3 * f64::EPSILON * (max_norm(&base) + n_half) / (0.5 * delta);
    JacobianCheck { err, err_half, floor }
}

/// Composite trapezoid rule over `[0, 1]` for interior samples with zero
/// boundary values.
pub fn trapezoid_interior(u: &[f64], dx: f64) -> f64 {
    dx * u.iter().sum::<f64>()
}

/// 1D semilinear parabolic problem on `N` interior nodes of `[0, 1]`,
/// `t ∈ [0, 1]`:
///
/// `u_t − u_xx = ∫₀¹ u dx + Φ(x, t)`, `Φ = eᵗ(x(1−x) + 2 − 1/6)`.
pub fn make_semilinear_parabolic(n: usize) -> Result<SplitSystem, ArgumentError> {
    if n < 3 {
        return Err(ArgumentError::GridTooSmall { min: 3, got: n });
    }
    let grid = GridSpec::dirichlet_1d(n, 0.0, 1.0);
    let dx = grid.spacing(0);
    let lap = build_laplacian_1d_dirichlet(&grid)?;
    let xs: Arc<Vec<f64>> = Arc::new(grid.sample(|x, _| x));
    let shape: Arc<Vec<f64>> = Arc::new(xs.iter().map(|x| x * (1.0 - x)).collect());

    let source_shape: Vec<f64> = shape.iter().map(|s| s + 2.0 - 1.0 / 6.0).collect();
    let nonlinear = move |t: f64, u: &[f64], out: &mut [f64]| {
        let q = trapezoid_interior(u, dx);
        let et = t.exp();
        for (o, s) in out.iter_mut().zip(&source_shape) {
            *o = q + et * s;
        }
    };
    let jv = move |_u: &[f64], v: &[f64], out: &mut [f64]| {
        let q = trapezoid_interior(v, dx);
        out.iter_mut().for_each(|o| *o = q);
    };
    let initial = shape.to_vec();
    let exact_shape = Arc::clone(&shape);
    Ok(
        SplitSystem::new(format!("parabolic-N{n}"), lap, nonlinear, jv, initial)?
            .with_exact(move |t| exact_shape.iter().map(|s| s * t.exp()).collect())
            .with_grid(grid),
    )
}

/// Allen-Cahn `u_t = Δu − (u³ − u)/ε²` on the periodic square
/// `[−0.5, 0.5]²` with `n` cells per axis and initial data
/// `tanh((R₀ − ‖x‖₂)/(√2 ε))`, `R₀ = 0.4`.
pub fn make_allen_cahn(eps: f64, n: usize) -> Result<SplitSystem, ArgumentError> {
    if !(eps > 0.0) {
        return Err(ArgumentError::InvalidConfig(format!("epsilon must be > 0, got {eps}")));
    }
    if n < 8 {
        return Err(ArgumentError::GridTooSmall { min: 8, got: n });
    }
    const R0: f64 = 0.4;
    let grid = GridSpec::square_2d(n, -0.5, 0.5, BoundaryCondition::Periodic);
    let lap = build_laplacian_2d(&grid)?;
    let inv_eps2 = 1.0 / (eps * eps);
    let initial = grid.sample(|x, y| ((R0 - x.hypot(y)) / (2f64.sqrt() * eps)).tanh());
    let nonlinear = move |_t: f64, u: &[f64], out: &mut [f64]| {
        for (o, &ui) in out.iter_mut().zip(u) {
            *o = -inv_eps2 * (ui * ui * ui - ui);
        }
    };
    let jv = move |u: &[f64], v: &[f64], out: &mut [f64]| {
        for ((o, &ui), &vi) in out.iter_mut().zip(u).zip(v) {
            *o = -inv_eps2 * (3.0 * ui * ui - 1.0) * vi;
        }
    };
    Ok(SplitSystem::new(format!("allencahn-eps{eps}-n{n}"), lap, nonlinear, jv, initial)?.with_grid(grid))
}

/// Schnakenberg parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SchnakenbergParams {
    pub a: f64,
    pub b: f64,
    pub d: f64,
    pub gamma: f64,
    pub n: usize,
    /// Relative amplitude of the initial cosine perturbation.
    pub perturbation: f64,
}

impl SchnakenbergParams {
    pub fn new(gamma: f64, n: usize) -> Self {
        Self {
            a: 0.1,
            b: 0.9,
            d: 10.0,
            gamma,
            n,
            perturbation: 1e-3,
        }
    }

    /// Homogeneous steady state `(a + b, b/(a + b)²)`.
    pub fn equilibrium(&self) -> (f64, f64) {
        let s = self.a + self.b;
        (s, self.b / (s * s))
    }
}

/// Schnakenberg system with the default parameters `a = 0.1`, `b = 0.9`,
/// `d = 10`.
pub fn make_schnakenberg(gamma: f64, n: usize) -> Result<SplitSystem, ArgumentError> {
    make_schnakenberg_with(&SchnakenbergParams::new(gamma, n))
}

/// Schnakenberg kinetics on `[0, 1]²` with Neumann boundaries:
///
/// ```text
/// u_t = γ(a − u + u²v) + Δu
/// v_t = γ(b − u²v)     + dΔv
/// ```
///
/// The state stacks `(u, v)`. `L = diag(Δ, dΔ)` holds only diffusion; all
/// reaction terms, including the linear `−γu`, live in `N`.
pub fn make_schnakenberg_with(p: &SchnakenbergParams) -> Result<SplitSystem, ArgumentError> {
    if !(p.gamma > 0.0) || !(p.d > 0.0) || !(p.a > 0.0) || !(p.b > 0.0) {
        return Err(ArgumentError::InvalidConfig(
            "Schnakenberg parameters must be positive".into(),
        ));
    }
    if p.n < 8 {
        return Err(ArgumentError::GridTooSmall { min: 8, got: p.n });
    }
    let grid = GridSpec::square_2d(p.n, 0.0, 1.0, BoundaryCondition::NeumannHomogeneous);
    let lap = build_laplacian_2d(&grid)?;
    let linear = CsrMatrix::block_diagonal(&[&lap, &lap.scaled(p.d)]);
    let m = grid.n_unknowns();

    let (ubar, vbar) = p.equilibrium();
    let amp = p.perturbation;
    let bump = grid.sample(|x, y| {
        (1..=8)
            .map(|j| {
                let jf = j as f64;
                (2.0 * PI * jf * x).cos() * (2.0 * PI * jf * y).cos() / jf
            })
            .sum::<f64>()
    });
    let mut initial: Vec<f64> = bump.iter().map(|s| ubar * (1.0 + amp * s)).collect();
    initial.extend(bump.iter().map(|s| vbar * (1.0 + amp * s)));

    let (a, b, gamma) = (p.a, p.b, p.gamma);
    let nonlinear = move |_t: f64, w: &[f64], out: &mut [f64]| {
        let (u, v) = w.split_at(m);
        let (ou, ov) = out.split_at_mut(m);
        for i in 0..m {
            let u2v = u[i] * u[i] * v[i];
            ou[i] = gamma * (a - u[i] + u2v);
            ov[i] = gamma * (b - u2v);
        }
    };
    let jv = move |w: &[f64], dw: &[f64], out: &mut [f64]| {
        let (u, v) = w.split_at(m);
        let (du, dv) = dw.split_at(m);
        let (ou, ov) = out.split_at_mut(m);
        for i in 0..m {
            let uv2 = 2.0 * u[i] * v[i];
            let uu = u[i] * u[i];
            ou[i] = gamma * ((-1.0 + uv2) * du[i] + uu * dv[i]);
            ov[i] = gamma * (-uv2 * du[i] - uu * dv[i]);
        }
    };
    Ok(SplitSystem::new(
        format!("schnakenberg-gamma{}-n{}", p.gamma, p.n),
        linear,
        nonlinear,
        jv,
        initial,
    )?
    .with_grid(grid))
}

/// Which benchmark problem a study runs.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Parabolic { n: usize },
    AllenCahn { eps: f64, n: usize },
    Schnakenberg { gamma: f64, n: usize },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<SplitSystem, ArgumentError> {
        match *self {
            ProblemSpec::Parabolic { n } => make_semilinear_parabolic(n),
            ProblemSpec::AllenCahn { eps, n } => make_allen_cahn(eps, n),
            ProblemSpec::Schnakenberg { gamma, n } => make_schnakenberg(gamma, n),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ProblemSpec::Parabolic { .. } => "parabolic",
            ProblemSpec::AllenCahn { .. } => "allencahn",
            ProblemSpec::Schnakenberg { .. } => "schnakenberg",
        }
    }

    /// Grid points per axis (interior nodes for the parabolic problem).
    pub fn grid(&self) -> usize {
        match *self {
            ProblemSpec::Parabolic { n } | ProblemSpec::AllenCahn { n, .. } | ProblemSpec::Schnakenberg { n, .. } => n,
        }
    }

    /// The problem's stiffness parameter: `ε` or `γ`; none for parabolic.
    pub fn param(&self) -> Option<f64> {
        match *self {
            ProblemSpec::Parabolic { .. } => None,
            ProblemSpec::AllenCahn { eps, .. } => Some(eps),
            ProblemSpec::Schnakenberg { gamma, .. } => Some(gamma),
        }
    }

    /// Default integration horizon.
    pub fn default_t_end(&self) -> f64 {
        match self {
            ProblemSpec::Parabolic { .. } => 1.0,
            ProblemSpec::AllenCahn { .. } => 0.075,
            ProblemSpec::Schnakenberg { .. } => 0.1,
        }
    }

    /// GMRES settings used for this problem: restart 20 for Schnakenberg,
    /// otherwise 10; at most 500 iterations per solve.
    pub fn gmres_config(&self) -> GmresConfig {
        let restart = match self {
            ProblemSpec::Schnakenberg { .. } => 20,
            _ => 10,
        };
        GmresConfig {
            restart,
            max_iters: 500,
            ..GmresConfig::default()
        }
    }
}
