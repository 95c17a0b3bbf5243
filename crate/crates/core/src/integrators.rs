//! Constant-step time integrators for `u' = Lu + N(t, u)`.
//!
//! | kind        | update                                                        |
//! |-------------|---------------------------------------------------------------|
//! | `ImExpRK1`  | `u₊ = u + h(I − hL)⁻¹F(u)`                                    |
//! | `ImExpRK2`  | `u₊ = u + h w + 2hφ₂(hL)D`                                    |
//! | `HImExp2J`  | `u₊ = u + h w + 2hφ₂(hJₙ)D`, `Jₙ = L + N'(uₙ)`                |
//! | `HImExp2N`  | `u₊ = u + h w + 2hφ₂(hN'(uₙ))D`                               |
//! | `2-sBDF`    | `(3I − 2hL)u₊ = 4u − u₋ + 2h(2N(u) − N(u₋))`                  |
//!
//! For the second-order exponential family `w = (I − ½hL)⁻¹F(uₙ)` is solved
//! once and shared by the stage `U = u + ½hw` and the update, and
//! `D = N(tₙ + h/2, U) − N(tₙ, uₙ)`.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use log::warn;

use crate::error::{ArgumentError, IntegrateError, SolverError};
use crate::krylov::{
    gmres_solve, ichol_zero_fill, phi_times_vector, Counted, FnOperator, GmresConfig, IcFactor, KrylovConfig,
};
use crate::phi::PhiOrder;
use crate::problems::SplitSystem;
use crate::sparse::{all_finite, max_norm, shift_identity, CsrMatrix};

/// States whose max-norm exceeds this are treated as blown up.
pub const BLOW_UP_THRESHOLD: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IntegratorKind {
    ImExpRk1,
    ImExpRk2,
    HImExp2J,
    HImExp2N,
    Sbdf2,
}

impl IntegratorKind {
    pub const ALL: [IntegratorKind; 5] = [
        IntegratorKind::ImExpRk1,
        IntegratorKind::ImExpRk2,
        IntegratorKind::HImExp2J,
        IntegratorKind::HImExp2N,
        IntegratorKind::Sbdf2,
    ];

    /// The four second-order methods.
    pub const SECOND_ORDER: [IntegratorKind; 4] = [
        IntegratorKind::ImExpRk2,
        IntegratorKind::HImExp2J,
        IntegratorKind::HImExp2N,
        IntegratorKind::Sbdf2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IntegratorKind::ImExpRk1 => "ImExpRK1",
            IntegratorKind::ImExpRk2 => "ImExpRK2",
            IntegratorKind::HImExp2J => "HImExp2J",
            IntegratorKind::HImExp2N => "HImExp2N",
            IntegratorKind::Sbdf2 => "2-sBDF",
        }
    }

    pub fn order(self) -> u32 {
        match self {
            IntegratorKind::ImExpRk1 => 1,
            _ => 2,
        }
    }
}

impl fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

impl FromStr for IntegratorKind {
    type Err = ArgumentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key: String = s
            .chars()
            .filter(|c| c.is_ascii_alphanumeric())
            .collect::<String>()
            .to_ascii_lowercase();
        match key.as_str() {
            "imexprk1" | "rk1" => Ok(IntegratorKind::ImExpRk1),
            "imexprk2" | "rk2" => Ok(IntegratorKind::ImExpRk2),
            "himexp2j" => Ok(IntegratorKind::HImExp2J),
            "himexp2n" => Ok(IntegratorKind::HImExp2N),
            "2sbdf" | "sbdf2" | "sbdf" => Ok(IntegratorKind::Sbdf2),
            _ => Err(ArgumentError::InvalidConfig(format!("unknown method '{s}'"))),
        }
    }
}

impl serde::Serialize for IntegratorKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> serde::Deserialize<'de> for IntegratorKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// How 2-sBDF obtains its second starting value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SbdfStartup {
    /// One ImExpRK2 step.
    #[default]
    ImExpRk2,
    /// One IMEX-Euler (ImExpRK1) step.
    ImexEuler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub kind: IntegratorKind,
    pub h: f64,
    pub t0: f64,
    pub t_end: f64,
    pub gmres: GmresConfig,
    pub krylov: KrylovConfig,
    pub use_preconditioner: bool,
    pub sbdf_startup: SbdfStartup,
}

impl IntegratorConfig {
    pub fn new(kind: IntegratorKind, h: f64, t0: f64, t_end: f64) -> Self {
        Self {
            kind,
            h,
            t0,
            t_end,
            gmres: GmresConfig::default(),
            krylov: KrylovConfig::default(),
            use_preconditioner: true,
            sbdf_startup: SbdfStartup::default(),
        }
    }

    /// Number of constant steps covering `[t0, t_end]`.
    pub fn n_steps(&self) -> Result<usize, ArgumentError> {
        if !(self.h > 0.0) || !self.h.is_finite() {
            return Err(ArgumentError::InvalidConfig(format!(
                "step size must be > 0, got {}",
                self.h
            )));
        }
        let span = self.t_end - self.t0;
        if span < 0.0 {
            return Err(ArgumentError::InvalidConfig("t_end precedes t0".into()));
        }
        let steps = (span / self.h).round();
        if (steps * self.h - span).abs() > 1e-9 * span.max(self.h) {
            return Err(ArgumentError::InvalidConfig(format!(
                "interval {span} is not a whole number of steps of {}",
                self.h
            )));
        }
        Ok(steps as usize)
    }

    pub fn validate(&self) -> Result<(), ArgumentError> {
        self.n_steps()?;
        self.gmres.validate()?;
        self.krylov.validate()
    }
}

/// Machine-independent work counters of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunStats {
    pub steps: u64,
    /// Sparse matrix-vector products with `L` or a shifted `L`.
    pub spmv_count: u64,
    pub gmres_iters_total: u64,
    pub krylov_matvecs_total: u64,
    /// Evaluations of `N`.
    pub n_evals: u64,
    /// Evaluations of `N'(u)v`.
    pub jv_evals: u64,
    pub wall_time: f64,
}

impl RunStats {
    /// Counters with the wall time cleared, for determinism checks.
    pub fn counters(&self) -> [u64; 6] {
        [
            self.steps,
            self.spmv_count,
            self.gmres_iters_total,
            self.krylov_matvecs_total,
            self.n_evals,
            self.jv_evals,
        ]
    }

    /// Total operator work `spmv + GMRES iterations + Krylov matvecs`.
    pub fn total_work(&self) -> u64 {
        self.spmv_count + self.gmres_iters_total + self.krylov_matvecs_total
    }
}

/// State entering a step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepContext {
    pub u: Vec<f64>,
    pub t: f64,
    /// Previous state and time, needed by 2-sBDF.
    pub prev: Option<(Vec<f64>, f64)>,
}

impl StepContext {
    pub fn new(u: Vec<f64>, t: f64) -> Self {
        Self { u, t, prev: None }
    }
}

/// Pieces of one second-order exponential step.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpStepParts {
    /// `U = uₙ + ½h w`.
    pub stage: Vec<f64>,
    /// `h w`, the shared linear increment.
    pub linear_increment: Vec<f64>,
    /// `2hφ₂(h·op)D`.
    pub phi_term: Vec<f64>,
    pub next: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Shift {
    /// `I − hL`
    Full,
    /// `I − ½hL`
    Half,
    /// `3I − 2hL`
    Bdf,
}

struct ShiftedSystem {
    matrix: CsrMatrix,
    factor: Option<IcFactor>,
}

/// Stateful single-run stepping engine: owns the shifted matrices, their
/// IC factors and the work counters.
pub struct Stepper<'a> {
    sys: &'a SplitSystem,
    cfg: IntegratorConfig,
    shifted: Vec<(Shift, ShiftedSystem)>,
    stats: RunStats,
    warm_start: Option<Vec<f64>>,
}

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a SplitSystem, cfg: &IntegratorConfig) -> Result<Self, ArgumentError> {
        cfg.gmres.validate()?;
        cfg.krylov.validate()?;
        if !(cfg.h > 0.0) {
            return Err(ArgumentError::InvalidConfig(format!(
                "step size must be > 0, got {}",
                cfg.h
            )));
        }
        Ok(Self {
            sys,
            cfg: cfg.clone(),
            shifted: Vec::new(),
            stats: RunStats::default(),
            warm_start: None,
        })
    }

    pub fn stats(&self) -> &RunStats {
        &self.stats
    }

    fn check_dim(&self, u: &[f64]) -> Result<(), ArgumentError> {
        if u.len() != self.sys.dim() {
            return Err(ArgumentError::DimensionMismatch {
                what: "state",
                expected: self.sys.dim(),
                got: u.len(),
            });
        }
        Ok(())
    }

    fn shifted(&mut self, shift: Shift) -> usize {
        if let Some(i) = self.shifted.iter().position(|(s, _)| *s == shift) {
            return i;
        }
        let h = self.cfg.h;
        let l = self.sys.linear();
        let matrix = match shift {
            Shift::Full => shift_identity(l, h),
            Shift::Half => shift_identity(l, 0.5 * h),
            Shift::Bdf => shift_identity(l, 2.0 * h / 3.0).map(|m| m.scaled(3.0)),
        }
        .expect("L is square");
        let factor = if self.cfg.use_preconditioner {
            match ichol_zero_fill(&matrix) {
                Ok(f) => Some(f),
                Err(e) => {
                    warn!(
                        "{}: IC(0) failed ({e}); continuing without preconditioner",
                        self.sys.label()
                    );
                    None
                }
            }
        } else {
            None
        };
        self.shifted.push((shift, ShiftedSystem { matrix, factor }));
        self.shifted.len() - 1
    }

    fn solve(&mut self, shift: Shift, rhs: &[f64], x0: &[f64]) -> Result<Vec<f64>, SolverError> {
        let idx = self.shifted(shift);
        let sys = &self.shifted[idx].1;
        let op = Counted::new(&sys.matrix);
        let out = gmres_solve(&op, rhs, x0, &self.cfg.gmres, sys.factor.as_ref());
        self.stats.spmv_count += op.count();
        let out = out?;
        self.stats.gmres_iters_total += out.iterations as u64;
        Ok(out.x)
    }

    fn eval_n(&mut self, t: f64, u: &[f64]) -> Vec<f64> {
        self.stats.n_evals += 1;
        self.sys.nonlinear(t, u)
    }

    fn eval_f(&mut self, t: f64, u: &[f64]) -> Vec<f64> {
        let mut f = self.eval_n(t, u);
        let lu = self.sys.linear().spmv(u).expect("state dimension");
        self.stats.spmv_count += 1;
        for (fi, li) in f.iter_mut().zip(&lu) {
            *fi += li;
        }
        f
    }

    /// `φ₂(h·op)D` for the operator chosen by `kind`.
    fn phi2(&mut self, kind: IntegratorKind, u: &[f64], d: &[f64]) -> Result<Vec<f64>, SolverError> {
        let h = self.cfg.h;
        let order = PhiOrder::new(2).expect("order 2");
        let sys = self.sys;
        let spmv = Cell::new(0u64);
        let jv = Cell::new(0u64);
        let n = sys.dim();
        let outcome = match kind {
            IntegratorKind::ImExpRk2 => {
                let op = Counted::new(sys.linear());
                let r = phi_times_vector(&op, order, d, h, &self.cfg.krylov);
                spmv.set(op.count());
                r
            }
            IntegratorKind::HImExp2J => {
                let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
                    sys.linear().spmv_into(x, y).expect("state dimension");
                    let mut tmp = vec![0.0; n];
                    sys.jacobian_action_into(u, x, &mut tmp);
                    for (yi, ti) in y.iter_mut().zip(&tmp) {
                        *yi += ti;
                    }
                    spmv.set(spmv.get() + 1);
                    jv.set(jv.get() + 1);
                });
                phi_times_vector(&op, order, d, h, &self.cfg.krylov)
            }
            IntegratorKind::HImExp2N => {
                let op = FnOperator::new(n, |x: &[f64], y: &mut [f64]| {
                    sys.jacobian_action_into(u, x, y);
                    jv.set(jv.get() + 1);
                });
                phi_times_vector(&op, order, d, h, &self.cfg.krylov)
            }
            _ => unreachable!("phi2 is only used by exponential methods"),
        };
        self.stats.spmv_count += spmv.get();
        self.stats.jv_evals += jv.get();
        let outcome = outcome?;
        self.stats.krylov_matvecs_total += outcome.total_matvecs;
        Ok(outcome.result)
    }

    /// One ImExpRK1 step: `uₙ + h x` with `(I − hL)x = F(tₙ, uₙ)`.
    pub fn step_imexprk1(&mut self, ctx: &StepContext) -> Result<Vec<f64>, SolverError> {
        self.check_dim(&ctx.u)?;
        let h = self.cfg.h;
        let f = self.eval_f(ctx.t, &ctx.u);
        let x0 = self.take_warm_start(f.len());
        let x = self.solve(Shift::Full, &f, &x0)?;
        let next = ctx.u.iter().zip(&x).map(|(u, xi)| u + h * xi).collect();
        self.warm_start = Some(x);
        Ok(next)
    }

    fn take_warm_start(&mut self, n: usize) -> Vec<f64> {
        self.warm_start.take().unwrap_or_else(|| vec![0.0; n])
    }

    /// One step of ImExpRK2, HImExp2J or HImExp2N, returning its parts.
    pub fn step_exponential_parts(
        &mut self,
        kind: IntegratorKind,
        ctx: &StepContext,
    ) -> Result<ExpStepParts, SolverError> {
        self.check_dim(&ctx.u)?;
        if !matches!(
            kind,
            IntegratorKind::ImExpRk2 | IntegratorKind::HImExp2J | IntegratorKind::HImExp2N
        ) {
            return Err(ArgumentError::InvalidConfig(format!("{kind} is not an exponential method")).into());
        }
        let h = self.cfg.h;
        let u = &ctx.u;
        let n_u = self.eval_n(ctx.t, u);
        let lu = self.sys.linear().spmv(u).expect("state dimension");
        self.stats.spmv_count += 1;
        let f: Vec<f64> = n_u.iter().zip(&lu).map(|(a, b)| a + b).collect();
        let x0 = self.take_warm_start(f.len());
        let w = self.solve(Shift::Half, &f, &x0)?;
        let linear_increment: Vec<f64> = w.iter().map(|wi| h * wi).collect();
        let stage: Vec<f64> = u.iter().zip(&linear_increment).map(|(a, b)| a + 0.5 * b).collect();
        let n_stage = self.eval_n(ctx.t + 0.5 * h, &stage);
        let d: Vec<f64> = n_stage.iter().zip(&n_u).map(|(a, b)| a - b).collect();
        let p = self.phi2(kind, u, &d)?;
        let phi_term: Vec<f64> = p.iter().map(|pi| 2.0 * h * pi).collect();
        let next = u
            .iter()
            .zip(&linear_increment)
            .zip(&phi_term)
            .map(|((a, b), c)| a + b + c)
            .collect();
        self.warm_start = Some(w);
        Ok(ExpStepParts {
            stage,
            linear_increment,
            phi_term,
            next,
        })
    }

    /// One 2-sBDF step from `(uₙ, uₙ₋₁)`. `n_prev` may carry a cached
    /// `N(tₙ₋₁, uₙ₋₁)`.
    pub fn step_sbdf2(
        &mut self,
        ctx: &StepContext,
        n_prev: Option<&[f64]>,
    ) -> Result<(Vec<f64>, Vec<f64>), SolverError> {
        self.check_dim(&ctx.u)?;
        let Some((u_prev, t_prev)) = ctx.prev.as_ref() else {
            return Err(ArgumentError::InvalidConfig("2-sBDF needs the previous state".into()).into());
        };
        self.check_dim(u_prev)?;
        let h = self.cfg.h;
        let n_now = self.eval_n(ctx.t, &ctx.u);
        let n_old = match n_prev {
            Some(v) => v.to_vec(),
            None => self.eval_n(*t_prev, u_prev),
        };
        let rhs: Vec<f64> = (0..ctx.u.len())
            .map(|i| 4.0 * ctx.u[i] - u_prev[i] + 2.0 * h * (2.0 * n_now[i] - n_old[i]))
            .collect();
        let next = self.solve(Shift::Bdf, &rhs, &ctx.u)?;
        Ok((next, n_now))
    }
}

/// Single ImExpRK1 step with a fresh engine.
pub fn step_imexprk1(ctx: &StepContext, sys: &SplitSystem, cfg: &IntegratorConfig) -> Result<Vec<f64>, SolverError> {
    Stepper::new(sys, cfg)?.step_imexprk1(ctx)
}

pub fn step_imexprk2(ctx: &StepContext, sys: &SplitSystem, cfg: &IntegratorConfig) -> Result<Vec<f64>, SolverError> {
    Ok(Stepper::new(sys, cfg)?
        .step_exponential_parts(IntegratorKind::ImExpRk2, ctx)?
        .next)
}

pub fn step_himexp2j(ctx: &StepContext, sys: &SplitSystem, cfg: &IntegratorConfig) -> Result<Vec<f64>, SolverError> {
    Ok(Stepper::new(sys, cfg)?
        .step_exponential_parts(IntegratorKind::HImExp2J, ctx)?
        .next)
}

pub fn step_himexp2n(ctx: &StepContext, sys: &SplitSystem, cfg: &IntegratorConfig) -> Result<Vec<f64>, SolverError> {
    Ok(Stepper::new(sys, cfg)?
        .step_exponential_parts(IntegratorKind::HImExp2N, ctx)?
        .next)
}

pub fn step_sbdf2(ctx: &StepContext, sys: &SplitSystem, cfg: &IntegratorConfig) -> Result<Vec<f64>, SolverError> {
    Ok(Stepper::new(sys, cfg)?.step_sbdf2(ctx, None)?.0)
}

/// Data handed to an [`integrate_with`] observer after every step.
#[derive(Debug)]
pub struct StepEvent<'e> {
    /// 1-based index of the completed step.
    pub step: usize,
    pub t_prev: f64,
    pub t: f64,
    pub u_prev: &'e [f64],
    pub u: &'e [f64],
}

/// A solver that gave up while its best iterate already implies a state past
/// the blow-up threshold is reported as a blow-up: the run is unstable, and
/// the solver merely ran out of floating-point range first.
fn classify_failure(source: SolverError, step: usize, t: f64, cfg: &IntegratorConfig) -> IntegrateError {
    if let SolverError::Convergence(e) = &source {
        // 2-sBDF solves for the state itself, the other schemes for a rate
        let scale = if cfg.kind == IntegratorKind::Sbdf2 && step > 1 {
            1.0
        } else {
            cfg.h
        };
        let norm = scale * max_norm(&e.best);
        if !all_finite(&e.best) || norm > BLOW_UP_THRESHOLD {
            return IntegrateError::BlowUp {
                step,
                t: t + cfg.h,
                norm: if norm.is_nan() { f64::INFINITY } else { norm },
            };
        }
    }
    IntegrateError::Solver { step, t, source }
}

/// Integrates from `u0` over `[cfg.t0, cfg.t_end]` with constant steps.
pub fn integrate(
    sys: &SplitSystem,
    cfg: &IntegratorConfig,
    u0: &[f64],
) -> Result<(Vec<f64>, RunStats), IntegrateError> {
    integrate_with(sys, cfg, u0, |_| {})
}

/// [`integrate`] with a per-step observer.
pub fn integrate_with(
    sys: &SplitSystem,
    cfg: &IntegratorConfig,
    u0: &[f64],
    mut observe: impl FnMut(&StepEvent<'_>),
) -> Result<(Vec<f64>, RunStats), IntegrateError> {
    cfg.validate()?;
    let steps = cfg.n_steps()?;
    if u0.len() != sys.dim() {
        return Err(ArgumentError::DimensionMismatch {
            what: "initial state",
            expected: sys.dim(),
            got: u0.len(),
        }
        .into());
    }
    let clock = Instant::now();
    let mut stepper = Stepper::new(sys, cfg)?;
    let mut u = u0.to_vec();
    let mut prev: Option<(Vec<f64>, f64)> = None;
    let mut n_prev: Option<Vec<f64>> = None;
    let t_at = |i: usize| cfg.t0 + i as f64 * cfg.h;

    for step in 1..=steps {
        let t = t_at(step - 1);
        let fail = |source: SolverError| classify_failure(source, step, t, cfg);
        let ctx = StepContext {
            u,
            t,
            prev: prev.take(),
        };
        let next = match cfg.kind {
            IntegratorKind::ImExpRk1 => stepper.step_imexprk1(&ctx).map_err(fail)?,
            IntegratorKind::ImExpRk2 | IntegratorKind::HImExp2J | IntegratorKind::HImExp2N => {
                stepper.step_exponential_parts(cfg.kind, &ctx).map_err(fail)?.next
            }
            IntegratorKind::Sbdf2 if ctx.prev.is_none() => match cfg.sbdf_startup {
                SbdfStartup::ImExpRk2 => {
                    stepper
                        .step_exponential_parts(IntegratorKind::ImExpRk2, &ctx)
                        .map_err(fail)?
                        .next
                }
                SbdfStartup::ImexEuler => stepper.step_imexprk1(&ctx).map_err(fail)?,
            },
            IntegratorKind::Sbdf2 => {
                let (next, n_now) = stepper.step_sbdf2(&ctx, n_prev.as_deref()).map_err(fail)?;
                n_prev = Some(n_now);
                next
            }
        };
        stepper.stats.steps += 1;
        let norm = max_norm(&next);
        if !all_finite(&next) || norm > BLOW_UP_THRESHOLD {
            return Err(IntegrateError::BlowUp {
                step,
                t: t_at(step),
                norm: if norm.is_nan() { f64::INFINITY } else { norm },
            });
        }
        observe(&StepEvent {
            step,
            t_prev: t,
            t: t_at(step),
            u_prev: &ctx.u,
            u: &next,
        });
        if cfg.kind == IntegratorKind::Sbdf2 {
            prev = Some((ctx.u, t));
        }
        u = next;
    }
    let mut stats = stepper.stats;
    stats.wall_time = clock.elapsed().as_secs_f64();
    Ok((u, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::SplitSystem;

    fn scalar(lambda: f64) -> SplitSystem {
        SplitSystem::new(
            "scalar",
            CsrMatrix::from_diagonal(&[lambda]),
            |_, _, out: &mut [f64]| out[0] = 0.0,
            |_, _, out: &mut [f64]| out[0] = 0.0,
            vec![1.0],
        )
        .unwrap()
    }

    fn cfg(kind: IntegratorKind, h: f64) -> IntegratorConfig {
        IntegratorConfig::new(kind, h, 0.0, h)
    }

    #[test]
    fn scalar_stability_functions() {
        let sys = scalar(-1.0);
        let ctx = StepContext::new(vec![1.0], 0.0);
        let u1 = step_imexprk1(&ctx, &sys, &cfg(IntegratorKind::ImExpRk1, 1.0)).unwrap();
        assert!((u1[0] - 0.5).abs() < 1e-14);
        for kind in [
            IntegratorKind::ImExpRk2,
            IntegratorKind::HImExp2J,
            IntegratorKind::HImExp2N,
        ] {
            let c = cfg(kind, 1.0);
            let u1 = Stepper::new(&sys, &c)
                .unwrap()
                .step_exponential_parts(kind, &ctx)
                .unwrap()
                .next;
            assert!((u1[0] - 1.0 / 3.0).abs() < 1e-14, "{kind}");
        }
        let ctx2 = StepContext {
            u: vec![1.0],
            t: 1.0,
            prev: Some((vec![1.0], 0.0)),
        };
        let u2 = step_sbdf2(&ctx2, &sys, &cfg(IntegratorKind::Sbdf2, 1.0)).unwrap();
        assert!((u2[0] - 0.6).abs() < 1e-14);
    }

    #[test]
    fn zero_steps_returns_initial() {
        let sys = scalar(-1.0);
        let c = IntegratorConfig::new(IntegratorKind::ImExpRk2, 0.1, 0.5, 0.5);
        let (u, stats) = integrate(&sys, &c, &[3.0]).unwrap();
        assert_eq!(u, vec![3.0]);
        assert_eq!(stats.steps, 0);
    }

    #[test]
    fn non_integral_step_count_rejected() {
        let c = IntegratorConfig::new(IntegratorKind::ImExpRk1, 0.3, 0.0, 1.0);
        assert!(c.n_steps().is_err());
        let c = IntegratorConfig::new(IntegratorKind::ImExpRk1, -0.1, 0.0, 1.0);
        assert!(c.validate().is_err());
    }

    #[test]
    fn blow_up_detected() {
        // explicit growth through N: u' = 50u, h = 1, 10 steps
        let sys = SplitSystem::new(
            "growth",
            CsrMatrix::from_diagonal(&[0.0]),
            |_, u: &[f64], out: &mut [f64]| out[0] = 50.0 * u[0],
            |_, v: &[f64], out: &mut [f64]| out[0] = 50.0 * v[0],
            vec![1.0],
        )
        .unwrap();
        let c = IntegratorConfig::new(IntegratorKind::ImExpRk1, 1.0, 0.0, 10.0);
        let err = integrate(&sys, &c, &[1.0]).unwrap_err();
        assert!(err.is_blow_up(), "{err}");
    }

    #[test]
    fn sbdf_needs_history() {
        let sys = scalar(-1.0);
        let ctx = StepContext::new(vec![1.0], 0.0);
        assert!(step_sbdf2(&ctx, &sys, &cfg(IntegratorKind::Sbdf2, 1.0)).is_err());
    }

    #[test]
    fn method_names_round_trip() {
        for k in IntegratorKind::ALL {
            assert_eq!(k.name().parse::<IntegratorKind>().unwrap(), k);
        }
        assert_eq!("sbdf2".parse::<IntegratorKind>().unwrap(), IntegratorKind::Sbdf2);
        assert!("rk4".parse::<IntegratorKind>().is_err());
    }
}
