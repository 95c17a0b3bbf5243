//! Convergence studies, stability scans and precision (work vs error)
//! studies, with reference-solution management and CSV output.
//!
//! Runs inside a study are independent and execute on the rayon pool; records
//! come back sorted by method, then step size.

use std::fs::File;
use std::io;
use std::path::Path;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ArgumentError, IntegrateError, StudyError};
use crate::integrators::{integrate, IntegratorConfig, IntegratorKind, RunStats};
use crate::krylov::{GmresConfig, KrylovConfig};
use crate::problems::{ProblemSpec, SplitSystem};
use crate::sparse::max_norm_diff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    /// The state blew up.
    Unstable,
    /// GMRES or the Krylov φ evaluation gave up.
    SolverFail,
}

/// One integration run. Column order in CSV follows field order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRecord {
    pub problem: String,
    pub method: IntegratorKind,
    pub h: f64,
    pub grid: usize,
    /// `ε` or `γ`; empty for the parabolic problem.
    pub param: Option<f64>,
    pub preconditioned: bool,
    /// Max-norm error against the reference; only for `ok` runs.
    pub error_max_norm: Option<f64>,
    pub spmv_count: u64,
    pub gmres_iters: u64,
    pub krylov_matvecs: u64,
    pub n_evals: u64,
    pub wall_seconds: f64,
    pub outcome: Outcome,
}

impl StudyRecord {
    pub fn total_work(&self) -> u64 {
        self.spmv_count + self.gmres_iters + self.krylov_matvecs
    }
}

/// Shared settings of every run in a study.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub problem: ProblemSpec,
    pub t_end: f64,
    pub gmres: GmresConfig,
    pub krylov: KrylovConfig,
    pub use_preconditioner: bool,
}

impl StudyConfig {
    /// Problem defaults: its horizon and GMRES settings, preconditioning on.
    pub fn new(problem: ProblemSpec) -> Self {
        Self {
            t_end: problem.default_t_end(),
            gmres: problem.gmres_config(),
            krylov: KrylovConfig::default(),
            use_preconditioner: true,
            problem,
        }
    }

    pub fn integrator_config(&self, kind: IntegratorKind, h: f64) -> IntegratorConfig {
        IntegratorConfig {
            gmres: self.gmres.clone(),
            krylov: self.krylov.clone(),
            use_preconditioner: self.use_preconditioner,
            ..IntegratorConfig::new(kind, h, 0.0, self.t_end)
        }
    }

    fn with_preconditioner(&self, on: bool) -> Self {
        Self {
            use_preconditioner: on,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReferenceStrategy {
    ExactSolution,
    FineStepCrossMethod,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePolicy {
    pub strategy: ReferenceStrategy,
    /// Reference step is the finest study step divided by this.
    pub refinement: u32,
    /// Primary method and cross-check method.
    pub pair: (IntegratorKind, IntegratorKind),
    /// How many times the refinement may double after a failed cross-check.
    pub max_escalations: u32,
}

impl ReferencePolicy {
    pub fn exact() -> Self {
        Self {
            strategy: ReferenceStrategy::ExactSolution,
            ..Self::fine_step()
        }
    }

    pub fn fine_step() -> Self {
        Self {
            strategy: ReferenceStrategy::FineStepCrossMethod,
            refinement: 16,
            pair: (IntegratorKind::HImExp2J, IntegratorKind::ImExpRk2),
            max_escalations: 3,
        }
    }

    /// Exact solution when the system has one, fine-step otherwise.
    pub fn for_system(sys: &SplitSystem) -> Self {
        if sys.has_exact() {
            Self::exact()
        } else {
            Self::fine_step()
        }
    }

    pub fn validate(&self, sys: &SplitSystem) -> Result<(), ArgumentError> {
        if self.strategy == ReferenceStrategy::ExactSolution && !sys.has_exact() {
            return Err(ArgumentError::InvalidConfig(format!(
                "{} has no exact solution",
                sys.label()
            )));
        }
        if self.refinement == 0 {
            return Err(ArgumentError::InvalidConfig("reference refinement must be >= 1".into()));
        }
        Ok(())
    }
}

/// An accepted reference state.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub state: Vec<f64>,
    /// Step used for a fine-step reference.
    pub h: Option<f64>,
    /// Max-norm distance between the two fine-step methods.
    pub agreement: Option<f64>,
}

/// Reference state at `cfg.t_end`.
///
/// A fine-step reference integrates the policy's primary method at
/// `h_min / refinement` and is accepted when the cross-check method agrees
/// within `error_scale / 100`. Otherwise the refinement doubles, up to
/// `max_escalations` times.
pub fn compute_reference(
    cfg: &StudyConfig,
    policy: &ReferencePolicy,
    h_min: f64,
    error_scale: f64,
) -> Result<Reference, StudyError> {
    let sys = cfg.problem.build()?;
    compute_reference_for(&sys, cfg, policy, h_min, error_scale)
}

/// [`compute_reference`] for an already built system.
pub fn compute_reference_for(
    sys: &SplitSystem,
    cfg: &StudyConfig,
    policy: &ReferencePolicy,
    h_min: f64,
    error_scale: f64,
) -> Result<Reference, StudyError> {
    policy.validate(sys)?;
    if policy.strategy == ReferenceStrategy::ExactSolution {
        let state = sys.exact(cfg.t_end).expect("validated");
        return Ok(Reference {
            state,
            h: None,
            agreement: None,
        });
    }
    let bound = error_scale / 100.0;
    let mut refinement = policy.refinement as f64;
    let mut last = String::new();
    for attempt in 0..=policy.max_escalations {
        let h = h_min / refinement;
        info!(
            "{}: reference {} vs {} at h = {h:e} (attempt {})",
            sys.label(),
            policy.pair.0,
            policy.pair.1,
            attempt + 1
        );
        let (a, b) = rayon::join(
            || run_state(sys, cfg, policy.pair.0, h),
            || run_state(sys, cfg, policy.pair.1, h),
        );
        match (a, b) {
            (Ok(a), Ok(b)) => {
                let agreement = max_norm_diff(&a, &b)?;
                if agreement <= bound {
                    return Ok(Reference {
                        state: a,
                        h: Some(h),
                        agreement: Some(agreement),
                    });
                }
                last = format!("methods differ by {agreement:e} at h = {h:e}, need <= {bound:e}");
            }
            (Err(e), _) | (_, Err(e)) => last = format!("run failed at h = {h:e}: {e}"),
        }
        warn!("{}: reference not accepted: {last}", sys.label());
        refinement *= 2.0;
    }
    Err(StudyError::Reference(format!(
        "{} after {} escalations: {last}",
        sys.label(),
        policy.max_escalations
    )))
}

fn run_state(sys: &SplitSystem, cfg: &StudyConfig, kind: IntegratorKind, h: f64) -> Result<Vec<f64>, IntegrateError> {
    integrate(sys, &cfg.integrator_config(kind, h), sys.initial_state()).map(|(u, _)| u)
}

/// A finished run before its error is known.
struct Run {
    record: StudyRecord,
    state: Option<Vec<f64>>,
}

fn run_one(sys: &SplitSystem, cfg: &StudyConfig, kind: IntegratorKind, h: f64) -> Run {
    let clock = Instant::now();
    let result = integrate(sys, &cfg.integrator_config(kind, h), sys.initial_state());
    let wall = clock.elapsed().as_secs_f64();
    let (state, stats, outcome) = match result {
        Ok((u, stats)) => (Some(u), stats, Outcome::Ok),
        Err(e) => {
            info!("{} {kind} h = {h:e}: {e}", sys.label());
            let outcome = if e.is_blow_up() {
                Outcome::Unstable
            } else {
                Outcome::SolverFail
            };
            (None, RunStats::default(), outcome)
        }
    };
    info!("{} {kind} h = {h:e}: {outcome:?} in {wall:.2}s", sys.label());
    Run {
        record: StudyRecord {
            problem: cfg.problem.name().to_string(),
            method: kind,
            h,
            grid: cfg.problem.grid(),
            param: cfg.problem.param(),
            preconditioned: cfg.use_preconditioner,
            error_max_norm: None,
            spmv_count: stats.spmv_count,
            gmres_iters: stats.gmres_iters_total,
            krylov_matvecs: stats.krylov_matvecs_total,
            n_evals: stats.n_evals,
            wall_seconds: wall,
            outcome,
        },
        state,
    }
}

fn run_all(sys: &SplitSystem, cfg: &StudyConfig, jobs: &[(IntegratorKind, f64)]) -> Result<Vec<Run>, StudyError> {
    for &(kind, h) in jobs {
        cfg.integrator_config(kind, h).validate()?;
    }
    let mut runs: Vec<Run> = jobs.par_iter().map(|&(kind, h)| run_one(sys, cfg, kind, h)).collect();
    runs.sort_by(|a, b| {
        (a.record.method, a.record.preconditioned)
            .cmp(&(b.record.method, b.record.preconditioned))
            .then(a.record.h.total_cmp(&b.record.h))
    });
    Ok(runs)
}

/// Largest error estimate over methods at their finest pair of successful
/// step sizes: `‖u(h_a) − u(h_b)‖ / ((h_b/h_a)^p − 1)` for `h_a < h_b`.
fn estimate_error_scale(runs: &[Run]) -> Option<f64> {
    let mut scale: Option<f64> = None;
    for kind in IntegratorKind::ALL {
        let ok: Vec<&Run> = runs
            .iter()
            .filter(|r| r.record.method == kind && r.state.is_some())
            .collect();
        // runs are sorted by h ascending within a method
        let Some(pair) = ok.windows(2).next() else { continue };
        let (fine, coarse) = (pair[0], pair[1]);
        if fine.record.h >= coarse.record.h {
            continue;
        }
        let diff = max_norm_diff(fine.state.as_ref()?, coarse.state.as_ref()?).ok()?;
        let ratio = (coarse.record.h / fine.record.h).powi(kind.order() as i32) - 1.0;
        let est = diff / ratio;
        scale = Some(scale.map_or(est, |s: f64| s.max(est)));
    }
    scale.filter(|s| s.is_finite() && *s > 0.0)
}

fn attach_errors(runs: Vec<Run>, reference: &[f64]) -> Result<Vec<StudyRecord>, StudyError> {
    runs.into_iter()
        .map(|run| {
            let mut record = run.record;
            if let Some(u) = run.state {
                record.error_max_norm = Some(max_norm_diff(&u, reference)?);
            }
            Ok(record)
        })
        .collect()
}

fn reference_for_runs(
    sys: &SplitSystem,
    cfg: &StudyConfig,
    policy: &ReferencePolicy,
    runs: &[Run],
) -> Result<Reference, StudyError> {
    let h_min = runs.iter().map(|r| r.record.h).fold(f64::INFINITY, f64::min);
    let scale = if policy.strategy == ReferenceStrategy::ExactSolution {
        f64::INFINITY
    } else {
        estimate_error_scale(runs).ok_or_else(|| {
            StudyError::Reference("no two successful runs of one method to estimate the error scale".into())
        })?
    };
    // the reference shares the study's solver settings but is always preconditioned
    compute_reference_for(sys, &cfg.with_preconditioner(true), policy, h_min, scale)
}

/// Least-squares slope of `log₂ error` against `log₂ h`.
///
/// Points with a nonpositive or non-finite coordinate are skipped; fewer than
/// two usable points give `None`.
pub fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(h, e)| *h > 0.0 && *e > 0.0 && h.is_finite() && e.is_finite())
        .map(|(h, e)| (h.log2(), e.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSlope {
    pub method: IntegratorKind,
    /// `None` when fewer than two runs succeeded.
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceStudy {
    pub records: Vec<StudyRecord>,
    pub slopes: Vec<MethodSlope>,
    pub reference: Option<Reference>,
}

/// Step sizes `h₁, h₁/2, …, h₁/2^n_halvings`.
pub fn halving_sequence(h1: f64, n_halvings: usize) -> Vec<f64> {
    (0..=n_halvings).map(|i| h1 / 2f64.powi(i as i32)).collect()
}

/// Runs every method at `h₁/2^i`, `i = 0..=n_halvings`, and fits the
/// observed order per method. Failed runs are recorded, not fatal.
pub fn run_convergence_study(
    cfg: &StudyConfig,
    methods: &[IntegratorKind],
    h1: f64,
    n_halvings: usize,
    policy: &ReferencePolicy,
) -> Result<ConvergenceStudy, StudyError> {
    if n_halvings < 2 {
        return Err(ArgumentError::InvalidConfig("a convergence study needs at least 2 halvings".into()).into());
    }
    if methods.is_empty() {
        return Ok(ConvergenceStudy {
            records: Vec::new(),
            slopes: Vec::new(),
            reference: None,
        });
    }
    let sys = cfg.problem.build()?;
    policy.validate(&sys)?;
    let hs = halving_sequence(h1, n_halvings);
    let jobs: Vec<(IntegratorKind, f64)> = methods.iter().flat_map(|&m| hs.iter().map(move |&h| (m, h))).collect();
    let runs = run_all(&sys, cfg, &jobs)?;
    let reference = reference_for_runs(&sys, cfg, policy, &runs)?;
    let records = attach_errors(runs, &reference.state)?;

    let mut kinds: Vec<IntegratorKind> = methods.to_vec();
    kinds.sort();
    kinds.dedup();
    let slopes = kinds
        .into_iter()
        .map(|method| {
            let pts: Vec<(f64, f64)> = records
                .iter()
                .filter(|r| r.method == method)
                .filter_map(|r| r.error_max_norm.map(|e| (r.h, e)))
                .collect();
            MethodSlope {
                method,
                slope: fit_slope(&pts),
            }
        })
        .collect();
    Ok(ConvergenceStudy {
        records,
        slopes,
        reference: Some(reference),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityScan {
    /// Largest step in the grid that completed; `None` if none did.
    pub largest_stable: Option<f64>,
    /// Every run attempted, in scan order.
    pub records: Vec<StudyRecord>,
}

/// Tries the step sizes in `h_grid` (descending) until a run completes.
pub fn run_stability_scan(
    cfg: &StudyConfig,
    method: IntegratorKind,
    h_grid: &[f64],
) -> Result<StabilityScan, StudyError> {
    if h_grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(ArgumentError::InvalidConfig("stability scan grid must be strictly descending".into()).into());
    }
    for &h in h_grid {
        cfg.integrator_config(method, h).validate()?;
    }
    let sys = cfg.problem.build()?;
    let mut records = Vec::new();
    for &h in h_grid {
        let run = run_one(&sys, cfg, method, h);
        let ok = run.record.outcome == Outcome::Ok;
        records.push(run.record);
        if ok {
            return Ok(StabilityScan {
                largest_stable: Some(h),
                records,
            });
        }
    }
    Ok(StabilityScan {
        largest_stable: None,
        records,
    })
}

/// Every method at every step, once per preconditioning flag, with errors
/// and work counters.
pub fn run_precision_study(
    cfg: &StudyConfig,
    methods: &[IntegratorKind],
    h_grid: &[f64],
    precond_flags: &[bool],
    policy: &ReferencePolicy,
) -> Result<Vec<StudyRecord>, StudyError> {
    if methods.is_empty() || h_grid.is_empty() || precond_flags.is_empty() {
        return Ok(Vec::new());
    }
    let sys = cfg.problem.build()?;
    policy.validate(&sys)?;
    let mut runs = Vec::new();
    for &flag in precond_flags {
        let jobs: Vec<(IntegratorKind, f64)> = methods
            .iter()
            .flat_map(|&m| h_grid.iter().map(move |&h| (m, h)))
            .collect();
        runs.extend(run_all(&sys, &cfg.with_preconditioner(flag), &jobs)?);
    }
    runs.sort_by(|a, b| {
        (a.record.method, a.record.preconditioned)
            .cmp(&(b.record.method, b.record.preconditioned))
            .then(a.record.h.total_cmp(&b.record.h))
    });
    let reference = reference_for_runs(&sys, cfg, policy, &runs)?;
    attach_errors(runs, &reference.state)
}

/// Writes records as CSV with a header row.
pub fn write_csv<W: io::Write>(records: &[StudyRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Column names, in field order.
pub const CSV_HEADER: [&str; 13] = [
    "problem",
    "method",
    "h",
    "grid",
    "param",
    "preconditioned",
    "error_max_norm",
    "spmv_count",
    "gmres_iters",
    "krylov_matvecs",
    "n_evals",
    "wall_seconds",
    "outcome",
];

pub fn read_csv_from<R: io::Read>(input: R) -> Result<Vec<StudyRecord>, csv::Error> {
    csv::Reader::from_reader(input).deserialize().collect()
}

pub fn emit_csv(records: &[StudyRecord], path: &Path) -> Result<(), StudyError> {
    let display = path.display().to_string();
    let file = File::create(path).map_err(|source| StudyError::Io {
        path: display.clone(),
        source,
    })?;
    write_csv(records, file).map_err(|source| StudyError::Csv { path: display, source })
}

pub fn read_csv(path: &Path) -> Result<Vec<StudyRecord>, StudyError> {
    let display = path.display().to_string();
    let file = File::open(path).map_err(|source| StudyError::Io {
        path: display.clone(),
        source,
    })?;
    read_csv_from(file).map_err(|source| StudyError::Csv { path: display, source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_exact_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h| (h, 3.0 * h * h)).collect();
        assert!((fit_slope(&pts).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&pts[..1]), None);
    }

    #[test]
    fn halvings() {
        assert_eq!(halving_sequence(0.1, 2), vec![0.1, 0.05, 0.025]);
    }

    #[test]
    fn empty_methods_give_empty_study() {
        let cfg = StudyConfig::new(ProblemSpec::Parabolic { n: 10 });
        let s = run_convergence_study(&cfg, &[], 0.1, 2, &ReferencePolicy::exact()).unwrap();
        assert!(s.records.is_empty() && s.slopes.is_empty());
    }

    #[test]
    fn exact_policy_needs_exact_solution() {
        let cfg = StudyConfig::new(ProblemSpec::AllenCahn { eps: 0.1, n: 8 });
        assert!(run_convergence_study(&cfg, &[IntegratorKind::ImExpRk1], 0.025, 2, &ReferencePolicy::exact()).is_err());
    }

    #[test]
    fn scan_rejects_ascending_grid() {
        let cfg = StudyConfig::new(ProblemSpec::Parabolic { n: 10 });
        assert!(run_stability_scan(&cfg, IntegratorKind::ImExpRk2, &[0.01, 0.1]).is_err());
    }

    #[test]
    fn header_matches_fields() {
        let r = StudyRecord {
            problem: "parabolic".into(),
            method: IntegratorKind::Sbdf2,
            h: 0.1,
            grid: 10,
            param: None,
            preconditioned: true,
            error_max_norm: Some(1e-3),
            spmv_count: 1,
            gmres_iters: 2,
            krylov_matvecs: 3,
            n_evals: 4,
            wall_seconds: 0.5,
            outcome: Outcome::Ok,
        };
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&r), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
        assert!(text.contains("2-sBDF,0.1,10,,true,0.001,1,2,3,4,0.5,ok"));
        assert_eq!(read_csv_from(&buf[..]).unwrap(), vec![r]);
    }
}
