use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use imexp::integrators::{integrate, IntegratorKind};
use imexp::problems::ProblemSpec;
use imexp::sparse::max_norm_diff;
use imexp::study::{
    emit_csv, halving_sequence, run_convergence_study, run_precision_study, run_stability_scan, write_csv, Outcome,
    ReferencePolicy, StudyConfig, StudyRecord,
};
use imexp::StudyError;

#[derive(Parser)]
#[command(
    name = "imexp-bench",
    version,
    about = "Convergence, stability and precision studies for IMEXP integrators"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error against a reference at h1, h1/2, ... and fitted orders.
    Converge(StudyArgs),
    /// Largest stable step per method on a descending grid.
    Stability(StudyArgs),
    /// Error and work counters for each method, step and preconditioning flag.
    Precision(StudyArgs),
    /// A single integration with one method and step.
    Run(StudyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ProblemName {
    Parabolic,
    Allencahn,
    Schnakenberg,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Precond {
    On,
    Off,
    Both,
}

#[derive(Args)]
struct StudyArgs {
    #[arg(long, value_enum)]
    problem: ProblemName,
    /// Method name; repeat for several. Defaults depend on the subcommand.
    #[arg(long = "method")]
    methods: Vec<IntegratorKind>,
    /// Largest (first) step size; the step itself for `run`.
    #[arg(long, visible_alias = "h")]
    h1: Option<f64>,
    #[arg(long, default_value_t = 4)]
    halvings: usize,
    /// Descending step grid for `stability`, comma separated.
    #[arg(long, value_delimiter = ',')]
    h_grid: Vec<f64>,
    /// Interior nodes (parabolic) or points per axis.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long, default_value_t = 1000.0)]
    gamma: f64,
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
    #[arg(long)]
    t_end: Option<f64>,
    #[arg(long, value_enum, default_value_t = Precond::On)]
    precond: Precond,
    #[arg(long)]
    gmres_tol: Option<f64>,
    #[arg(long)]
    gmres_restart: Option<usize>,
    #[arg(long)]
    krylov_tol: Option<f64>,
    /// Reference step refinement for problems without an exact solution.
    #[arg(long, default_value_t = 16)]
    refinement: u32,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for compatibility; all studies are deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

impl StudyArgs {
    fn problem(&self) -> ProblemSpec {
        match self.problem {
            ProblemName::Parabolic => ProblemSpec::Parabolic {
                n: self.grid.unwrap_or(200),
            },
            ProblemName::Allencahn => ProblemSpec::AllenCahn {
                eps: self.eps,
                n: self.grid.unwrap_or(64),
            },
            ProblemName::Schnakenberg => ProblemSpec::Schnakenberg {
                gamma: self.gamma,
                n: self.grid.unwrap_or(64),
            },
        }
    }

    fn config(&self) -> StudyConfig {
        let mut cfg = StudyConfig::new(self.problem());
        if let Some(t) = self.t_end {
            cfg.t_end = t;
        }
        if let Some(tol) = self.gmres_tol {
            cfg.gmres.tol = tol;
        }
        if let Some(r) = self.gmres_restart {
            cfg.gmres.restart = r;
        }
        if let Some(tol) = self.krylov_tol {
            cfg.krylov.tol = tol;
        }
        cfg.use_preconditioner = self.precond != Precond::Off;
        cfg
    }

    fn methods(&self, default: &[IntegratorKind]) -> Vec<IntegratorKind> {
        if self.methods.is_empty() {
            default.to_vec()
        } else {
            self.methods.clone()
        }
    }

    fn h1(&self, cfg: &StudyConfig) -> f64 {
        self.h1.unwrap_or(match cfg.problem {
            ProblemSpec::Parabolic { .. } => 0.1,
            _ => cfg.t_end / 1024.0,
        })
    }

    fn policy(&self, cfg: &StudyConfig) -> Result<ReferencePolicy, StudyError> {
        let sys = cfg.problem.build()?;
        Ok(ReferencePolicy {
            refinement: self.refinement,
            ..ReferencePolicy::for_system(&sys)
        })
    }

    fn emit(&self, records: &[StudyRecord]) -> Result<(), StudyError> {
        match &self.out {
            Some(path) => emit_csv(records, path),
            None => write_csv(records, io::stdout().lock()).map_err(|source| StudyError::Csv {
                path: "<stdout>".into(),
                source,
            }),
        }
    }
}

const SCAN_GRID: [f64; 7] = [1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5];

fn any_solver_fail(records: &[StudyRecord]) -> bool {
    records.iter().any(|r| r.outcome == Outcome::SolverFail)
}

fn converge(args: &StudyArgs) -> Result<bool, StudyError> {
    let cfg = args.config();
    let study = run_convergence_study(
        &cfg,
        &args.methods(&IntegratorKind::ALL),
        args.h1(&cfg),
        args.halvings,
        &args.policy(&cfg)?,
    )?;
    for s in &study.slopes {
        match s.slope {
            Some(p) => eprintln!("{:<9} slope {p:.3}", s.method),
            None => eprintln!("{:<9} slope n/a", s.method),
        }
    }
    args.emit(&study.records)?;
    Ok(!any_solver_fail(&study.records))
}

fn stability(args: &StudyArgs) -> Result<bool, StudyError> {
    let cfg = args.config();
    let grid = if args.h_grid.is_empty() {
        SCAN_GRID.to_vec()
    } else {
        args.h_grid.clone()
    };
    let mut records = Vec::new();
    let mut all_found = true;
    for method in args.methods(&IntegratorKind::SECOND_ORDER) {
        let scan = run_stability_scan(&cfg, method, &grid)?;
        match scan.largest_stable {
            Some(h) => eprintln!("{method:<9} largest stable h {h:e}"),
            None => {
                eprintln!("{method:<9} none stable");
                all_found = false;
            }
        }
        records.extend(scan.records);
    }
    args.emit(&records)?;
    Ok(all_found)
}

fn precision(args: &StudyArgs) -> Result<bool, StudyError> {
    let cfg = args.config();
    let flags: &[bool] = match args.precond {
        Precond::On => &[true],
        Precond::Off => &[false],
        Precond::Both => &[true, false],
    };
    let hs = halving_sequence(args.h1(&cfg), args.halvings);
    let records = run_precision_study(
        &cfg,
        &args.methods(&IntegratorKind::SECOND_ORDER),
        &hs,
        flags,
        &args.policy(&cfg)?,
    )?;
    args.emit(&records)?;
    Ok(!any_solver_fail(&records))
}

fn run(args: &StudyArgs) -> Result<bool, StudyError> {
    let cfg = args.config();
    let sys = cfg.problem.build()?;
    let h = args.h1(&cfg);
    let mut ok = true;
    let mut out = io::stdout().lock();
    for method in args.methods(&[IntegratorKind::HImExp2J]) {
        match integrate(&sys, &cfg.integrator_config(method, h), sys.initial_state()) {
            Ok((u, stats)) => {
                let err = sys.exact(cfg.t_end).map(|e| max_norm_diff(&u, &e)).transpose()?;
                let err = err.map_or("n/a".to_string(), |e| format!("{e:e}"));
                let _ = writeln!(
                    out,
                    "{method} h={h:e} steps={} error={err} spmv={} gmres={} krylov={} n_evals={} jv={} wall={:.3}s",
                    stats.steps,
                    stats.spmv_count,
                    stats.gmres_iters_total,
                    stats.krylov_matvecs_total,
                    stats.n_evals,
                    stats.jv_evals,
                    stats.wall_time
                );
            }
            Err(e) if matches!(e, imexp::IntegrateError::Argument(_)) => return Err(e.into()),
            Err(e) => {
                let _ = writeln!(out, "{method} h={h:e} failed: {e}");
                ok = false;
            }
        }
    }
    Ok(ok)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Command::Converge(a) => converge(a),
        Command::Stability(a) => stability(a),
        Command::Precision(a) => precision(a),
        Command::Run(a) => run(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            let argument = matches!(
                e,
                StudyError::Argument(_) | StudyError::Integrate(imexp::IntegrateError::Argument(_))
            );
            ExitCode::from(if argument { 2 } else { 1 })
        }
    }
}
