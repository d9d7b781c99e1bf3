//! The `madmm` command-line front end.
//!
//! ```text
//! madmm solve <config.json> --variant {cyclic|rp|gadmm|sadmm} [--beta F] [--omega F]
//!             [--alpha F] [--seed N] [--iters N] [--tol F] --out <file.csv>
//! madmm spectra <config.json> --variant V [--omega F] [--alpha F] [--deflate] [--out <file.csv>]
//! madmm repro {counterexample|quadl1} --out-dir <dir>
//! ```
//!
//! Exit codes: 0 on success, 1 on input errors, 2 when a run diverges or a spectral check
//! fails. `MADMM_LOG` selects `quiet`, `info` or `debug` logging on standard error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};

use crate::densela::{SgsSplit, Vector};
use crate::model::{self, HistoryEntry, MultiBlockProblem, ProblemConfig};
use crate::solvers::{self, SolverParams, Variant};
use crate::spectra::{self, AffineMap};
use crate::{Error, Result};

/// Exit status for input errors.
pub const EXIT_INPUT: i32 = 1;
/// Exit status for diverged runs and failed spectral checks.
pub const EXIT_DIVERGED: i32 = 2;

/// Default RP seed, also used by `repro`.
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_ALPHA: f64 = 0.2;

const COUNTEREXAMPLE_BETA: f64 = 4.0;
const COUNTEREXAMPLE_ITERS: usize = 200;
const QUADL1_BETA: f64 = 4.0;
const QUADL1_TAU: f64 = 1.0;
const QUADL1_ITERS: usize = 500;

#[derive(Debug, Parser)]
#[command(
    name = "madmm",
    version,
    about = "Multi-block ADMM solvers and spectral analysis"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solver and write its iteration history as CSV.
    Solve(SolveArgs),
    /// Report the iteration-matrix spectrum of a variant on a linear problem.
    Spectra(SpectraArgs),
    /// Regenerate the data of a built-in experiment.
    Repro(ReproArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum VariantName {
    Cyclic,
    Rp,
    Gadmm,
    Sadmm,
}

#[derive(Debug, clap::Args)]
struct SolveArgs {
    config: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantName,
    /// Penalty override.
    #[arg(long)]
    beta: Option<f64>,
    /// S-ADMM dual step, defaults to beta.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, clap::Args)]
struct SpectraArgs {
    config: PathBuf,
    #[arg(long, value_enum)]
    variant: VariantName,
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Set aside the unit eigenvalues of the stationary dual kernel.
    #[arg(long)]
    deflate: bool,
    /// Eigenvalue CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ReproArgs {
    name: String,
    #[arg(long)]
    out_dir: PathBuf,
}

/// Builds the solver variant a command line asks for.
pub fn make_variant(
    name: VariantName,
    beta: f64,
    omega: Option<f64>,
    alpha: f64,
    seed: u64,
) -> Variant {
    match name {
        VariantName::Cyclic => Variant::Cyclic,
        VariantName::Rp => Variant::RandomPermutation { seed },
        VariantName::Gadmm => Variant::GaussianBackSubstitution { alpha },
        VariantName::Sadmm => Variant::SymmetricGaussSeidel {
            omega: omega.unwrap_or(beta),
        },
    }
}

/// One CSV row of a run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub iter: usize,
    pub primal_residual: f64,
    pub objective: f64,
    pub wall_ns: u128,
}

/// Result of a recorded run: every history row plus the outcome.
pub struct RecordedRun {
    pub records: Vec<RunRecord>,
    pub outcome: Result<model::SolverState>,
}

/// Runs a solver, timestamping each history entry as it appears.
pub fn record_run(
    p: &MultiBlockProblem,
    params: &SolverParams,
    x0: Vec<Vector>,
    lambda0: Vector,
) -> RecordedRun {
    let start = Instant::now();
    let mut records = Vec::new();
    let outcome = solvers::run_observed(p, params, x0, lambda0, |e: &HistoryEntry| {
        records.push(RunRecord {
            iter: e.iter,
            primal_residual: e.primal_residual,
            objective: e.objective,
            wall_ns: start.elapsed().as_nanos(),
        })
    });
    RecordedRun { records, outcome }
}

fn write_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "{header}")?;
    for row in rows {
        writeln!(w, "{row}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `iter,primal_residual,objective,wall_ns`.
pub fn write_history(path: &Path, records: &[RunRecord]) -> Result<()> {
    write_csv(
        path,
        "iter,primal_residual,objective,wall_ns",
        records.iter().map(|r| {
            format!(
                "{},{},{},{}",
                r.iter, r.primal_residual, r.objective, r.wall_ns
            )
        }),
    )
}

fn read_config(path: &Path) -> Result<ProblemConfig> {
    model::load_config(&fs::read_to_string(path)?)
}

fn start_point(p: &MultiBlockProblem, x0: Option<Vec<Vector>>) -> Vec<Vector> {
    x0.unwrap_or_else(|| p.block_dims().iter().map(|&d| Vector::zeros(d)).collect())
}

fn cmd_solve(args: SolveArgs) -> Result<i32> {
    let config = read_config(&args.config)?;
    let problem = match args.beta {
        Some(beta) => config.problem.with_beta(beta)?,
        None => config.problem,
    };
    let variant = make_variant(
        args.variant,
        problem.beta(),
        args.omega,
        args.alpha,
        args.seed,
    );
    let params = SolverParams::new(variant, args.iters, args.tol);
    let x0 = start_point(&problem, config.x0);
    let lambda0 = Vector::zeros(problem.dual_dim());
    let run = record_run(&problem, &params, x0, lambda0);
    match run.outcome {
        Ok(state) => {
            write_history(&args.out, &run.records)?;
            let last = state.last();
            if last.primal_residual > args.tol {
                warn!(
                    "stopped after {} iterations with primal residual {:e} above tol {:e}",
                    last.iter, last.primal_residual, args.tol
                );
            }
            println!(
                "{}: {} iterations, primal residual {:e}, objective {}",
                variant.name(),
                last.iter,
                last.primal_residual,
                last.objective
            );
            Ok(0)
        }
        Err(e @ Error::Diverged { .. }) => {
            write_history(&args.out, &run.records)?;
            eprintln!("{e}");
            Ok(EXIT_DIVERGED)
        }
        Err(e) => Err(e),
    }
}

/// Iteration map of `variant` in KKT coordinates. Randomly permuted ADMM uses the
/// expectation over all block orders.
pub fn iteration_map(p: &MultiBlockProblem, variant: Variant) -> Result<AffineMap> {
    let kkt = spectra::build_kkt(p)?;
    let n = p.primal_dim() + p.dual_dim();
    match variant {
        Variant::SymmetricGaussSeidel { omega } => {
            variant.validate(p.beta())?;
            spectra::sadmm_affine_map(&kkt, omega)
        }
        Variant::RandomPermutation { .. } => spectra::rp_expected_map(p),
        _ => spectra::extract_iteration_matrix(spectra::variant_stepper(p, variant)?, n),
    }
}

fn cmd_spectra(args: SpectraArgs) -> Result<i32> {
    let problem = read_config(&args.config)?.problem;
    let beta = problem.beta();
    let variant = make_variant(args.variant, beta, args.omega, args.alpha, DEFAULT_SEED);
    let map = iteration_map(&problem, variant)?;
    let spectrum = crate::densela::eigenvalues(&map.matrix)?;
    let rho = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let deflate = if args.deflate {
        spectra::dual_kernel_dim(&problem.stacked_a())
    } else {
        0
    };

    let mut report = String::new();
    writeln!(report, "variant: {}", variant.name()).ok();
    writeln!(report, "rho: {rho:.12}").ok();
    let mut code = 0;
    if let Variant::SymmetricGaussSeidel { omega } = variant {
        let kkt = spectra::build_kkt(&problem)?;
        let h = SgsSplit::with_blocks(&kkt.g, &kkt.block_dims)?.preconditioned()?;
        match spectra::theorem_map_check(&map.matrix, &h, omega / beta, deflate) {
            Ok(r) => {
                writeln!(
                    report,
                    "effective rho: {:.12} ({} deflated)",
                    r.effective_rho,
                    r.deflated.len()
                )
                .ok();
                writeln!(report, "c: {}", omega / beta).ok();
                writeln!(report, "lambda,xi").ok();
                for pair in &r.mapping_pairs {
                    writeln!(
                        report,
                        "{:.10}{:+.10}i,{:.10}{:+.10}i",
                        pair.lambda.re, pair.lambda.im, pair.xi.re, pair.xi.im
                    )
                    .ok();
                }
                writeln!(
                    report,
                    "boundary pairs (xi = 1): {}; complex roots: {}; near-double roots: {}",
                    r.boundary_pairs, r.complex_roots, r.backward_matches
                )
                .ok();
                writeln!(report, "theorem check: PASS").ok();
            }
            Err(e) => {
                writeln!(report, "theorem check: FAIL ({e})").ok();
                code = EXIT_DIVERGED;
            }
        }
    } else {
        writeln!(
            report,
            "theorem check: not applicable to {}",
            variant.name()
        )
        .ok();
    }
    print!("{report}");
    if let Some(out) = &args.out {
        write_csv(
            out,
            "index,re,im,modulus",
            spectrum
                .iter()
                .enumerate()
                .map(|(i, z)| format!("{i},{},{},{}", z.re, z.im, z.norm())),
        )?;
    }
    Ok(code)
}

struct Job {
    name: &'static str,
    variant: Variant,
}

fn repro_jobs(beta: f64) -> [Job; 3] {
    [
        Job {
            name: "sadmm",
            variant: Variant::SymmetricGaussSeidel { omega: beta },
        },
        Job {
            name: "rp",
            variant: Variant::RandomPermutation { seed: DEFAULT_SEED },
        },
        Job {
            name: "gadmm",
            variant: Variant::GaussianBackSubstitution {
                alpha: DEFAULT_ALPHA,
            },
        },
    ]
}

fn run_jobs(
    p: &MultiBlockProblem,
    x0: &[Vector],
    iters: usize,
    write: impl Fn(&str, &[RunRecord]) -> Result<()> + Sync,
) -> Result<i32> {
    let jobs = repro_jobs(p.beta());
    let outcomes: Vec<Result<bool>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|job| {
                let write = &write;
                scope.spawn(move || {
                    let params = SolverParams::new(job.variant, iters, 0.0);
                    let run = record_run(p, &params, x0.to_vec(), Vector::zeros(p.dual_dim()));
                    write(job.name, &run.records)?;
                    match run.outcome {
                        Ok(s) => {
                            info!(
                                "{}: residual {:e} after {} iterations",
                                job.name,
                                s.last().primal_residual,
                                s.iter
                            );
                            Ok(true)
                        }
                        Err(e @ Error::Diverged { .. }) => {
                            eprintln!("{}: {e}", job.name);
                            Ok(false)
                        }
                        Err(e) => Err(e),
                    }
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut code = 0;
    for outcome in outcomes {
        if !outcome? {
            code = EXIT_DIVERGED;
        }
    }
    Ok(code)
}

/// Writes the counterexample runs as `counterexample_{sadmm,rp,gadmm}.csv`.
pub fn repro_counterexample(out_dir: &Path) -> Result<i32> {
    let p = model::counterexample_problem(COUNTEREXAMPLE_BETA)?;
    run_jobs(
        &p,
        &model::counterexample_start(),
        COUNTEREXAMPLE_ITERS,
        |name, records| write_history(&out_dir.join(format!("counterexample_{name}.csv")), records),
    )
}

/// Writes `quadl1_{solver}_residual.csv` and `quadl1_{solver}_objective.csv` per solver.
pub fn repro_quadl1(out_dir: &Path) -> Result<i32> {
    let p = model::quadratic_l1_problem(QUADL1_BETA, QUADL1_TAU)?;
    let x0: Vec<Vector> = p.block_dims().iter().map(|&d| Vector::zeros(d)).collect();
    run_jobs(&p, &x0, QUADL1_ITERS, |name, records| {
        write_csv(
            &out_dir.join(format!("quadl1_{name}_residual.csv")),
            "iter,primal_residual,wall_ns",
            records
                .iter()
                .map(|r| format!("{},{},{}", r.iter, r.primal_residual, r.wall_ns)),
        )?;
        write_csv(
            &out_dir.join(format!("quadl1_{name}_objective.csv")),
            "iter,objective,wall_ns",
            records
                .iter()
                .map(|r| format!("{},{},{}", r.iter, r.objective, r.wall_ns)),
        )
    })
}

fn cmd_repro(args: ReproArgs) -> Result<i32> {
    let runner = match args.name.as_str() {
        "counterexample" => repro_counterexample,
        "quadl1" => repro_quadl1,
        other => {
            return Err(Error::UnknownExperiment(format!(
                "{other} (expected counterexample or quadl1)"
            )))
        }
    };
    fs::create_dir_all(&args.out_dir)?;
    runner(&args.out_dir)
}

fn init_logging() {
    let level = match std::env::var("MADMM_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = match cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Spectra(a) => cmd_spectra(a),
        Command::Repro(a) => cmd_repro(a),
    };
    outcome.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_INPUT
    })
}
