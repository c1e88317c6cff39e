//! Command-line interface: solve, verify, map, invmap, pgm, gen, bench.
//!
//! Documents travel as JSON on stdin/stdout (or files); `bench` emits CSV.
//! Exit codes: 0 success/pass, 1 invalid input, 2 computation failure or
//! failed certificate.

mod document;

use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use medsolve_core::certificates::{check_optimal, CertTolerances};
use medsolve_core::ensemble::{random_ensemble, success_probability};
use medsolve_core::gram::{build_gram, dual_basis};
use medsolve_core::oracles::{
    barrier_solve, bench_scaling, povm_from_dual, BarrierConfig, SolverKind,
};
use medsolve_core::rotation::{map_r, map_r_inverse, pgm};
use medsolve_core::solver::{homotopy_solve, newton_solve, povm_from_solution, SolverConfig};
use medsolve_core::{MedError, RankProfile};

use document::*;

#[derive(Parser)]
#[command(
    name = "medsolve",
    version,
    about = "Optimal measurements for minimum-error discrimination of linearly independent state ensembles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolverChoice {
    Newton,
    Homotopy,
    Barrier,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the optimal POVM of an ensemble and certify it
    Solve {
        /// Ensemble JSON file, or "-" for stdin
        #[arg(default_value = "-")]
        input: String,
        /// Certificate residual tolerance
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Iteration cap for the iterative solvers
        #[arg(long = "max-iter", default_value_t = 200)]
        max_iter: usize,
        #[arg(long, value_enum, default_value_t = SolverChoice::Newton)]
        solver: SolverChoice,
        /// Output file (default stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a candidate POVM against the optimality certificate
    Verify {
        /// Ensemble JSON file, or "-" for stdin
        ensemble: String,
        /// POVM JSON file
        povm: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map an ensemble to the image whose square-root measurement is optimal
    Map {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long = "max-iter", default_value_t = 200)]
        max_iter: usize,
        /// Solver used for the underlying solve (newton or homotopy)
        #[arg(long, value_enum, default_value_t = SolverChoice::Newton)]
        solver: SolverChoice,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Invert the ensemble map (closed form, no solve)
    Invmap {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Square-root (pretty good) measurement of an ensemble
    Pgm {
        #[arg(default_value = "-")]
        input: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a random ensemble with the given rank profile
    Gen {
        /// Comma-separated ranks, non-increasing, e.g. 2,1
        #[arg(long, value_delimiter = ',', required = true)]
        profile: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time the solvers on random instances and emit CSV
    Bench {
        /// Comma-separated dimensions, e.g. 4,8,12
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        /// Comma-separated subset of newton,homotopy,barrier
        #[arg(long, value_delimiter = ',', default_values_t = vec!["newton".to_string(), "barrier".to_string()])]
        solvers: Vec<String>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with the exit code it maps to.
enum CmdError {
    /// Unreadable or invalid input: exit 1.
    Input(ErrorDocument),
    /// Computation failed: exit 2.
    Compute(ErrorDocument),
}

impl CmdError {
    fn input(e: MedError) -> Self {
        CmdError::Input(ErrorDocument::from_error(&e))
    }

    fn compute(e: MedError) -> Self {
        CmdError::Compute(ErrorDocument::from_error(&e))
    }
}

type CmdResult = Result<(String, u8), CmdError>;

fn read_input(path: &str) -> Result<String, CmdError> {
    if path == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf).map_err(|e| {
            CmdError::Input(ErrorDocument::parse_failure(format!(
                "cannot read stdin: {e}"
            )))
        })?;
        Ok(buf)
    } else {
        std::fs::read_to_string(path).map_err(|e| {
            CmdError::Input(ErrorDocument::parse_failure(format!(
                "cannot read {path}: {e}"
            )))
        })
    }
}

fn parse_ensemble(path: &str) -> Result<medsolve_core::Ensemble64, CmdError> {
    let raw = read_input(path)?;
    let doc: EnsembleDocument = serde_json::from_str(&raw)
        .map_err(|e| CmdError::Input(ErrorDocument::parse_failure(e.to_string())))?;
    ensemble_from_document(&doc).map_err(CmdError::input)
}

fn solver_config(tol: f64, max_iter: usize) -> SolverConfig<f64> {
    SolverConfig {
        tol: (tol * 1e-3).clamp(1e-14, 1e-8),
        max_iters: max_iter,
        ..SolverConfig::default()
    }
}

struct SolveOutput {
    povm: medsolve_core::Povm64,
    residual: f64,
    iterations: usize,
}

fn run_solver(
    e: &medsolve_core::Ensemble64,
    solver: SolverChoice,
    tol: f64,
    max_iter: usize,
) -> Result<SolveOutput, CmdError> {
    match solver {
        SolverChoice::Newton | SolverChoice::Homotopy => {
            let d = e.decompose().map_err(CmdError::compute)?;
            let g = build_gram(&d).map_err(CmdError::compute)?;
            let cfg = solver_config(tol, max_iter);
            let sol = match solver {
                SolverChoice::Newton => newton_solve(&g, &cfg, None),
                _ => homotopy_solve(&g, &cfg),
            }
            .map_err(CmdError::compute)?;
            let dual = dual_basis(&d, &g).map_err(CmdError::compute)?;
            let povm = povm_from_solution(&sol, &d, &dual).map_err(CmdError::compute)?;
            Ok(SolveOutput {
                povm,
                residual: sol.residual,
                iterations: sol.iterations,
            })
        }
        SolverChoice::Barrier => {
            let (z, trace, iterations) =
                barrier_solve(e, &BarrierConfig::default()).map_err(CmdError::compute)?;
            let povm = povm_from_dual(e, &z).map_err(CmdError::compute)?;
            let ps = success_probability(e, &povm).map_err(CmdError::compute)?;
            Ok(SolveOutput {
                povm,
                residual: (trace - ps).abs(),
                iterations,
            })
        }
    }
}

fn cmd_solve(input: &str, tol: f64, max_iter: usize, solver: SolverChoice) -> CmdResult {
    let e = parse_ensemble(input)?;
    let solved = run_solver(&e, solver, tol, max_iter)?;
    let tols = CertTolerances {
        residual: tol,
        positivity: 1e-10,
    };
    let cert = check_optimal(&e, &solved.povm, &tols).map_err(CmdError::compute)?;
    let ps = cert.p_success;
    let doc = SolutionDocument {
        povm: document_from_povm(&solved.povm).elements,
        p_success: ps,
        residual: solved.residual,
        iterations: solved.iterations,
        certificate: document_from_certificate(&cert),
    };
    let code = if cert.passed { 0 } else { 2 };
    Ok((to_json(&doc), code))
}

fn cmd_verify(ensemble: &str, povm: &str, tol: f64) -> CmdResult {
    let e = parse_ensemble(ensemble)?;
    let raw = read_input(povm)?;
    let doc: PovmDocument = serde_json::from_str(&raw)
        .map_err(|err| CmdError::Input(ErrorDocument::parse_failure(err.to_string())))?;
    let pov = povm_from_document(&doc, e.profile()).map_err(CmdError::input)?;
    let tols = CertTolerances {
        residual: tol,
        positivity: 1e-10,
    };
    let cert = check_optimal(&e, &pov, &tols).map_err(CmdError::compute)?;
    let code = if cert.passed { 0 } else { 2 };
    Ok((to_json(&document_from_certificate(&cert)), code))
}

fn cmd_map(input: &str, tol: f64, max_iter: usize, solver: SolverChoice) -> CmdResult {
    if solver == SolverChoice::Barrier {
        return Err(CmdError::Input(ErrorDocument::parse_failure(
            "map needs a primal solver (newton or homotopy)".into(),
        )));
    }
    let e = parse_ensemble(input)?;
    let d = e.decompose().map_err(CmdError::compute)?;
    let g = build_gram(&d).map_err(CmdError::compute)?;
    let cfg = solver_config(tol, max_iter);
    let sol = match solver {
        SolverChoice::Newton => newton_solve(&g, &cfg, None),
        _ => homotopy_solve(&g, &cfg),
    }
    .map_err(CmdError::compute)?;
    let mapped = map_r(&e, &sol, &d).map_err(CmdError::compute)?;
    Ok((to_json(&document_from_ensemble(&mapped.ensemble, None)), 0))
}

fn cmd_invmap(input: &str) -> CmdResult {
    let e = parse_ensemble(input)?;
    let back = map_r_inverse(&e).map_err(CmdError::compute)?;
    Ok((to_json(&document_from_ensemble(&back, None)), 0))
}

fn cmd_pgm(input: &str) -> CmdResult {
    let e = parse_ensemble(input)?;
    let povm = pgm(&e).map_err(CmdError::compute)?;
    Ok((to_json(&document_from_povm(&povm)), 0))
}

fn cmd_gen(profile: &[usize], seed: u64) -> CmdResult {
    let profile = RankProfile::new(profile.to_vec()).map_err(CmdError::input)?;
    let e = random_ensemble::<f64>(&profile, seed).map_err(CmdError::compute)?;
    Ok((to_json(&document_from_ensemble(&e, Some(seed))), 0))
}

fn cmd_bench(sizes: &[usize], repeats: usize, solvers: &[String], seed: u64) -> CmdResult {
    if sizes.is_empty() || repeats == 0 {
        return Err(CmdError::Input(ErrorDocument::parse_failure(
            "bench needs at least one size and one repeat".into(),
        )));
    }
    let kinds = solvers
        .iter()
        .map(|s| {
            SolverKind::parse(s).ok_or_else(|| {
                CmdError::Input(ErrorDocument::parse_failure(format!(
                    "unknown solver '{s}' (expected newton, homotopy or barrier)"
                )))
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let profiles = sizes
        .iter()
        .map(|&n| bench_profile(n))
        .collect::<Result<Vec<_>, _>>()?;
    let report =
        bench_scaling::<f64>(&profiles, repeats, seed, &kinds).map_err(CmdError::compute)?;
    Ok((report.to_csv(), 0))
}

/// One mixed state plus pure states: `(2, 1, ..., 1)` for `n >= 3`.
fn bench_profile(n: usize) -> Result<RankProfile, CmdError> {
    let ranks = match n {
        0 => {
            return Err(CmdError::Input(ErrorDocument::parse_failure(
                "sizes must be positive".into(),
            )))
        }
        1 => vec![1],
        2 => vec![1, 1],
        _ => {
            let mut r = vec![2];
            r.extend(std::iter::repeat_n(1, n - 2));
            r
        }
    };
    RankProfile::new(ranks).map_err(CmdError::input)
}

fn write_output(out: Option<&PathBuf>, payload: &str) -> Result<(), String> {
    match out {
        Some(path) => std::fs::write(path, payload)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (out_path, result) = match &cli.command {
        Command::Solve {
            input,
            tol,
            max_iter,
            solver,
            out,
        } => (out.clone(), cmd_solve(input, *tol, *max_iter, *solver)),
        Command::Verify {
            ensemble,
            povm,
            tol,
            out,
        } => (out.clone(), cmd_verify(ensemble, povm, *tol)),
        Command::Map {
            input,
            tol,
            max_iter,
            solver,
            out,
        } => (out.clone(), cmd_map(input, *tol, *max_iter, *solver)),
        Command::Invmap { input, out } => (out.clone(), cmd_invmap(input)),
        Command::Pgm { input, out } => (out.clone(), cmd_pgm(input)),
        Command::Gen { profile, seed, out } => (out.clone(), cmd_gen(profile, *seed)),
        Command::Bench {
            sizes,
            repeats,
            solvers,
            seed,
            out,
        } => (out.clone(), cmd_bench(sizes, *repeats, solvers, *seed)),
    };

    let (payload, code) = match result {
        Ok((payload, code)) => (payload, code),
        Err(CmdError::Input(doc)) => (to_json(&doc), 1),
        Err(CmdError::Compute(doc)) => (to_json(&doc), 2),
    };
    if let Err(msg) = write_output(out_path.as_ref(), &payload) {
        eprintln!("{msg}");
        return ExitCode::from(1);
    }
    ExitCode::from(code)
}
