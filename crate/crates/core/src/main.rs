use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ibvp::problem::Problem;
use ibvp::rational::{self, Rational};
use ibvp::report::{self, csv_path, emit, to_json, write_csv, VerifyTolerances};
use ibvp::scheduler::Pattern;
use ibvp::value::EvalMode;

#[derive(Parser)]
#[command(name = "ibvp", version, about = "Positive-solution certificates and a Picard solver for coupled impulsive BVPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute all constants, check the index conditions and certify a rho-ladder.
    Analyze {
        file: PathBuf,
        #[command(flatten)]
        ladder: LadderArgs,
        /// Exact rational arithmetic wherever the data allow it (default).
        #[arg(long, conflicts_with = "numeric")]
        exact: bool,
        /// Floating-point arithmetic throughout.
        #[arg(long)]
        numeric: bool,
        /// Sample points per axis for box extrema without monotonicity hints.
        #[arg(long)]
        samples: Option<usize>,
        /// Treat sampled hypothesis failures as check failures.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve by damped Picard iteration from several constant starts.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        ladder: LadderArgs,
        /// Panels per smooth piece.
        #[arg(long)]
        grid_n: Option<usize>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        damping: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write t,u,v tables here (later solutions get a `_2`, `_3`, ... suffix).
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Check a solution table against the problem.
    Verify {
        file: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        /// Integral-equation and boundary residual tolerance.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct LadderArgs {
    /// Comma-separated radii, e.g. `1/8,1,11`.
    #[arg(long)]
    rho: Option<String>,
    /// S1..S6.
    #[arg(long)]
    pattern: Option<Pattern>,
}

impl LadderArgs {
    fn apply(&self, p: &mut Problem) -> Result<(), String> {
        if let Some(text) = &self.rho {
            let rho: Vec<Rational> = text
                .split(',')
                .map(|s| rational::parse(s.trim()).map_err(|e| format!("--rho: `{}`: {e}", s.trim())))
                .collect::<Result<_, _>>()?;
            p.analysis.ladder = Some(rho);
        }
        if let Some(pat) = self.pattern {
            p.analysis.pattern = Some(pat);
        }
        Ok(())
    }
}

fn load(path: &PathBuf) -> Result<Problem, ExitCode> {
    Problem::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn run(cli: Cli) -> Result<bool, ExitCode> {
    let input_error = |msg: String| {
        eprintln!("error: {msg}");
        ExitCode::from(2)
    };
    match cli.command {
        Command::Analyze { file, ladder, exact: _, numeric, samples, strict, out } => {
            let mut p = load(&file)?;
            ladder.apply(&mut p).map_err(input_error)?;
            if numeric {
                p.analysis.mode = EvalMode::Numeric;
            }
            if let Some(n) = samples {
                p.analysis.samples = n.max(2);
            }
            let r = report::run_analyze(&p).map_err(|e| input_error(e.to_string()))?;
            emit(&to_json(&r), out.as_deref()).map_err(|e| input_error(e.to_string()))?;
            for a in &r.certificates {
                match (&a.certificate, &a.failure) {
                    (Some(c), _) => eprintln!("certificate ({} c = {}): {} -> {}", a.c_source, a.c, c.pattern, c.conclusion),
                    (None, Some(f)) => eprintln!("no certificate ({} c = {}): {f}", a.c_source, a.c),
                    _ => {}
                }
            }
            for d in &r.discrepancies {
                eprintln!("discrepancy {}: printed {}, computed {}", d.key, d.printed, d.computed);
            }
            for h in r.hypotheses.checks.iter().filter(|h| !h.pass) {
                eprintln!(
                    "{}: equation {}: {} fails: {}",
                    if strict { "error" } else { "warning" },
                    h.equation,
                    h.statement,
                    h.witness.as_deref().unwrap_or("")
                );
            }
            Ok(r.passed(strict))
        }
        Command::Solve { file, ladder, grid_n, tol, damping, max_iter, out, csv } => {
            let mut p = load(&file)?;
            ladder.apply(&mut p).map_err(input_error)?;
            if let Some(n) = grid_n {
                p.solver.grid_n = n;
            }
            if let Some(t) = tol {
                p.solver.tol = t;
            }
            if let Some(d) = damping {
                if !(d > 0.0 && d <= 1.0) {
                    return Err(input_error(format!("--damping must lie in (0, 1], got {d}")));
                }
                p.solver.damping = d;
            }
            if let Some(m) = max_iter {
                p.solver.max_iter = m;
            }
            let r = report::run_solve(&p).map_err(|e| input_error(e.to_string()))?;
            emit(&to_json(&r), out.as_deref()).map_err(|e| input_error(e.to_string()))?;
            if let Some(base) = csv {
                for (k, s) in r.solutions.iter().enumerate() {
                    write_csv(&csv_path(&base, k), &s.u, &s.v).map_err(|e| input_error(e.to_string()))?;
                }
            }
            eprintln!("{} solution(s) from {} start(s)", r.solutions.len(), r.starts.len());
            Ok(r.passed())
        }
        Command::Verify { file, solution, tol, out } => {
            let p = load(&file)?;
            let mut t = VerifyTolerances::default();
            if let Some(x) = tol {
                t.integral = x;
                t.bc = x;
            }
            let r = report::run_verify(&p, &solution, t).map_err(|e| input_error(e.to_string()))?;
            emit(&to_json(&r), out.as_deref()).map_err(|e| input_error(e.to_string()))?;
            eprintln!("verification {}", if r.pass { "passed" } else { "failed" });
            Ok(r.pass)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(code) => code,
    }
}
