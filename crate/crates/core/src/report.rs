//! The `analyze`, `solve` and `verify` pipelines and their reports.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::cone::{cone_constants, pair_membership, ConeData, Membership};
use crate::conditions::{
    check_hypotheses, default_w_max, ConditionContext, ConditionError, ConditionKind, ConditionReport,
    EquationConstants, HypothesisReport, PreconditionReport,
};
use crate::grid::{Grid, PiecewiseGridFunction};
use crate::impulse::ImpulseCoefficients;
use crate::problem::{Assumption, Equation, Problem, Reference};
use crate::rational::{self, int, Rat, Rational};
use crate::scheduler::{certify, search_ladder, Certificate, Pattern};
use crate::solver::{multi_start, residuals, start_values, Operator, PicardSettings, Residuals, SolutionPair, StartOutcome};
use crate::value::{EvalMode, Value};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Condition(#[from] ConditionError),
    #[error("hypothesis sampling: {0}")]
    Hypothesis(crate::expr::EvalError),
    #[error(transparent)]
    Solver(#[from] crate::solver::SolverError),
    #[error("solution file: {0}")]
    Solution(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct BasisSection {
    pub equation: usize,
    pub gamma: String,
    pub delta: String,
    pub wronskian: Rat,
    pub tau: Rat,
    pub window: (Rat, Rat),
    pub impulse_coefficients: ImpulseCoefficients,
}

#[derive(Debug, Clone, Serialize)]
pub struct FunctionalSection {
    pub equation: usize,
    pub alpha_tilde_gamma: Value,
    pub alpha_tilde_delta: Value,
    pub alpha_bar_gamma: Value,
    pub beta_mass: Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct ThresholdSection {
    pub equation: usize,
    /// Largest admissible `f^{0,rho}` (I1).
    pub i1: Option<Value>,
    /// Smallest admissible lower f-extremum (I0 and I0*).
    pub i0: Option<Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub key: String,
    pub reference: String,
    pub computed: Value,
    pub tolerance: Rat,
    pub agree: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub key: String,
    pub printed: String,
    pub computed: Value,
    pub trace: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CertificateAttempt {
    /// `computed` or `override`.
    pub c_source: &'static str,
    pub c: Rat,
    pub pattern: Pattern,
    pub rho: Vec<Rat>,
    pub certificate: Option<Certificate>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchResult {
    pub pattern: Pattern,
    pub c: Rat,
    pub grid: Vec<Rat>,
    pub certificate: Option<Certificate>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeReport {
    pub problem: String,
    pub mode: EvalMode,
    pub basis: Vec<BasisSection>,
    pub cone: ConeData,
    pub bound_constants: [EquationConstants; 2],
    pub augmented_functionals: Vec<FunctionalSection>,
    pub thresholds: Vec<ThresholdSection>,
    pub precondition: PreconditionReport,
    pub hypotheses: HypothesisReport,
    pub conditions: Vec<ConditionReport>,
    pub certificates: Vec<CertificateAttempt>,
    pub search: Option<SearchResult>,
    pub comparisons: Vec<Comparison>,
    pub discrepancies: Vec<Discrepancy>,
    pub pass: bool,
}

impl AnalyzeReport {
    /// Whether every certificate attempt succeeded and the precondition holds;
    /// with `strict`, the sampled hypotheses must also hold.
    pub fn passed(&self, strict: bool) -> bool {
        self.pass && (!strict || self.hypotheses.pass)
    }

    pub fn certificate(&self, c_source: &str) -> Option<&Certificate> {
        self.certificates.iter().find(|a| a.c_source == c_source)?.certificate.as_ref()
    }
}

fn basis_section(eq: &Equation) -> BasisSection {
    BasisSection {
        equation: eq.index,
        gamma: eq.basis.gamma.to_string(),
        delta: eq.basis.delta.to_string(),
        wronskian: Rat(eq.basis.wronskian.clone()),
        tau: Rat(eq.tau().clone()),
        window: (Rat(eq.window.0.clone()), Rat(eq.window.1.clone())),
        impulse_coefficients: eq.impulse_coeffs.clone(),
    }
}

/// Computed value for a reference key such as `m_1` or `threshold_I1_2`.
fn lookup(key: &str, ctx: &ConditionContext, cone: &ConeData) -> Option<Value> {
    if key == "c" {
        return Some(Value::Exact(cone.c.0.clone()));
    }
    let (name, idx) = key.rsplit_once('_')?;
    let i: usize = idx.parse().ok().filter(|i| (1..=2).contains(i))?;
    let k = &ctx.constants[i - 1];
    let coeffs = &ctx.problem.equations[i - 1].impulse_coeffs;
    let ex = |r: &Rat| Some(Value::Exact(r.0.clone()));
    match name {
        "alpha_tilde_gamma" => Some(k.alpha_tilde_gamma.clone()),
        "alpha_tilde_delta" => Some(k.alpha_tilde_delta.clone()),
        "alpha_bar_gamma" => Some(k.alpha_bar_gamma.clone()),
        "beta_mass" => Some(k.beta_mass.clone()),
        "int_K_tilde" => Some(k.int_k_tilde.clone()),
        "int_K_bar" => Some(k.int_k_bar.clone()),
        "m" => k.m(),
        "M" => k.big_m(),
        "d1" => ex(&coeffs.d1),
        "e1" => ex(&coeffs.e1),
        "d2" => ex(&coeffs.d2),
        "e2" => ex(&coeffs.e2),
        "threshold_I1" => ctx.i1_threshold(i - 1),
        "threshold_I0" | "threshold_I0_star" => ctx.i0_threshold(i - 1),
        _ => None,
    }
}

fn agrees(computed: &Value, reference: &Reference) -> bool {
    let tol = reference.tolerance();
    match computed {
        Value::Exact(r) if tol == int(0) => r == reference.value(),
        _ => (computed.to_f64() - rational::to_f64(reference.value())).abs() <= rational::to_f64(&tol),
    }
}

/// One-line derivation of a computed quantity.
fn trace(key: &str, ctx: &ConditionContext, cone: &ConeData) -> String {
    let split = key.rsplit_once('_').and_then(|(n, i)| Some((n, i.parse::<usize>().ok()?)));
    match (key, split) {
        ("c", _) => cone.trace.clone(),
        (_, Some((name @ ("alpha_tilde_delta" | "alpha_tilde_gamma"), i))) if (1..=2).contains(&i) => {
            let eq = &ctx.problem.equations[i - 1];
            let (label, poly, at_tau) = if name == "alpha_tilde_delta" {
                ("delta", &eq.basis.delta, eq.basis.delta_at(eq.tau()))
            } else {
                ("gamma", &eq.basis.gamma, eq.basis.gamma_at(eq.tau()))
            };
            let base = eq.alpha.apply(poly).map(|v| v.to_string()).unwrap_or_else(|e| e.to_string());
            let value = lookup(key, ctx, cone).map(|v| v.to_string()).unwrap_or_default();
            format!(
                "alpha~{i}[{label}{i}] = h2*alpha[{label}] + p12*{label}(tau) = {}*{} + {}*{} = {}",
                rational::format(&eq.h2),
                base,
                rational::format(&eq.impulse.p12),
                rational::format(&at_tau),
                value
            )
        }
        _ => match lookup(key, ctx, cone) {
            Some(Value::Exact(r)) => format!("{key} = {} = {:.6}", rational::format(&r), rational::to_f64(&r)),
            Some(v) => format!("{key} = {v}"),
            None => format!("{key}: unknown quantity"),
        },
    }
}

pub fn run_analyze(problem: &Problem) -> Result<AnalyzeReport, ReportError> {
    let ctx = ConditionContext::for_problem(problem)?;
    let cone = cone_constants(problem);
    let c = cone.c.0.clone();

    let basis = problem.equations.iter().map(basis_section).collect();
    let augmented_functionals = (0..2)
        .map(|i| {
            let k = &ctx.constants[i];
            FunctionalSection {
                equation: i + 1,
                alpha_tilde_gamma: k.alpha_tilde_gamma.clone(),
                alpha_tilde_delta: k.alpha_tilde_delta.clone(),
                alpha_bar_gamma: k.alpha_bar_gamma.clone(),
                beta_mass: k.beta_mass.clone(),
            }
        })
        .collect();
    let thresholds = (0..2)
        .map(|i| ThresholdSection { equation: i + 1, i1: ctx.i1_threshold(i), i0: ctx.i0_threshold(i) })
        .collect();
    let precondition = ctx.check_precondition();
    let hypotheses = check_hypotheses(problem, &default_w_max(problem, &c)).map_err(ReportError::Hypothesis)?;

    let mut c_values: Vec<(&'static str, Rational)> = vec![("computed", c.clone())];
    if let Some(o) = &problem.analysis.override_c {
        c_values.push(("override", o.clone()));
    }

    let mut conditions = Vec::new();
    if let Some(ladder) = &problem.analysis.ladder {
        for (_, cv) in &c_values {
            for rho in ladder {
                for kind in [ConditionKind::I1, ConditionKind::I0, ConditionKind::I0Star] {
                    conditions.push(ctx.check(kind, rho, cv)?);
                }
            }
        }
    }

    let mut certificates = Vec::new();
    if let (Some(pattern), Some(ladder)) = (problem.analysis.pattern, &problem.analysis.ladder) {
        for (source, cv) in &c_values {
            let (certificate, failure) = if !precondition.pass {
                (None, Some(format!("{} fails", Assumption::Precondition.title())))
            } else {
                match certify(&ctx, pattern, ladder, cv) {
                    Ok(cert) => (Some(cert), None),
                    Err(e) => (None, Some(e.to_string())),
                }
            };
            certificates.push(CertificateAttempt {
                c_source: source,
                c: Rat(cv.clone()),
                pattern,
                rho: ladder.iter().cloned().map(Rat).collect(),
                certificate,
                failure,
            });
        }
    }

    let search = match (problem.analysis.pattern, &problem.analysis.search) {
        (Some(pattern), Some(grid)) => {
            let pts = grid.points();
            let certificate = search_ladder(&ctx, pattern, &pts, &c)?;
            Some(SearchResult { pattern, c: Rat(c.clone()), grid: pts.into_iter().map(Rat).collect(), certificate })
        }
        _ => None,
    };

    let mut comparisons = Vec::new();
    let mut discrepancies = Vec::new();
    for (key, reference) in &problem.analysis.reference {
        let Some(computed) = lookup(key, &ctx, &cone) else {
            continue;
        };
        let agree = agrees(&computed, reference);
        let shown = reference.text().to_string();
        if !agree {
            discrepancies.push(Discrepancy {
                key: key.clone(),
                printed: shown.clone(),
                computed: computed.clone(),
                trace: trace(key, &ctx, &cone),
            });
        }
        comparisons.push(Comparison { key: key.clone(), reference: shown, computed, tolerance: Rat(reference.tolerance()), agree });
    }

    let pass = precondition.pass && certificates.iter().all(|a| a.certificate.is_some());
    Ok(AnalyzeReport {
        problem: problem.name.clone(),
        mode: ctx.mode,
        basis,
        cone,
        bound_constants: ctx.constants.clone(),
        augmented_functionals,
        thresholds,
        precondition,
        hypotheses,
        conditions,
        certificates,
        search,
        comparisons,
        discrepancies,
        pass,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub problem: String,
    pub grid_n: usize,
    pub grid_entries: usize,
    pub damping: f64,
    pub tol: f64,
    pub c: Rat,
    /// Lower bound from a certificate, when the problem carries one.
    pub certified_min_solutions: Option<usize>,
    pub starts: Vec<StartOutcome>,
    pub solutions: Vec<SolutionPair>,
    pub note: String,
}

impl SolveReport {
    pub fn passed(&self) -> bool {
        !self.solutions.is_empty()
    }
}

/// Solves from the configured starts and returns the report plus the solutions.
pub fn run_solve(problem: &Problem) -> Result<SolveReport, ReportError> {
    let cone = cone_constants(problem);
    let c = cone.c.0.clone();
    let op = Operator::new(problem, problem.solver.grid_n)?;
    let certified = match (problem.analysis.pattern, &problem.analysis.ladder) {
        (Some(pattern), Some(ladder)) => {
            let ctx = ConditionContext::for_problem(problem)?;
            certify(&ctx, pattern, ladder, &c).ok()
        }
        _ => None,
    };
    let starts = match (&problem.solver.starts, &problem.analysis.ladder) {
        (Some(s), _) => s.clone(),
        (None, Some(ladder)) => start_values(ladder),
        (None, None) => vec![0.5],
    };
    let ms = multi_start(&op, &starts, &c, PicardSettings::from_problem(problem));
    let note = "Picard iteration converges only to attracting fixed points; solutions separated by index-0 \
                regions can repel the iterates, so fewer solutions than certified may be found."
        .to_string();
    Ok(SolveReport {
        problem: problem.name.clone(),
        grid_n: problem.solver.grid_n,
        grid_entries: op.grid.len(),
        damping: problem.solver.damping,
        tol: problem.solver.tol,
        c: Rat(c),
        certified_min_solutions: certified.map(|c| c.min_solutions),
        starts: ms.starts,
        solutions: ms.solutions,
        note,
    })
}

/// `x` with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&mag) {
        return format!("{x:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_csv(path: &Path, u: &PiecewiseGridFunction, v: &PiecewiseGridFunction) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| ReportError::Solution(e.to_string()))?;
    let err = |e: csv::Error| ReportError::Solution(e.to_string());
    w.write_record(["t", "u", "v"]).map_err(err)?;
    for (k, &t) in u.grid.nodes().iter().enumerate() {
        w.write_record([sig12(t), sig12(u.values[k]), sig12(v.values[k])]).map_err(err)?;
    }
    w.flush()?;
    Ok(())
}

/// Path for the `k`-th solution: the given path for the first, `stem_k.ext` after.
pub fn csv_path(base: &Path, k: usize) -> std::path::PathBuf {
    if k == 0 {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("solution");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}_{}.{ext}", k + 1))
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub entries: usize,
    pub residuals: Residuals,
    pub membership: [Membership; 2],
    pub nonnegative: bool,
    pub tolerances: VerifyTolerances,
    pub pass: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct VerifyTolerances {
    pub integral: f64,
    pub jump: f64,
    pub bc: f64,
}

impl Default for VerifyTolerances {
    fn default() -> Self {
        VerifyTolerances { integral: 1e-6, jump: 1e-8, bc: 1e-6 }
    }
}

/// Reads a `t,u,v` table; every impulse point must appear twice.
pub fn read_solution(problem: &Problem, path: &Path) -> Result<(PiecewiseGridFunction, PiecewiseGridFunction), ReportError> {
    let bad = |m: String| ReportError::Solution(m);
    let mut rd = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let headers = rd.headers().map_err(|e| bad(e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["t", "u", "v"] {
        return Err(bad(format!("expected header t,u,v, found {}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut rows = Vec::new();
    for (line, rec) in rd.records().enumerate() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |j: usize| -> Result<f64, ReportError> {
            rec.get(j)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .ok_or_else(|| bad(format!("row {}: column {} is not a number", line + 2, j + 1)))
        };
        rows.push((num(0)?, num(1)?, num(2)?));
    }
    let taus = problem.taus();
    let snap = |t: f64| -> Result<Rational, ReportError> {
        if let Some(tau) = taus.iter().find(|tau| (rational::to_f64(tau) - t).abs() < 1e-10) {
            return Ok(tau.clone());
        }
        rational::from_f64(t).ok_or_else(|| bad(format!("non-finite t = {t}")))
    };
    let positions: Vec<Rational> = rows.iter().map(|r| snap(r.0)).collect::<Result<_, _>>()?;
    let grid = Arc::new(Grid::from_positions(positions.clone(), &taus));
    if grid.exact_nodes() != positions.as_slice() {
        return Err(bad(format!(
            "t column must be increasing on [0,1], include both ends and list each impulse point twice ({} rows, {} expected)",
            rows.len(),
            grid.len()
        )));
    }
    let u = PiecewiseGridFunction::new(grid.clone(), rows.iter().map(|r| r.1).collect());
    let v = PiecewiseGridFunction::new(grid, rows.iter().map(|r| r.2).collect());
    Ok((u, v))
}

pub fn run_verify(problem: &Problem, path: &Path, tol: VerifyTolerances) -> Result<VerifyReport, ReportError> {
    let (u, v) = read_solution(problem, path)?;
    let op = Operator::on_grid(problem, u.grid.clone());
    let residuals = residuals(&op, &u, &v)?;
    let c = cone_constants(problem).c.0;
    let membership = pair_membership(problem, &u, &v, &c, crate::solver::CONE_TOL.max(tol.integral));
    let nonnegative = u.values.iter().chain(&v.values).all(|&x| x >= -tol.integral);
    let r = &residuals;
    let pass = r.max_integral() < tol.integral
        && r.jump_value.iter().chain(&r.jump_slope).all(|&x| x < tol.jump.max(tol.integral))
        && r.bc_left.iter().chain(&r.bc_right).all(|&x| x < tol.bc)
        && membership.iter().all(|m| m.pass)
        && nonnegative;
    Ok(VerifyReport { entries: u.grid.len(), residuals, membership, nonnegative, tolerances: tol, pass })
}

/// Pretty JSON followed by a newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text),
        None => std::io::stdout().write_all(text.as_bytes()),
    }
}
