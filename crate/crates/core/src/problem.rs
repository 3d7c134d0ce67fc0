//! Problem files: JSON schema, loading and structural validation.
//!
//! ```json
//! {
//!   "name": "example",
//!   "equations": [
//!     {
//!       "bc": {"a1": 1, "b1": 0, "a2": 1, "b2": 0},
//!       "f": "(u^3 + t^3*v^3)/8 + 2",
//!       "f_monotone": {"t": "increasing", "u": "increasing", "v": "increasing"},
//!       "g": "1",
//!       "impulse": {"tau": "1/5", "I": "w/100", "N": "-(3/100)*w",
//!                   "p11": "1/70", "p12": "1/50", "p22": "1/40"},
//!       "H": {"expr": "(5/6)*w", "h1": "1/3", "h2": "5/6"},
//!       "L": {"expr": "w/15", "l2": "1/15"},
//!       "alpha": {"atoms": [{"at": "1/4", "weight": 1}]},
//!       "beta": {"atoms": [{"at": "3/4", "weight": 1}], "density": "s"},
//!       "window": ["1/4", "3/4"]
//!     },
//!     { ... }
//!   ],
//!   "analysis": {"rho": ["1/8", 1, 11], "pattern": "S3", "override_c": "1/4"},
//!   "solver": {"grid_n": 200, "damping": 0.5, "tol": 1e-12}
//! }
//! ```
//!
//! Rationals may be written as `"p/q"` strings, decimal strings or JSON numbers.
//! `alpha` and `H` act on the equation's own unknown; `beta` and `L` act on the
//! other unknown.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::expr::{Expression, Var};
use crate::impulse::{impulse_coeffs, ImpulseCoefficients, ImpulseSpec};
use crate::measures::{Atom, StieltjesMeasure};
use crate::rational::{self, int, Rat, Rational};
use crate::scheduler::Pattern;
use crate::sl_kernel::{interval_constants, make_basis, BoundaryBasis, GreenKernel, IntervalConstants, SlCoefficients};
use crate::value::EvalMode;

/// Standing hypotheses on the data; every validation message names one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    Nonlinearity,
    BoundaryOperator,
    KernelWindow,
    Weight,
    Functionals,
    BoundaryGrowth,
    BasisPositivity,
    ImpulseGrowth,
    Precondition,
    Input,
}

impl Assumption {
    pub fn title(self) -> &'static str {
        match self {
            Assumption::Nonlinearity => "nonlinearity f_i: nonnegative and bounded on bounded sets",
            Assumption::BoundaryOperator => "boundary coefficients: nonnegative, nonresonant",
            Assumption::KernelWindow => "kernel window [a_i,b_i] in (tau_i,1] with c_Phi_i in (0,1]",
            Assumption::Weight => "weight g_i: nonnegative with positive integral of Phi_i g_i over the window",
            Assumption::Functionals => "functionals alpha_i, beta_i: positive measures continuous at tau_i",
            Assumption::BoundaryGrowth => "growth of H_i, L_i: h_i1 w <= H_i(w) <= h_i2 w, L_i(w) <= l_i2 w",
            Assumption::BasisPositivity => "basis gamma_i, delta_i: nonnegative with c_gamma_i, c_delta_i in (0,1]",
            Assumption::ImpulseGrowth => "impulse growth: p_i11 w <= (d1 I + e1 N)(w) <= p_i12 w, 0 <= (d2 I + e2 N)(w) <= p_i22 w",
            Assumption::Precondition => "standing assumption alpha~_i[gamma_i] < 1",
            Assumption::Input => "input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    /// 1-based equation index, if the problem is specific to one equation.
    pub equation: Option<usize>,
    pub assumption: Assumption,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(i) = self.equation {
            write!(f, "equation {i}: ")?;
        }
        write!(f, "{} [{}]", self.message, self.assumption.title())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed problem file: {0}")]
    Syntax(String),
    #[error("invalid problem ({} violation(s)):\n{}", .0.len(), .0.iter().map(|v| format!("  - {v}")).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

// ---------- raw file schema ----------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    #[serde(default)]
    name: String,
    equations: Vec<RawEquation>,
    #[serde(default)]
    analysis: RawAnalysis,
    #[serde(default)]
    solver: RawSolver,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEquation {
    bc: RawBc,
    f: String,
    #[serde(default)]
    f_monotone: BTreeMap<String, Monotone>,
    #[serde(default = "one_text")]
    g: String,
    impulse: RawImpulse,
    #[serde(rename = "H")]
    h: RawH,
    #[serde(rename = "L")]
    l: RawL,
    #[serde(default)]
    alpha: RawMeasure,
    #[serde(default)]
    beta: RawMeasure,
    window: (Rat, Rat),
}

fn one_text() -> String {
    "1".to_string()
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBc {
    a1: Rat,
    b1: Rat,
    a2: Rat,
    b2: Rat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawImpulse {
    tau: Rat,
    #[serde(rename = "I")]
    i: String,
    #[serde(rename = "N")]
    n: String,
    p11: Rat,
    p12: Rat,
    p22: Rat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawH {
    expr: String,
    h1: Rat,
    h2: Rat,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawL {
    expr: String,
    l2: Rat,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<RawAtom>,
    density: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAtom {
    at: Rat,
    weight: Rat,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnalysis {
    rho: Option<Vec<Rat>>,
    pattern: Option<Pattern>,
    search: Option<RawSearch>,
    override_c: Option<Rat>,
    #[serde(default)]
    mode: Option<String>,
    samples: Option<usize>,
    w_max: Option<Rat>,
    #[serde(default)]
    reference: BTreeMap<String, Reference>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSearch {
    grid: Option<Vec<Rat>>,
    lo: Option<Rat>,
    ratio: Option<Rat>,
    count: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    grid_n: Option<usize>,
    damping: Option<f64>,
    tol: Option<f64>,
    max_iter: Option<usize>,
    starts: Option<Vec<f64>>,
}

// ---------- validated problem ----------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Monotone {
    Increasing,
    Decreasing,
}

/// A published value to compare a computed quantity against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reference {
    Exact(Written),
    WithTolerance { value: Written, tol: Rat },
}

/// A number together with the text it was written as (`634/3000` stays unreduced).
#[derive(Debug, Clone, PartialEq)]
pub struct Written {
    pub value: Rational,
    pub text: String,
}

impl Serialize for Written {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Written {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Int(i64),
            Float(f64),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Text(s) => s.trim().to_string(),
            Raw::Int(n) => n.to_string(),
            Raw::Float(x) => x.to_string(),
        };
        let value = rational::parse(&text).map_err(serde::de::Error::custom)?;
        Ok(Written { value, text })
    }
}

impl Reference {
    pub fn value(&self) -> &Rational {
        match self {
            Reference::Exact(v) | Reference::WithTolerance { value: v, .. } => &v.value,
        }
    }

    /// The value as written in the problem file.
    pub fn text(&self) -> &str {
        match self {
            Reference::Exact(v) | Reference::WithTolerance { value: v, .. } => &v.text,
        }
    }

    pub fn tolerance(&self) -> Rational {
        match self {
            Reference::Exact(_) => Rational::zero(),
            Reference::WithTolerance { tol, .. } => tol.0.clone(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Equation {
    pub index: usize,
    pub basis: BoundaryBasis,
    pub kernel: GreenKernel,
    pub f: Expression,
    /// Declared monotonicity in `t`, `u`, `v`.
    pub f_monotone: [Option<Monotone>; 3],
    pub g: Expression,
    pub impulse: ImpulseSpec,
    pub impulse_coeffs: ImpulseCoefficients,
    pub h: Expression,
    pub h1: Rational,
    pub h2: Rational,
    pub l: Expression,
    pub l2: Rational,
    pub alpha: StieltjesMeasure,
    pub beta: StieltjesMeasure,
    pub window: (Rational, Rational),
    pub window_constants: IntervalConstants,
}

impl Equation {
    pub fn tau(&self) -> &Rational {
        &self.impulse.tau
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SearchGrid {
    Explicit(Vec<Rational>),
    Geometric { lo: Rational, ratio: Rational, count: usize },
}

impl SearchGrid {
    pub fn points(&self) -> Vec<Rational> {
        match self {
            SearchGrid::Explicit(v) => v.clone(),
            SearchGrid::Geometric { lo, ratio, count } => {
                let mut out = Vec::with_capacity(*count);
                let mut x = lo.clone();
                for _ in 0..*count {
                    out.push(x.clone());
                    x *= ratio;
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub ladder: Option<Vec<Rational>>,
    pub pattern: Option<Pattern>,
    pub search: Option<SearchGrid>,
    pub override_c: Option<Rational>,
    pub mode: EvalMode,
    /// Points per axis for sampled box extrema.
    pub samples: usize,
    pub w_max: Option<Rational>,
    pub reference: BTreeMap<String, Reference>,
}

#[derive(Debug, Clone)]
pub struct SolverSettings {
    pub grid_n: usize,
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub starts: Option<Vec<f64>>,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings { grid_n: 200, damping: 0.5, tol: 1e-12, max_iter: 10_000, starts: None }
    }
}

pub const DEFAULT_SAMPLES: usize = 64;

#[derive(Debug, Clone)]
pub struct Problem {
    pub name: String,
    pub equations: [Equation; 2],
    pub analysis: Analysis,
    pub solver: SolverSettings,
}

impl Problem {
    pub fn load(path: impl AsRef<Path>) -> Result<Problem, LoadError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Problem::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Problem, LoadError> {
        let raw: RawProblem = serde_json::from_str(text).map_err(|e| LoadError::Syntax(e.to_string()))?;
        build(raw)
    }

    pub fn taus(&self) -> Vec<Rational> {
        self.equations.iter().map(|e| e.impulse.tau.clone()).collect()
    }
}

struct Collector {
    out: Vec<Violation>,
}

impl Collector {
    fn push(&mut self, equation: Option<usize>, assumption: Assumption, message: impl Into<String>) {
        self.out.push(Violation { equation, assumption, message: message.into() });
    }

    fn expr(&mut self, eq: Option<usize>, field: &str, src: &str, vars: &[Var], assumption: Assumption) -> Option<Expression> {
        match Expression::parse(src) {
            Ok(e) => {
                if let Err(v) = e.check_vars(vars) {
                    let allowed: Vec<&str> = vars.iter().map(|v| v.name()).collect();
                    self.push(eq, Assumption::Input, format!("{field} uses `{}`; allowed: {}", v.name(), allowed.join(", ")));
                    None
                } else {
                    if let Ok(gaps) = e.continuity_gaps(Var::W) {
                        for g in gaps.iter().filter(|g| !g.is_continuous(1e-12)) {
                            self.push(eq, assumption, format!(
                                "{field} is discontinuous at w = {} (jump {:e})",
                                rational::format(&g.boundary),
                                g.gap()
                            ));
                        }
                    }
                    Some(e)
                }
            }
            Err(err) => {
                self.push(eq, Assumption::Input, format!("{field}: {err}"));
                None
            }
        }
    }

    fn measure(&mut self, eq: usize, field: &str, raw: &RawMeasure) -> Option<StieltjesMeasure> {
        let density = match &raw.density {
            Some(src) => Some(self.expr(Some(eq), &format!("{field}.density"), src, &[Var::S, Var::T], Assumption::Functionals)?),
            None => None,
        };
        let m = StieltjesMeasure {
            atoms: raw.atoms.iter().map(|a| Atom::new(a.at.0.clone(), a.weight.0.clone())).collect(),
            density,
        };
        for v in m.violations() {
            self.push(Some(eq), Assumption::Functionals, format!("{field}: {v}"));
        }
        Some(m)
    }
}

fn build(raw: RawProblem) -> Result<Problem, LoadError> {
    let mut c = Collector { out: Vec::new() };
    if raw.equations.len() != 2 {
        c.push(None, Assumption::Input, format!("expected exactly 2 equations, found {}", raw.equations.len()));
        return Err(LoadError::Invalid(c.out));
    }

    let taus: Vec<Rational> = raw.equations.iter().map(|e| e.impulse.tau.0.clone()).collect();
    let mut eqs = Vec::new();
    for (k, re) in raw.equations.iter().enumerate() {
        let i = k + 1;
        let other_tau = &taus[1 - k];
        eqs.push(build_equation(&mut c, i, re, other_tau));
    }

    let analysis = build_analysis(&mut c, &raw.analysis);
    let solver = build_solver(&mut c, &raw.solver);

    if !c.out.is_empty() {
        return Err(LoadError::Invalid(c.out));
    }
    let mut eqs = eqs.into_iter().map(|e| e.expect("no violations implies success"));
    let equations = [eqs.next().unwrap(), eqs.next().unwrap()];
    Ok(Problem { name: raw.name, equations, analysis: analysis.unwrap(), solver: solver.unwrap() })
}

fn build_equation(c: &mut Collector, i: usize, re: &RawEquation, other_tau: &Rational) -> Option<Equation> {
    let eq = Some(i);
    let coeffs = SlCoefficients::new(re.bc.a1.0.clone(), re.bc.b1.0.clone(), re.bc.a2.0.clone(), re.bc.b2.0.clone());
    let basis = match make_basis(&coeffs) {
        Ok(b) => Some(b),
        Err(_) => {
            for v in coeffs.violations() {
                c.push(eq, Assumption::BoundaryOperator, v.to_string());
            }
            None
        }
    };

    let f = c.expr(eq, "f", &re.f, &[Var::T, Var::U, Var::V], Assumption::Nonlinearity);
    let mut f_monotone = [None; 3];
    for (name, m) in &re.f_monotone {
        match name.as_str() {
            "t" => f_monotone[0] = Some(*m),
            "u" => f_monotone[1] = Some(*m),
            "v" => f_monotone[2] = Some(*m),
            other => c.push(eq, Assumption::Input, format!("f_monotone: unknown variable `{other}`")),
        }
    }
    let g = c.expr(eq, "g", &re.g, &[Var::T, Var::S], Assumption::Weight);
    let h = c.expr(eq, "H", &re.h.expr, &[Var::W], Assumption::BoundaryGrowth);
    let l = c.expr(eq, "L", &re.l.expr, &[Var::W], Assumption::BoundaryGrowth);
    let i_expr = c.expr(eq, "impulse.I", &re.impulse.i, &[Var::W], Assumption::ImpulseGrowth);
    let n_expr = c.expr(eq, "impulse.N", &re.impulse.n, &[Var::W], Assumption::ImpulseGrowth);

    let (h1, h2, l2) = (re.h.h1.0.clone(), re.h.h2.0.clone(), re.l.l2.0.clone());
    for (name, x) in [("h1", &h1), ("h2", &h2), ("l2", &l2)] {
        if x.is_negative() {
            c.push(eq, Assumption::BoundaryGrowth, format!("{name} must be nonnegative"));
        }
    }
    if h1 > h2 {
        c.push(eq, Assumption::BoundaryGrowth, "h1 must not exceed h2");
    }

    let tau = re.impulse.tau.0.clone();
    let impulse = match (i_expr, n_expr) {
        (Some(ie), Some(ne)) => {
            let spec = ImpulseSpec {
                tau: tau.clone(),
                i: ie,
                n: ne,
                p11: re.impulse.p11.0.clone(),
                p12: re.impulse.p12.0.clone(),
                p22: re.impulse.p22.0.clone(),
            };
            for v in spec.violations() {
                c.push(eq, Assumption::ImpulseGrowth, v);
            }
            Some(spec)
        }
        _ => None,
    };

    let alpha = c.measure(i, "alpha", &re.alpha);
    let beta = c.measure(i, "beta", &re.beta);
    // alpha acts on this equation's unknown (jump at tau_i), beta on the other (jump at the other tau)
    if let Some(a) = &alpha {
        if a.atoms.iter().any(|x| x.at == tau) {
            c.push(eq, Assumption::Functionals, format!("alpha has an atom at the impulse point tau = {}", rational::format(&tau)));
        }
    }
    if let Some(b) = &beta {
        if b.atoms.iter().any(|x| &x.at == other_tau) {
            c.push(eq, Assumption::Functionals, format!(
                "beta has an atom at the other equation's impulse point {}",
                rational::format(other_tau)
            ));
        }
    }

    let (wa, wb) = (re.window.0 .0.clone(), re.window.1 .0.clone());
    if wa <= tau || wb > int(1) || wa >= wb {
        c.push(eq, Assumption::KernelWindow, format!(
            "window [{}, {}] must satisfy tau = {} < a < b <= 1",
            rational::format(&wa),
            rational::format(&wb),
            rational::format(&tau)
        ));
    }
    let window_constants = basis.as_ref().and_then(|b| match interval_constants(b, &wa, &wb) {
        Ok(k) => Some(k),
        Err(e) => {
            c.push(eq, Assumption::BasisPositivity, e.to_string());
            None
        }
    });

    let basis = basis?;
    let impulse = impulse?;
    let impulse_coeffs = impulse_coeffs(&basis, &tau);
    Some(Equation {
        index: i,
        kernel: GreenKernel::new(basis.clone()),
        basis,
        f: f?,
        f_monotone,
        g: g?,
        impulse,
        impulse_coeffs,
        h: h?,
        h1,
        h2,
        l: l?,
        l2,
        alpha: alpha?,
        beta: beta?,
        window: (wa, wb),
        window_constants: window_constants?,
    })
}

fn build_analysis(c: &mut Collector, ra: &RawAnalysis) -> Option<Analysis> {
    let ladder = ra.rho.as_ref().map(|v| v.iter().map(|r| r.0.clone()).collect::<Vec<_>>());
    if let Some(l) = &ladder {
        if l.iter().any(|r| !r.is_positive()) {
            c.push(None, Assumption::Input, "analysis.rho: radii must be positive");
        }
    }
    let search = match &ra.search {
        None => None,
        Some(s) => match (&s.grid, &s.lo, &s.ratio, s.count) {
            (Some(g), None, None, None) => Some(SearchGrid::Explicit(g.iter().map(|r| r.0.clone()).collect())),
            (None, Some(lo), Some(ratio), Some(count)) => {
                if !lo.0.is_positive() || ratio.0 <= int(1) {
                    c.push(None, Assumption::Input, "analysis.search: need lo > 0 and ratio > 1");
                }
                Some(SearchGrid::Geometric { lo: lo.0.clone(), ratio: ratio.0.clone(), count })
            }
            _ => {
                c.push(None, Assumption::Input, "analysis.search: give either `grid` or all of `lo`, `ratio`, `count`");
                None
            }
        },
    };
    let mode = match ra.mode.as_deref() {
        None | Some("exact") => EvalMode::Exact,
        Some("numeric") => EvalMode::Numeric,
        Some(other) => {
            c.push(None, Assumption::Input, format!("analysis.mode: expected `exact` or `numeric`, found `{other}`"));
            EvalMode::Exact
        }
    };
    if let Some(oc) = &ra.override_c {
        if !oc.0.is_positive() || oc.0 > int(1) {
            c.push(None, Assumption::Input, "analysis.override_c must lie in (0, 1]");
        }
    }
    let samples = ra.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples < 2 {
        c.push(None, Assumption::Input, "analysis.samples must be at least 2");
    }
    Some(Analysis {
        ladder,
        pattern: ra.pattern,
        search,
        override_c: ra.override_c.as_ref().map(|r| r.0.clone()),
        mode,
        samples,
        w_max: ra.w_max.as_ref().map(|r| r.0.clone()),
        reference: ra.reference.clone(),
    })
}

fn build_solver(c: &mut Collector, rs: &RawSolver) -> Option<SolverSettings> {
    let d = SolverSettings::default();
    let s = SolverSettings {
        grid_n: rs.grid_n.unwrap_or(d.grid_n),
        damping: rs.damping.unwrap_or(d.damping),
        tol: rs.tol.unwrap_or(d.tol),
        max_iter: rs.max_iter.unwrap_or(d.max_iter),
        starts: rs.starts.clone(),
    };
    if s.grid_n < 8 {
        c.push(None, Assumption::Input, "solver.grid_n must be at least 8");
    }
    if !(s.damping > 0.0 && s.damping <= 1.0) {
        c.push(None, Assumption::Input, "solver.damping must lie in (0, 1]");
    }
    if !(s.tol > 0.0) {
        c.push(None, Assumption::Input, "solver.tol must be positive");
    }
    if s.starts.as_ref().is_some_and(|v| v.iter().any(|x| !(*x >= 0.0))) {
        c.push(None, Assumption::Input, "solver.starts must be nonnegative");
    }
    Some(s)
}
