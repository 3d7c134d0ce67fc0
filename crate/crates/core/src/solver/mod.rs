//! Damped Picard iteration for the fixed-point form of the system.
//!
//! The integral term is evaluated with prefix sums: for a grid node `t`,
//! `int k(t,s) h(s) ds = (gamma(t) P(t) + delta(t) Q(t)) / W` where `P` and `Q`
//! are composite-trapezoid integrals of `delta h` over `[0,t]` and of `gamma h`
//! over `[t,1]`. The kernel kink at `s = t` falls on a node, and the
//! zero-width panel at a doubled impulse node contributes nothing.

mod residuals;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::cone::{pair_membership, Membership};
use crate::expr::{Bindings, EvalError, Var};
use crate::grid::{build_grid, Grid, PiecewiseGridFunction};
use crate::impulse::{combined_jumps, ImpulseError};
use crate::measures::MeasureError;
use crate::problem::{Equation, Problem};
use crate::rational::{self, Rational};
use crate::scheduler::Certificate;

pub use residuals::{residuals, Residuals};

/// Values below `-NEGATIVE_TOL` are rejected as inputs to `T`.
pub const NEGATIVE_TOL: f64 = 1e-9;
/// Iterates with a larger sup norm are treated as divergent.
pub const BLOWUP: f64 = 1e12;
/// Cone membership slack for returned solutions.
pub const CONE_TOL: f64 = 1e-9;
const MIN_PANELS: usize = 8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SolverError {
    #[error("grid needs at least {MIN_PANELS} panels per piece, got {0}")]
    CoarseGrid(usize),
    #[error("component {component} is negative ({value:e}) at t = {t}")]
    NegativeInput { component: usize, t: f64, value: f64 },
    #[error("equation {equation}: {source}")]
    Eval { equation: usize, source: EvalError },
    #[error("equation {equation}: {source}")]
    Measure { equation: usize, source: MeasureError },
    #[error("equation {equation}: {source}")]
    Impulse { equation: usize, source: ImpulseError },
    #[error("iterate became non-finite or exceeded {BLOWUP:e} at iteration {iteration}")]
    Diverged { iteration: usize },
    #[error("no convergence after {iterations} iterations (last update {last_update:e})")]
    NoConvergence {
        iterations: usize,
        last_update: f64,
        history: Vec<f64>,
        last: Box<(PiecewiseGridFunction, PiecewiseGridFunction)>,
    },
}

/// Per-equation data sampled on the grid.
#[derive(Debug, Clone)]
struct EqCache {
    gamma: Vec<f64>,
    delta: Vec<f64>,
    g: Vec<f64>,
    gamma_slope: f64,
    delta_slope: f64,
    w: f64,
}

/// Pieces of `T` for one equation, kept for residual evaluation.
#[derive(Debug, Clone)]
pub(crate) struct Components {
    pub h_value: f64,
    pub l_value: f64,
    pub jumps: (f64, f64),
    /// `int_0^t delta g f` at each entry.
    pub p: Vec<f64>,
    /// `int_t^1 gamma g f` at each entry.
    pub q: Vec<f64>,
    /// `g f` at each entry.
    pub source: Vec<f64>,
    pub values: Vec<f64>,
}

/// `T` restricted to a fixed grid.
#[derive(Debug, Clone)]
pub struct Operator<'a> {
    pub problem: &'a Problem,
    pub grid: Arc<Grid>,
    caches: [EqCache; 2],
}

impl<'a> Operator<'a> {
    pub fn new(problem: &'a Problem, n: usize) -> Result<Self, SolverError> {
        if n < MIN_PANELS {
            return Err(SolverError::CoarseGrid(n));
        }
        Ok(Self::on_grid(problem, Arc::new(build_grid(&problem.taus(), n))))
    }

    pub fn on_grid(problem: &'a Problem, grid: Arc<Grid>) -> Self {
        let cache = |eq: &Equation| {
            let b = eq.basis.to_f64();
            let nodes = grid.nodes();
            EqCache {
                gamma: nodes.iter().map(|&t| b.gamma(t)).collect(),
                delta: nodes.iter().map(|&t| b.delta(t)).collect(),
                g: nodes
                    .iter()
                    .map(|&t| eq.g.eval(&Bindings::new().with(Var::S, t).with(Var::T, t)).unwrap_or(f64::NAN))
                    .collect(),
                gamma_slope: b.g1,
                delta_slope: b.d1,
                w: b.w,
            }
        };
        let caches = [cache(&problem.equations[0]), cache(&problem.equations[1])];
        Operator { problem, grid, caches }
    }

    pub fn constant(&self, c: f64) -> PiecewiseGridFunction {
        PiecewiseGridFunction::constant(self.grid.clone(), c)
    }

    fn check_input(&self, u: &PiecewiseGridFunction, component: usize) -> Result<(), SolverError> {
        for (k, &x) in u.values.iter().enumerate() {
            if !x.is_finite() || x < -NEGATIVE_TOL {
                return Err(SolverError::NegativeInput { component, t: self.grid.nodes()[k], value: x });
            }
        }
        Ok(())
    }

    /// Evaluates the `i`-th component of `T(u, v)`.
    pub(crate) fn components(
        &self,
        i: usize,
        u: &PiecewiseGridFunction,
        v: &PiecewiseGridFunction,
    ) -> Result<Components, SolverError> {
        let eq = &self.problem.equations[i];
        let c = &self.caches[i];
        let equation = i + 1;
        let (own, other) = if i == 0 { (u, v) } else { (v, u) };
        let merr = |source| SolverError::Measure { equation, source };
        let eerr = |source| SolverError::Eval { equation, source };

        let a = eq.alpha.apply(own).map_err(merr)?.to_f64();
        let b = eq.beta.apply(other).map_err(merr)?.to_f64();
        let h_value = eq.h.eval_at(Var::W, a.max(0.0)).map_err(eerr)?;
        let l_value = eq.l.eval_at(Var::W, b.max(0.0)).map_err(eerr)?;

        let (left, _) = own.sides(eq.tau()).ok_or_else(|| SolverError::Impulse {
            equation,
            source: ImpulseError::MissingJumpNode(rational::format(eq.tau())),
        })?;
        let jumps = combined_jumps(&eq.impulse, &eq.impulse_coeffs, left.max(0.0)).map_err(eerr)?;

        let nodes = self.grid.nodes();
        let source: Vec<f64> = (0..nodes.len())
            .into_par_iter()
            .map(|k| {
                let env = Bindings::new()
                    .with(Var::T, nodes[k])
                    .with(Var::U, u.values[k].max(0.0))
                    .with(Var::V, v.values[k].max(0.0));
                eq.f.eval(&env).map(|y| c.g[k] * y)
            })
            .collect::<Result<_, _>>()
            .map_err(eerr)?;

        let (p, q) = prefix_integrals(nodes, &c.gamma, &c.delta, &source);
        let values = (0..nodes.len())
            .map(|k| {
                let g_term = if self.grid.after(k, eq.tau()) { c.gamma[k] * jumps.0 } else { c.delta[k] * jumps.1 };
                c.gamma[k] * h_value + c.delta[k] * l_value + g_term + (c.gamma[k] * p[k] + c.delta[k] * q[k]) / c.w
            })
            .collect();
        Ok(Components { h_value, l_value, jumps, p, q, source, values })
    }

    pub fn apply(
        &self,
        u: &PiecewiseGridFunction,
        v: &PiecewiseGridFunction,
    ) -> Result<(PiecewiseGridFunction, PiecewiseGridFunction), SolverError> {
        self.check_input(u, 1)?;
        self.check_input(v, 2)?;
        let tu = self.components(0, u, v)?.values;
        let tv = self.components(1, u, v)?.values;
        Ok((PiecewiseGridFunction::new(self.grid.clone(), tu), PiecewiseGridFunction::new(self.grid.clone(), tv)))
    }

    /// `u'` at each entry from the derivative of the representation formula.
    pub(crate) fn derivative(&self, i: usize, comp: &Components) -> Vec<f64> {
        let c = &self.caches[i];
        let tau = self.problem.equations[i].tau();
        (0..self.grid.len())
            .map(|k| {
                let g_term = if self.grid.after(k, tau) { c.gamma_slope * comp.jumps.0 } else { c.delta_slope * comp.jumps.1 };
                c.gamma_slope * comp.h_value
                    + c.delta_slope * comp.l_value
                    + g_term
                    + (c.gamma_slope * comp.p[k] + c.delta_slope * comp.q[k]) / c.w
            })
            .collect()
    }
}

/// Cumulative trapezoid sums of `delta h` from the left and `gamma h` from the right.
fn prefix_integrals(x: &[f64], gamma: &[f64], delta: &[f64], h: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for k in 1..n {
        p[k] = p[k - 1] + 0.5 * (x[k] - x[k - 1]) * (delta[k - 1] * h[k - 1] + delta[k] * h[k]);
    }
    for k in (0..n - 1).rev() {
        q[k] = q[k + 1] + 0.5 * (x[k + 1] - x[k]) * (gamma[k] * h[k] + gamma[k + 1] * h[k + 1]);
    }
    (p, q)
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionPair {
    #[serde(skip)]
    pub u: PiecewiseGridFunction,
    #[serde(skip)]
    pub v: PiecewiseGridFunction,
    pub iterations: usize,
    pub update_norm: f64,
    pub residuals: Residuals,
    pub sup_norms: (f64, f64),
    /// Starting constant, when produced by a multi-start run.
    pub start: Option<f64>,
    pub membership: Option<[Membership; 2]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PicardSettings {
    pub damping: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl PicardSettings {
    pub fn from_problem(p: &Problem) -> Self {
        PicardSettings { damping: p.solver.damping, tol: p.solver.tol, max_iter: p.solver.max_iter }
    }
}

/// `(u, v) <- (1 - lambda)(u, v) + lambda T(u, v)` until the update is below `tol`.
pub fn solve_picard(
    op: &Operator,
    init: (PiecewiseGridFunction, PiecewiseGridFunction),
    settings: PicardSettings,
) -> Result<SolutionPair, SolverError> {
    let PicardSettings { damping, tol, max_iter } = settings;
    assert!(damping > 0.0 && damping <= 1.0, "damping must lie in (0, 1]");
    let (mut u, mut v) = init;
    let mut history = Vec::new();
    for it in 1..=max_iter {
        let (tu, tv) = op.apply(&u, &v)?;
        let nu = u.blend(&tu, damping);
        let nv = v.blend(&tv, damping);
        let bad = |f: &PiecewiseGridFunction| f.values.iter().any(|x| !x.is_finite()) || f.sup_norm() > BLOWUP;
        if bad(&nu) || bad(&nv) {
            return Err(SolverError::Diverged { iteration: it });
        }
        let update = nu.max_abs_diff(&u).max(nv.max_abs_diff(&v));
        history.push(update);
        u = nu;
        v = nv;
        if update < tol {
            let residuals = residuals(op, &u, &v)?;
            let sup_norms = (u.sup_norm(), v.sup_norm());
            return Ok(SolutionPair {
                u,
                v,
                iterations: it,
                update_norm: update,
                residuals,
                sup_norms,
                start: None,
                membership: None,
            });
        }
    }
    Err(SolverError::NoConvergence {
        iterations: max_iter,
        last_update: history.last().copied().unwrap_or(f64::NAN),
        history,
        last: Box::new((u, v)),
    })
}

/// Outcome of one multi-start run.
#[derive(Debug, Clone, Serialize)]
pub struct StartOutcome {
    pub start: f64,
    pub result: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiStart {
    pub solutions: Vec<SolutionPair>,
    pub starts: Vec<StartOutcome>,
}

/// Starting constants: every ladder radius and the geometric means of neighbours.
pub fn start_values(rho: &[Rational]) -> Vec<f64> {
    let r: Vec<f64> = rho.iter().map(rational::to_f64).collect();
    let mut out = Vec::new();
    for (j, &x) in r.iter().enumerate() {
        if j > 0 {
            out.push((r[j - 1] * x).sqrt());
        }
        out.push(x);
    }
    out
}

/// Picard runs from constant initial guesses, keeping distinct converged
/// solutions that lie in the cone.
pub fn multi_start(
    op: &Operator,
    starts: &[f64],
    c: &Rational,
    settings: PicardSettings,
) -> MultiStart {
    let runs: Vec<(f64, Result<SolutionPair, SolverError>)> = starts
        .par_iter()
        .map(|&s| (s, solve_picard(op, (op.constant(s), op.constant(s)), settings)))
        .collect();
    let mut solutions: Vec<SolutionPair> = Vec::new();
    let mut outcomes = Vec::new();
    for (s, r) in runs {
        let result = match r {
            Ok(mut sol) => {
                let m = pair_membership(op.problem, &sol.u, &sol.v, c, CONE_TOL);
                let in_cone = m.iter().all(|x| x.pass);
                sol.membership = Some(m);
                sol.start = Some(s);
                let scale = sol.sup_norms.0.max(sol.sup_norms.1).max(1.0);
                let dup = solutions
                    .iter()
                    .position(|o| o.u.max_abs_diff(&sol.u).max(o.v.max_abs_diff(&sol.v)) <= 1e-3 * scale);
                match (in_cone, dup) {
                    (false, _) => "converged outside the cone".to_string(),
                    (true, Some(j)) => format!("converged to solution {}", j + 1),
                    (true, None) => {
                        solutions.push(sol);
                        format!("converged to solution {}", solutions.len())
                    }
                }
            }
            Err(e) => e.to_string(),
        };
        outcomes.push(StartOutcome { start: s, result });
    }
    MultiStart { solutions, starts: outcomes }
}

/// Multi-start seeded from a certificate's ladder.
pub fn multi_start_certificate(op: &Operator, cert: &Certificate, settings: PicardSettings) -> MultiStart {
    let rho: Vec<Rational> = cert.rho.iter().map(|r| r.0.clone()).collect();
    multi_start(op, &start_values(&rho), &cert.c.0, settings)
}
