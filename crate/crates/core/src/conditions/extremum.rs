//! Sup/inf of `f(t,u,v)` over axis-aligned boxes.
//!
//! Axes with a declared (and spot-checked) monotonicity are pinned to the
//! appropriate endpoint; the others are sampled on Chebyshev–Lobatto points,
//! which always include both endpoints.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::expr::{Bindings, EvalError, Expression, Var};
use crate::problem::Monotone;
use crate::rational::{self, Rational};
use crate::value::{EvalMode, Value};

const HINT_CHECK_POINTS: usize = 9;
const HINT_CHECK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Extremum {
    Sup,
    Inf,
}

/// How much an extremum can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Exact rational arithmetic at a provably extremal point.
    Exact,
    /// Floating-point evaluation at a provably extremal point.
    Numeric,
    /// Best sampled value; the true extremum may be beyond it.
    SampledEvidence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxRange {
    pub lo: Rational,
    pub hi: Rational,
}

impl BoxRange {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        BoxRange { lo, hi }
    }
}

/// `[t] x [u] x [v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FBox {
    pub axes: [BoxRange; 3],
}

impl FBox {
    pub fn new(t: (Rational, Rational), u: (Rational, Rational), v: (Rational, Rational)) -> Self {
        FBox { axes: [BoxRange::new(t.0, t.1), BoxRange::new(u.0, u.1), BoxRange::new(v.0, v.1)] }
    }

    pub fn describe(&self) -> String {
        let a: Vec<String> = self
            .axes
            .iter()
            .map(|r| format!("[{}, {}]", rational::format(&r.lo), rational::format(&r.hi)))
            .collect();
        a.join(" x ")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxExtremum {
    /// Extremal value of `f` itself (not divided by any radius).
    pub value: Value,
    /// `(t, u, v)` where it was attained.
    pub at: [f64; 3],
    pub provenance: Provenance,
    /// Points evaluated.
    pub evaluations: usize,
    /// Monotonicity hints that sampling contradicted (and were ignored).
    pub rejected_hints: Vec<String>,
}

const AXES: [Var; 3] = [Var::T, Var::U, Var::V];

fn eval_f(f: &Expression, p: [f64; 3]) -> Result<f64, EvalError> {
    let env = Bindings::new().with(Var::T, p[0]).with(Var::U, p[1]).with(Var::V, p[2]);
    let y = f.eval(&env)?;
    if y.is_finite() {
        Ok(y)
    } else {
        Err(EvalError::NonFinite)
    }
}

fn lobatto(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if hi <= lo || n < 2 {
        return vec![lo];
    }
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    (0..n)
        .map(|j| {
            if j == 0 {
                lo
            } else if j == n - 1 {
                hi
            } else {
                mid - half * (PI * j as f64 / (n - 1) as f64).cos()
            }
        })
        .collect()
}

/// Whether sampled values along `axis` never contradict the hint.
fn hint_holds(f: &Expression, bx: &FBox, axis: usize, hint: Monotone) -> Result<bool, EvalError> {
    let pts: Vec<Vec<f64>> = bx
        .axes
        .iter()
        .map(|r| lobatto(rational::to_f64(&r.lo), rational::to_f64(&r.hi), HINT_CHECK_POINTS))
        .collect();
    let others: Vec<usize> = (0..3).filter(|&a| a != axis).collect();
    for &x in &pts[others[0]] {
        for &y in &pts[others[1]] {
            let mut prev: Option<f64> = None;
            for &z in &pts[axis] {
                let mut p = [0.0; 3];
                p[others[0]] = x;
                p[others[1]] = y;
                p[axis] = z;
                let val = eval_f(f, p)?;
                if let Some(q) = prev {
                    let slack = HINT_CHECK_TOL * (1.0 + q.abs().max(val.abs()));
                    let bad = match hint {
                        Monotone::Increasing => val < q - slack,
                        Monotone::Decreasing => val > q + slack,
                    };
                    if bad {
                        return Ok(false);
                    }
                }
                prev = Some(val);
            }
        }
    }
    Ok(true)
}

/// Extremum of `f` over the box.
pub fn box_extremum(
    f: &Expression,
    hints: &[Option<Monotone>; 3],
    bx: &FBox,
    kind: Extremum,
    samples: usize,
    mode: EvalMode,
) -> Result<BoxExtremum, EvalError> {
    let mut rejected = Vec::new();
    // pinned[a] = Some(exact endpoint) when the axis is fixed by monotonicity
    let mut pinned: [Option<Rational>; 3] = [None, None, None];
    for a in 0..3 {
        let r = &bx.axes[a];
        if r.lo == r.hi {
            pinned[a] = Some(r.lo.clone());
            continue;
        }
        if !f.free_vars().contains(&AXES[a]) {
            pinned[a] = Some(r.lo.clone());
            continue;
        }
        if let Some(h) = hints[a] {
            if hint_holds(f, bx, a, h)? {
                let take_hi = matches!((h, kind), (Monotone::Increasing, Extremum::Sup) | (Monotone::Decreasing, Extremum::Inf));
                pinned[a] = Some(if take_hi { r.hi.clone() } else { r.lo.clone() });
            } else {
                rejected.push(format!("f is not {:?} in {}", h, AXES[a].name()).to_lowercase());
            }
        }
    }

    if pinned.iter().all(Option::is_some) {
        let p: Vec<Rational> = pinned.into_iter().map(Option::unwrap).collect();
        let at = [rational::to_f64(&p[0]), rational::to_f64(&p[1]), rational::to_f64(&p[2])];
        let env = Bindings::new().with(Var::T, p[0].clone()).with(Var::U, p[1].clone()).with(Var::V, p[2].clone());
        let (value, provenance) = match (mode, f.eval_exact(&env)) {
            (EvalMode::Exact, Ok(v)) => (Value::Exact(v), Provenance::Exact),
            (_, Ok(_)) | (_, Err(EvalError::NotRational(_))) => (Value::Float(eval_f(f, at)?), Provenance::Numeric),
            (_, Err(e)) => return Err(e),
        };
        return Ok(BoxExtremum { value, at, provenance, evaluations: 1, rejected_hints: rejected });
    }

    let axis_points: Vec<Vec<f64>> = (0..3)
        .map(|a| match &pinned[a] {
            Some(x) => vec![rational::to_f64(x)],
            None => lobatto(rational::to_f64(&bx.axes[a].lo), rational::to_f64(&bx.axes[a].hi), samples),
        })
        .collect();
    let better = |a: f64, b: f64| match kind {
        Extremum::Sup => a > b,
        Extremum::Inf => a < b,
    };
    // each first-axis slice reduces independently; slices merge in index order
    let slices: Vec<Result<(f64, [f64; 3]), EvalError>> = axis_points[0]
        .par_iter()
        .map(|&t| {
            let mut best: Option<(f64, [f64; 3])> = None;
            for &u in &axis_points[1] {
                for &v in &axis_points[2] {
                    let p = [t, u, v];
                    let y = eval_f(f, p)?;
                    if best.is_none_or(|(b, _)| better(y, b)) {
                        best = Some((y, p));
                    }
                }
            }
            Ok(best.expect("non-empty axes"))
        })
        .collect();
    let mut best: Option<(f64, [f64; 3])> = None;
    for s in slices {
        let (y, p) = s?;
        if best.is_none_or(|(b, _)| better(y, b)) {
            best = Some((y, p));
        }
    }
    let (y, at) = best.expect("non-empty axes");
    let evaluations = axis_points.iter().map(Vec::len).product();
    Ok(BoxExtremum {
        value: Value::Float(y),
        at,
        provenance: Provenance::SampledEvidence,
        evaluations,
        rejected_hints: rejected,
    })
}
