//! Sampled checks of the growth and sign hypotheses on `f`, `g`, `H`, `L`, `I`, `N`.
//!
//! These are evidence on `[0, w_max]`, not proofs; a failure is reported with
//! the first witness found.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::expr::{Bindings, EvalError, Expression, Var};
use crate::impulse::verify_p_bounds;
use crate::problem::{Assumption, Equation, Problem};
use crate::rational::{self, int, ratio, Rat, Rational};

const LINE_SAMPLES: usize = 256;
const BOX_SAMPLES: usize = 17;
const SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub equation: usize,
    pub assumption: Assumption,
    pub statement: String,
    pub pass: bool,
    pub samples: usize,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub w_max: Rat,
    pub checks: Vec<HypothesisCheck>,
    pub pass: bool,
}

fn line_points(w_max: &Rational, e: &[&Expression]) -> Vec<Rational> {
    let n = LINE_SAMPLES as i64;
    let mut ws: Vec<Rational> = (0..=n).map(|k| w_max * ratio(k, n)).collect();
    ws.push(w_max / int(1 << 20));
    for x in e {
        ws.extend(x.guard_boundaries(Var::W).into_iter().filter(|b| !b.is_negative() && b <= w_max));
    }
    ws.sort();
    ws.dedup();
    ws
}

/// `(exact, float)` value of a one-variable expression in `w`.
fn eval_w(e: &Expression, w: &Rational) -> Result<(Option<Rational>, f64), EvalError> {
    match e.eval_exact_at(Var::W, w) {
        Ok(r) => {
            let f = rational::to_f64(&r);
            Ok((Some(r), f))
        }
        Err(EvalError::NotRational(_)) => Ok((None, e.eval_at(Var::W, rational::to_f64(w))?)),
        Err(err) => Err(err),
    }
}

/// `lo(w) <= e(w) <= hi(w)` on the samples, with `lo`/`hi` linear in `w`.
fn linear_band(
    e: &Expression,
    lo: Option<&Rational>,
    hi: Option<&Rational>,
    ws: &[Rational],
) -> Result<Option<String>, EvalError> {
    for w in ws {
        let (exact, x) = eval_w(e, w)?;
        let wf = rational::to_f64(w);
        let slack = SLACK * (1.0 + wf.abs());
        let below = |k: &Rational| match &exact {
            Some(r) => r < &(k * w),
            None => x < rational::to_f64(k) * wf - slack,
        };
        let above = |k: &Rational| match &exact {
            Some(r) => r > &(k * w),
            None => x > rational::to_f64(k) * wf + slack,
        };
        let shown = exact.as_ref().map_or_else(|| format!("{x}"), rational::format);
        if let Some(k) = lo {
            if below(k) {
                return Ok(Some(format!("value {shown} < {}*w at w = {}", rational::format(k), rational::format(w))));
            }
        }
        if let Some(k) = hi {
            if above(k) {
                return Ok(Some(format!("value {shown} > {}*w at w = {}", rational::format(k), rational::format(w))));
            }
        }
    }
    Ok(None)
}

fn check_equation(eq: &Equation, w_max: &Rational, out: &mut Vec<HypothesisCheck>) -> Result<(), EvalError> {
    let i = eq.index;
    let zero = Rational::zero();
    let mut push = |assumption, statement: String, samples, witness: Option<String>| {
        out.push(HypothesisCheck { equation: i, assumption, statement, pass: witness.is_none(), samples, witness })
    };

    let ws = line_points(w_max, &[&eq.h]);
    let f = rational::format;
    let w = linear_band(&eq.h, Some(&eq.h1), Some(&eq.h2), &ws)?;
    push(Assumption::BoundaryGrowth, format!("{}*w <= H(w) <= {}*w", f(&eq.h1), f(&eq.h2)), ws.len(), w);

    let ws = line_points(w_max, &[&eq.l]);
    let w = linear_band(&eq.l, Some(&zero), Some(&eq.l2), &ws)?;
    push(Assumption::BoundaryGrowth, format!("0 <= L(w) <= {}*w", f(&eq.l2)), ws.len(), w);

    let p = verify_p_bounds(&eq.impulse, &eq.impulse_coeffs, w_max, LINE_SAMPLES)?;
    push(
        Assumption::ImpulseGrowth,
        format!(
            "{}*w <= (d1 I + e1 N)(w) <= {}*w and 0 <= (d2 I + e2 N)(w) <= {}*w",
            f(&eq.impulse.p11),
            f(&eq.impulse.p12),
            f(&eq.impulse.p22)
        ),
        p.samples,
        (!p.pass).then(|| p.failures.join("; ")),
    );

    let n = LINE_SAMPLES;
    let mut witness = None;
    for k in 0..=n {
        let s = k as f64 / n as f64;
        let y = eq.g.eval(&Bindings::new().with(Var::S, s).with(Var::T, s))?;
        if y < -SLACK {
            witness = Some(format!("g({s}) = {y}"));
            break;
        }
    }
    push(Assumption::Weight, "g(s) >= 0".into(), n + 1, witness);

    let m = BOX_SAMPLES;
    let wm = rational::to_f64(w_max);
    let mut witness = None;
    'outer: for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                let (t, u, v) = (a as f64 / (m - 1) as f64, wm * b as f64 / (m - 1) as f64, wm * c as f64 / (m - 1) as f64);
                let y = eq.f.eval(&Bindings::new().with(Var::T, t).with(Var::U, u).with(Var::V, v))?;
                if y < -SLACK {
                    witness = Some(format!("f({t}, {u}, {v}) = {y}"));
                    break 'outer;
                }
            }
        }
    }
    push(Assumption::Nonlinearity, "f(t,u,v) >= 0".into(), m * m * m, witness);
    Ok(())
}

/// Default sampling range: the largest ladder radius divided by `c`, at least 1.
pub fn default_w_max(problem: &Problem, c: &Rational) -> Rational {
    if let Some(w) = &problem.analysis.w_max {
        return w.clone();
    }
    let top = problem
        .analysis
        .ladder
        .iter()
        .flatten()
        .max()
        .map_or_else(|| int(1), |r| r / c);
    top.max(int(1))
}

pub fn check_hypotheses(problem: &Problem, w_max: &Rational) -> Result<HypothesisReport, EvalError> {
    let mut checks = Vec::new();
    for eq in &problem.equations {
        check_equation(eq, w_max, &mut checks)?;
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(HypothesisReport { w_max: Rat(w_max.clone()), checks, pass })
}
