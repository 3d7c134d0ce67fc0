//! Impulse coefficients, the impulse operator `G` and checks of the
//! linear growth bounds on the combined jump functions.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::expr::{EvalError, Expression, Var};
use crate::grid::PiecewiseGridFunction;
use crate::rational::{self, int, Rat, Rational};
use crate::sl_kernel::BoundaryBasis;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ImpulseError {
    #[error("grid has no doubled node at tau = {0}")]
    MissingJumpNode(String),
    #[error("impulse function: {0}")]
    Eval(#[from] EvalError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseSpec {
    pub tau: Rational,
    pub i: Expression,
    pub n: Expression,
    pub p11: Rational,
    pub p12: Rational,
    pub p22: Rational,
}

impl ImpulseSpec {
    /// No impulse at all: `I = N = 0` with zero bounds.
    pub fn none(tau: Rational) -> ImpulseSpec {
        ImpulseSpec {
            tau,
            i: Expression::constant(int(0)),
            n: Expression::constant(int(0)),
            p11: int(0),
            p12: int(0),
            p22: int(0),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.tau.is_positive() || self.tau >= int(1) {
            out.push(format!("impulse point tau = {} must lie in (0, 1)", rational::format(&self.tau)));
        }
        if !self.p11.is_positive() {
            out.push("p11 must be positive".to_string());
        }
        if !self.p12.is_positive() {
            out.push("p12 must be positive".to_string());
        }
        if self.p22.is_negative() {
            out.push("p22 must be nonnegative".to_string());
        }
        if self.p11 > self.p12 {
            out.push("p11 must not exceed p12".to_string());
        }
        for (name, e) in [("I", &self.i), ("N", &self.n)] {
            if let Err(v) = e.check_vars(&[Var::W]) {
                out.push(format!("{name} may only use w, found `{}`", v.name()));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpulseCoefficients {
    pub d1: Rat,
    pub e1: Rat,
    pub d2: Rat,
    pub e2: Rat,
}

pub fn impulse_coeffs(basis: &BoundaryBasis, tau: &Rational) -> ImpulseCoefficients {
    let w = basis.wronskian_at(tau);
    ImpulseCoefficients {
        d1: Rat(basis.delta.slope() / &w),
        e1: Rat(-basis.delta_at(tau) / &w),
        d2: Rat(basis.gamma.slope() / &w),
        e2: Rat(-basis.gamma_at(tau) / &w),
    }
}

impl ImpulseCoefficients {
    pub fn as_tuple(&self) -> (Rational, Rational, Rational, Rational) {
        (self.d1.0.clone(), self.e1.0.clone(), self.d2.0.clone(), self.e2.0.clone())
    }
}

/// `(d1 I + e1 N, d2 I + e2 N)` at `w`.
pub fn combined_jumps(spec: &ImpulseSpec, c: &ImpulseCoefficients, w: f64) -> Result<(f64, f64), EvalError> {
    let i = spec.i.eval_at(Var::W, w)?;
    let n = spec.n.eval_at(Var::W, w)?;
    let f = rational::to_f64;
    Ok((f(&c.d1.0) * i + f(&c.e1.0) * n, f(&c.d2.0) * i + f(&c.e2.0) * n))
}

pub fn combined_jumps_exact(
    spec: &ImpulseSpec,
    c: &ImpulseCoefficients,
    w: &Rational,
) -> Result<(Rational, Rational), EvalError> {
    let i = spec.i.eval_exact_at(Var::W, w)?;
    let n = spec.n.eval_exact_at(Var::W, w)?;
    Ok((&c.d1.0 * &i + &c.e1.0 * &n, &c.d2.0 * &i + &c.e2.0 * &n))
}

/// `G(w)(t)` from the jump pair; `right` selects `t = tau+` when `t = tau`.
pub fn g_value_exact(basis: &BoundaryBasis, tau: &Rational, jumps: &(Rational, Rational), t: &Rational, right: bool) -> Rational {
    if t > tau || (t == tau && right) {
        basis.gamma_at(t) * &jumps.0
    } else {
        basis.delta_at(t) * &jumps.1
    }
}

/// Slope of `G(w)` at `t` (one-sided at `tau`).
pub fn g_slope_exact(basis: &BoundaryBasis, tau: &Rational, jumps: &(Rational, Rational), t: &Rational, right: bool) -> Rational {
    if t > tau || (t == tau && right) {
        basis.gamma.slope() * &jumps.0
    } else {
        basis.delta.slope() * &jumps.1
    }
}

/// `G(w)` on the grid of `w`, using the left value `w(tau-)`.
pub fn g_apply(
    basis: &BoundaryBasis,
    spec: &ImpulseSpec,
    coeffs: &ImpulseCoefficients,
    w: &PiecewiseGridFunction,
) -> Result<PiecewiseGridFunction, ImpulseError> {
    let (left, _) = w
        .sides(&spec.tau)
        .ok_or_else(|| ImpulseError::MissingJumpNode(rational::format(&spec.tau)))?;
    let (j1, j2) = combined_jumps(spec, coeffs, left)?;
    Ok(g_on_grid(basis, &spec.tau, j1, j2, w))
}

pub(crate) fn g_on_grid(basis: &BoundaryBasis, tau: &Rational, j1: f64, j2: f64, like: &PiecewiseGridFunction) -> PiecewiseGridFunction {
    let b = basis.to_f64();
    let grid = &like.grid;
    let values = grid
        .nodes()
        .iter()
        .enumerate()
        .map(|(k, &t)| if grid.after(k, tau) { b.gamma(t) * j1 } else { b.delta(t) * j2 })
        .collect();
    PiecewiseGridFunction::new(grid.clone(), values)
}

/// Extremal ratio and where it was observed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observed {
    pub ratio: f64,
    pub at_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PBoundReport {
    pub pass: bool,
    pub samples: usize,
    pub exact: bool,
    pub j1_min: Observed,
    pub j1_max: Observed,
    pub j2_min: Observed,
    pub j2_max: Observed,
    /// Human-readable description of each violated bound with its witness.
    pub failures: Vec<String>,
}

/// Checks `p11 <= j1/w <= p12` and `0 <= j2/w <= p22` at `n_samples` evenly
/// spaced points of `(0, w_max]` plus every guard boundary of `I` and `N`.
/// Samples are evaluated exactly when `I` and `N` allow it.
pub fn verify_p_bounds(spec: &ImpulseSpec, coeffs: &ImpulseCoefficients, w_max: &Rational, n_samples: usize) -> Result<PBoundReport, EvalError> {
    let n_samples = n_samples.max(2);
    let mut ws: Vec<Rational> = (1..=n_samples)
        .map(|k| w_max * rational::ratio(k as i64, n_samples as i64))
        .collect();
    // small w probes the ratio limit at the origin
    ws.push(w_max / int(1 << 20));
    for e in [&spec.i, &spec.n] {
        ws.extend(e.guard_boundaries(Var::W).into_iter().filter(|b| b.is_positive() && b <= w_max));
    }
    ws.sort();
    ws.dedup();

    let mut all_exact = true;
    let mut ratios = Vec::with_capacity(ws.len());
    for w in &ws {
        let r = match combined_jumps_exact(spec, coeffs, w) {
            Ok((j1, j2)) => (j1 / w, j2 / w),
            Err(EvalError::NotRational(_)) => {
                all_exact = false;
                let x = rational::to_f64(w);
                let (j1, j2) = combined_jumps(spec, coeffs, x)?;
                let to_r = |v: f64| rational::from_f64(v).ok_or(EvalError::NonFinite);
                (to_r(j1 / x)?, to_r(j2 / x)?)
            }
            Err(e) => return Err(e),
        };
        ratios.push((w, r));
    }

    let pick = |sel: fn(&(Rational, Rational)) -> &Rational, want_max: bool| {
        let (w, r) = ratios
            .iter()
            .max_by(|a, b| {
                let o = sel(&a.1).cmp(sel(&b.1));
                if want_max { o } else { o.reverse() }
            })
            .expect("at least one sample");
        (Observed { ratio: rational::to_f64(sel(r)), at_w: rational::to_f64(w) }, (*w).clone(), sel(r).clone())
    };
    let (j1_min, w1, r1) = pick(|r| &r.0, false);
    let (j1_max, w2, r2) = pick(|r| &r.0, true);
    let (j2_min, w3, r3) = pick(|r| &r.1, false);
    let (j2_max, w4, r4) = pick(|r| &r.1, true);

    let f = rational::format;
    let mut failures = Vec::new();
    if r1 < spec.p11 {
        failures.push(format!("(d1 I + e1 N)(w)/w = {} < p11 = {} at w = {}", f(&r1), f(&spec.p11), f(&w1)));
    }
    if r2 > spec.p12 {
        failures.push(format!("(d1 I + e1 N)(w)/w = {} > p12 = {} at w = {}", f(&r2), f(&spec.p12), f(&w2)));
    }
    if r3.is_negative() {
        failures.push(format!("(d2 I + e2 N)(w)/w = {} < 0 at w = {}", f(&r3), f(&w3)));
    }
    if r4 > spec.p22 {
        failures.push(format!("(d2 I + e2 N)(w)/w = {} > p22 = {} at w = {}", f(&r4), f(&spec.p22), f(&w4)));
    }
    Ok(PBoundReport {
        pass: failures.is_empty(),
        samples: ws.len(),
        exact: all_exact,
        j1_min,
        j1_max,
        j2_min,
        j2_max,
        failures,
    })
}

/// Value and slope jumps `G(tau+) - G(tau-)`, `G'(tau+) - G'(tau-)` for given `I`, `N` values.
pub fn reconstructed_jumps(basis: &BoundaryBasis, tau: &Rational, c: &ImpulseCoefficients, i: &Rational, n: &Rational) -> (Rational, Rational) {
    let jumps = (&c.d1.0 * i + &c.e1.0 * n, &c.d2.0 * i + &c.e2.0 * n);
    let dv = g_value_exact(basis, tau, &jumps, tau, true) - g_value_exact(basis, tau, &jumps, tau, false);
    let ds = g_slope_exact(basis, tau, &jumps, tau, true) - g_slope_exact(basis, tau, &jumps, tau, false);
    (dv, ds)
}

/// Whether both combined jump functions vanish identically at `w = 0`.
pub fn vanishes_at_zero(spec: &ImpulseSpec, c: &ImpulseCoefficients) -> bool {
    combined_jumps_exact(spec, c, &int(0)).is_ok_and(|(a, b)| a.is_zero() && b.is_zero())
}
