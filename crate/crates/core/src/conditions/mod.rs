//! Bound constants and the three index conditions.

pub mod extremum;
pub mod hypotheses;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::cone::{cone_constants, ConeData};
use crate::expr::{Bindings, EvalError, Expression, Var};
use crate::measures::{augment_bar, augment_tilde, kernel_transform_augmented, weighted_integral, MeasureError};
use crate::problem::{Equation, Problem};
use crate::quadrature::{self, QuadratureError, DEFAULT_REL_TOL};
use crate::rational::{self, int, Rat, Rational};
use crate::sl_kernel::{unit_weight_bounds, GreenKernel};
use crate::value::{EvalMode, Value};

pub use extremum::{box_extremum, BoxExtremum, Extremum, FBox, Provenance};
pub use hypotheses::{check_hypotheses, default_w_max, HypothesisCheck, HypothesisReport};

/// Strictness margin for inequalities decided in floating point.
pub const NUMERIC_MARGIN: f64 = 1e-9;
const SCAN_POINTS: usize = 201;
const GOLDEN_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConditionError {
    #[error("equation {equation}: {what} [weight g_i: nonnegative with positive integral of Phi_i g_i over the window]")]
    Degenerate { equation: usize, what: String },
    #[error("equation {equation}: {source}")]
    Measure { equation: usize, source: MeasureError },
    #[error("equation {equation}: {source}")]
    Quadrature { equation: usize, source: QuadratureError },
    #[error("equation {equation}: evaluating f: {source}")]
    Eval { equation: usize, source: EvalError },
    #[error("equation {equation}: alpha~[gamma] = {value} is not below 1 [standing assumption alpha~_i[gamma_i] < 1]")]
    Precondition { equation: usize, value: String },
}

/// Constants entering the conditions for one equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationConstants {
    pub one_over_m: Value,
    pub m_attained_at: f64,
    pub one_over_big_m: Value,
    pub big_m_attained_at: f64,
    pub alpha_tilde_gamma: Value,
    pub alpha_tilde_delta: Value,
    pub alpha_bar_gamma: Value,
    pub beta_mass: Value,
    pub int_k_tilde: Value,
    pub int_k_bar: Value,
    pub int_phi_g_window: Value,
    pub gamma_norm: Rat,
    pub delta_norm: Rat,
    pub c_gamma: Rat,
}

impl EquationConstants {
    pub fn m(&self) -> Option<Value> {
        self.one_over_m.recip()
    }

    pub fn big_m(&self) -> Option<Value> {
        self.one_over_big_m.recip()
    }
}

fn g_at(g: &Expression, s: f64) -> Result<f64, EvalError> {
    g.eval(&Bindings::new().with(Var::S, s).with(Var::T, s))
}

fn g_breaks(g: &Expression) -> Vec<f64> {
    [Var::S, Var::T]
        .iter()
        .flat_map(|v| g.guard_boundaries(*v))
        .map(|r| rational::to_f64(&r))
        .collect()
}

/// `t -> \int_lo^hi k(t,s) g(s) ds` by quadrature.
fn row_integral_numeric(k: &GreenKernel, g: &Expression, t: f64, lo: f64, hi: f64) -> Result<f64, QuadratureError> {
    let mut breaks = g_breaks(g);
    breaks.push(t);
    quadrature::integrate(|s| Ok(k.eval_f64(t, s) * g_at(g, s)?), lo, hi, &breaks, DEFAULT_REL_TOL)
}

/// Extremum of a scalar function on `[lo, hi]`: scan, then golden-section refinement.
fn scan_extremum(
    h: impl Fn(f64) -> Result<f64, QuadratureError>,
    lo: f64,
    hi: f64,
    maximize: bool,
) -> Result<(f64, f64), QuadratureError> {
    let sign = if maximize { -1.0 } else { 1.0 };
    let obj = |t: f64| h(t).map(|y| sign * y);
    let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
    let mut best = (obj(lo)?, lo);
    for j in 1..SCAN_POINTS {
        let t = lo + step * j as f64;
        let y = obj(t)?;
        if y < best.0 {
            best = (y, t);
        }
    }
    let (mut a, mut b) = ((best.1 - step).max(lo), (best.1 + step).min(hi));
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (obj(x1)?, obj(x2)?);
    while b - a > GOLDEN_TOL {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = obj(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = obj(x2)?;
        }
    }
    for (y, t) in [(f1, x1), (f2, x2)] {
        if y < best.0 {
            best = (y, t);
        }
    }
    Ok((sign * best.0, best.1))
}

pub fn equation_constants(eq: &Equation, mode: EvalMode) -> Result<EquationConstants, ConditionError> {
    let i = eq.index;
    let merr = |source| ConditionError::Measure { equation: i, source };
    let qerr = |source| ConditionError::Quadrature { equation: i, source };
    let (a, b) = (&eq.window.0, &eq.window.1);
    let (af, bf) = (rational::to_f64(a), rational::to_f64(b));
    let exact = mode == EvalMode::Exact;

    let (one_over_m, m_at, one_over_big_m, big_m_at) = match (exact, eq.g.constant_value()) {
        (true, Some(cg)) => {
            let u = unit_weight_bounds(&eq.kernel, a, b);
            (
                Value::Exact(&cg * &u.one_over_m),
                rational::to_f64(&u.sup_at),
                Value::Exact(&cg * &u.one_over_big_m),
                rational::to_f64(&u.inf_at),
            )
        }
        _ => {
            let k = &eq.kernel;
            let (sup, sat) = scan_extremum(|t| row_integral_numeric(k, &eq.g, t, 0.0, 1.0), 0.0, 1.0, true).map_err(qerr)?;
            let (inf, iat) = scan_extremum(|t| row_integral_numeric(k, &eq.g, t, af, bf), af, bf, false).map_err(qerr)?;
            (Value::Float(sup), sat, Value::Float(inf), iat)
        }
    };

    let phi = eq.kernel.phi();
    let int_phi_g_window = weighted_integral(&phi, &eq.g, a, b, mode).map_err(merr)?;
    if !int_phi_g_window.is_positive() {
        return Err(ConditionError::Degenerate {
            equation: i,
            what: format!("integral of Phi*g over the window is {}", int_phi_g_window),
        });
    }
    if !one_over_big_m.is_positive() {
        return Err(ConditionError::Degenerate { equation: i, what: "1/M_i vanishes".into() });
    }

    let imp = &eq.impulse;
    let tilde = augment_tilde(&eq.alpha, &eq.h2, &imp.p12, &imp.tau);
    let bar = augment_bar(&eq.alpha, &eq.h1, &imp.p11, &imp.tau);
    let in_mode = |v: Value| v.in_mode(mode);
    let alpha_tilde_gamma = in_mode(tilde.apply(&eq.basis.gamma).map_err(merr)?);
    let alpha_tilde_delta = in_mode(tilde.apply(&eq.basis.delta).map_err(merr)?);
    let alpha_bar_gamma = in_mode(bar.apply(&eq.basis.gamma).map_err(merr)?);
    let beta_mass = in_mode(eq.beta.total_mass().map_err(merr)?);
    let kt = kernel_transform_augmented(&eq.kernel, &tilde);
    let kb = kernel_transform_augmented(&eq.kernel, &bar);
    let int_k_tilde = weighted_integral(&kt, &eq.g, &int(0), &int(1), mode).map_err(merr)?;
    let int_k_bar = weighted_integral(&kb, &eq.g, a, b, mode).map_err(merr)?;

    Ok(EquationConstants {
        one_over_m: in_mode(one_over_m),
        m_attained_at: m_at,
        one_over_big_m: in_mode(one_over_big_m),
        big_m_attained_at: big_m_at,
        alpha_tilde_gamma,
        alpha_tilde_delta,
        alpha_bar_gamma,
        beta_mass,
        int_k_tilde,
        int_k_bar,
        int_phi_g_window,
        gamma_norm: Rat(eq.basis.gamma_norm()),
        delta_norm: Rat(eq.basis.delta_norm()),
        c_gamma: eq.window_constants.c_gamma.clone(),
    })
}

/// Constants for both equations.
pub fn bound_constants(problem: &Problem, mode: EvalMode) -> Result<[EquationConstants; 2], ConditionError> {
    Ok([
        equation_constants(&problem.equations[0], mode)?,
        equation_constants(&problem.equations[1], mode)?,
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Too close to call in floating point.
    Inconclusive,
}

impl Verdict {
    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// Decides `lhs < 1` (`below = true`) or `lhs > 1`.
fn decide(lhs: &Value, below: bool) -> Verdict {
    let ok = |b: bool| if b { Verdict::Pass } else { Verdict::Fail };
    match lhs {
        Value::Exact(r) => ok(if below { r < &Rational::one() } else { r > &Rational::one() }),
        Value::Float(x) => {
            let x = *x;
            if below {
                if x < 1.0 - NUMERIC_MARGIN {
                    Verdict::Pass
                } else if x > 1.0 + NUMERIC_MARGIN {
                    Verdict::Fail
                } else {
                    Verdict::Inconclusive
                }
            } else if x > 1.0 + NUMERIC_MARGIN {
                Verdict::Pass
            } else if x < 1.0 - NUMERIC_MARGIN {
                Verdict::Fail
            } else {
                Verdict::Inconclusive
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ConditionKind {
    #[serde(rename = "I1")]
    I1,
    #[serde(rename = "I0")]
    I0,
    #[serde(rename = "I0*")]
    I0Star,
}

impl ConditionKind {
    pub fn label(self) -> &'static str {
        match self {
            ConditionKind::I1 => "I1",
            ConditionKind::I0 => "I0",
            ConditionKind::I0Star => "I0*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquationCondition {
    pub equation: usize,
    pub lhs: Value,
    /// The condition holds for this equation iff the f-extremum (divided by
    /// rho) is below (I1) or above (I0, I0*) this value.
    pub threshold: Option<Value>,
    /// `f`-extremum divided by `rho`.
    pub f_ratio: Value,
    pub extremum: BoxExtremum,
    pub f_box: String,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub rho: Rat,
    pub condition: ConditionKind,
    pub c: Rat,
    /// `both` or `some` equation must satisfy the inequality.
    pub quantifier: &'static str,
    pub equations: Vec<EquationCondition>,
    pub verdict: Verdict,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PreconditionReport {
    pub alpha_tilde_gamma: [Value; 2],
    pub pass: bool,
}

/// Everything the conditions need, computed once per problem.
#[derive(Debug, Clone)]
pub struct ConditionContext<'a> {
    pub problem: &'a Problem,
    pub constants: [EquationConstants; 2],
    pub cone: ConeData,
    pub mode: EvalMode,
    pub samples: usize,
}

impl<'a> ConditionContext<'a> {
    pub fn new(problem: &'a Problem, mode: EvalMode, samples: usize) -> Result<Self, ConditionError> {
        Ok(ConditionContext {
            problem,
            constants: bound_constants(problem, mode)?,
            cone: cone_constants(problem),
            mode,
            samples,
        })
    }

    pub fn for_problem(problem: &'a Problem) -> Result<Self, ConditionError> {
        Self::new(problem, problem.analysis.mode, problem.analysis.samples)
    }

    /// A copy sampling box extrema with a different resolution.
    pub fn with_samples(&self, samples: usize) -> Self {
        ConditionContext { samples, ..self.clone() }
    }

    pub fn check_precondition(&self) -> PreconditionReport {
        let a = [self.constants[0].alpha_tilde_gamma.clone(), self.constants[1].alpha_tilde_gamma.clone()];
        let pass = a.iter().all(|v| decide(v, true).passed());
        PreconditionReport { alpha_tilde_gamma: a, pass }
    }

    fn v(&self, r: &Rational) -> Value {
        Value::Exact(r.clone()).in_mode(self.mode)
    }

    /// Constant part and f-coefficient of the I1 left-hand side.
    pub fn i1_parts(&self, i: usize) -> (Value, Value) {
        let k = &self.constants[i];
        let eq = &self.problem.equations[i];
        let one = self.v(&int(1));
        let denom = one.sub(&k.alpha_tilde_gamma);
        let gn = self.v(&k.gamma_norm.0);
        let ratio = gn.div(&denom).unwrap_or(Value::Float(f64::INFINITY));
        let first = ratio
            .mul(&k.alpha_tilde_delta)
            .add(&self.v(&k.delta_norm.0))
            .mul(&self.v(&eq.l2).mul(&k.beta_mass).add(&self.v(&eq.impulse.p22)));
        let coef = k.one_over_m.add(&ratio.mul(&k.int_k_tilde));
        (first, coef)
    }

    /// Coefficient of the f-extremum in the I0 and I0* left-hand sides.
    pub fn i0_coefficient(&self, i: usize) -> Value {
        let k = &self.constants[i];
        let one = self.v(&int(1));
        let denom = one.sub(&k.alpha_bar_gamma);
        self.v(&k.c_gamma.0)
            .mul(&self.v(&k.gamma_norm.0))
            .div(&denom)
            .unwrap_or(Value::Float(f64::INFINITY))
            .mul(&k.int_k_bar)
            .add(&k.one_over_big_m)
    }

    /// Largest admissible `f^{0,rho}` for I1.
    pub fn i1_threshold(&self, i: usize) -> Option<Value> {
        let (first, coef) = self.i1_parts(i);
        if !self.v(&int(1)).sub(&first).is_positive() {
            return None;
        }
        self.v(&int(1)).sub(&first).div(&coef)
    }

    /// Smallest admissible f-extremum for I0 / I0*.
    pub fn i0_threshold(&self, i: usize) -> Option<Value> {
        self.i0_coefficient(i).recip()
    }

    fn f_box(&self, kind: ConditionKind, i: usize, rho: &Rational, c: &Rational) -> (FBox, Extremum) {
        let eq = &self.problem.equations[i];
        let z = int(0);
        let big = rho / c;
        match kind {
            ConditionKind::I1 => (FBox::new((z.clone(), int(1)), (z.clone(), rho.clone()), (z, rho.clone())), Extremum::Sup),
            ConditionKind::I0 => {
                let own = (rho.clone(), big.clone());
                let other = (z, big);
                let t = eq.window.clone();
                if i == 0 {
                    (FBox::new(t, own, other), Extremum::Inf)
                } else {
                    (FBox::new(t, other, own), Extremum::Inf)
                }
            }
            ConditionKind::I0Star => (FBox::new(eq.window.clone(), (z.clone(), big.clone()), (z, big)), Extremum::Inf),
        }
    }

    pub fn check(&self, kind: ConditionKind, rho: &Rational, c: &Rational) -> Result<ConditionReport, ConditionError> {
        let mut eqs = Vec::with_capacity(2);
        let mut provenance = Provenance::Exact;
        for i in 0..2 {
            let eq = &self.problem.equations[i];
            let (bx, ext) = self.f_box(kind, i, rho, c);
            let e = box_extremum(&eq.f, &eq.f_monotone, &bx, ext, self.samples, self.mode)
                .map_err(|source| ConditionError::Eval { equation: i + 1, source })?;
            let f_ratio = e.value.div(&self.v(rho)).expect("rho > 0");
            let (lhs, threshold, below) = match kind {
                ConditionKind::I1 => {
                    let (first, coef) = self.i1_parts(i);
                    (first.add(&f_ratio.mul(&coef)), self.i1_threshold(i), true)
                }
                ConditionKind::I0 | ConditionKind::I0Star => {
                    (f_ratio.mul(&self.i0_coefficient(i)), self.i0_threshold(i), false)
                }
            };
            let verdict = decide(&lhs, below);
            let p = if lhs.is_exact() { e.provenance } else { e.provenance.max(Provenance::Numeric) };
            provenance = provenance.max(p);
            eqs.push(EquationCondition {
                equation: i + 1,
                lhs,
                threshold,
                f_ratio,
                extremum: e,
                f_box: bx.describe(),
                verdict,
            });
        }
        let (quantifier, verdict) = match kind {
            ConditionKind::I0Star => {
                let v = if eqs.iter().any(|e| e.verdict.passed()) {
                    Verdict::Pass
                } else if eqs.iter().any(|e| e.verdict == Verdict::Inconclusive) {
                    Verdict::Inconclusive
                } else {
                    Verdict::Fail
                };
                ("some", v)
            }
            _ => {
                let v = if eqs.iter().all(|e| e.verdict.passed()) {
                    Verdict::Pass
                } else if eqs.iter().any(|e| e.verdict == Verdict::Fail) {
                    Verdict::Fail
                } else {
                    Verdict::Inconclusive
                };
                ("both", v)
            }
        };
        Ok(ConditionReport {
            rho: Rat(rho.clone()),
            condition: kind,
            c: Rat(c.clone()),
            quantifier,
            equations: eqs,
            verdict,
            provenance,
        })
    }

    pub fn check_i1(&self, rho: &Rational) -> Result<ConditionReport, ConditionError> {
        self.check(ConditionKind::I1, rho, &self.cone.c.0)
    }

    pub fn check_i0(&self, rho: &Rational, c: &Rational) -> Result<ConditionReport, ConditionError> {
        self.check(ConditionKind::I0, rho, c)
    }

    pub fn check_i0_star(&self, rho: &Rational, c: &Rational) -> Result<ConditionReport, ConditionError> {
        self.check(ConditionKind::I0Star, rho, c)
    }
}

/// Whether `x` is a nonnegative value.
pub fn nonnegative(x: &Value) -> bool {
    match x {
        Value::Exact(r) => !r.is_negative(),
        Value::Float(f) => *f >= 0.0,
    }
}

/// `Zero` test usable in reports.
pub fn is_zero(x: &Value) -> bool {
    match x {
        Value::Exact(r) => r.is_zero(),
        Value::Float(f) => *f == 0.0,
    }
}
