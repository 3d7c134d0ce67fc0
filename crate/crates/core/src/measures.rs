//! Positive Stieltjes measures (atoms plus an optional density), the
//! augmented functionals built from them, and kernel transforms
//! `s -> \int k(t,s) dC(t)`.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::expr::{Bindings, EvalError, Expression, Var};
use crate::poly::{PiecewisePoly, Poly};
use crate::quadrature::{self, QuadratureError, DEFAULT_REL_TOL};
use crate::rational::{self, Rational};
use crate::sl_kernel::GreenKernel;
use crate::value::{EvalMode, Value};

/// Samples used for the density positivity check.
pub const DENSITY_SAMPLES: usize = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MeasureError {
    #[error("atom at {0} sits on a discontinuity of the integrand")]
    AtomAtDiscontinuity(String),
    #[error("density: {0}")]
    Density(#[from] EvalError),
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub at: Rational,
    pub weight: Rational,
}

impl Atom {
    pub fn new(at: Rational, weight: Rational) -> Atom {
        Atom { at, weight }
    }
}

/// A function that measures can be applied to.
pub trait TestFunction: Sync {
    fn value(&self, t: f64) -> f64;

    fn exact_value(&self, _t: &Rational) -> Option<Rational> {
        None
    }

    /// Points where the function jumps; its value there is the left limit.
    fn discontinuities(&self) -> Vec<Rational> {
        Vec::new()
    }

    /// Points where the function is not smooth (quadrature breakpoints).
    fn kinks(&self) -> Vec<f64> {
        Vec::new()
    }

    fn exact_integral(&self, _lo: &Rational, _hi: &Rational) -> Option<Rational> {
        None
    }
}

impl TestFunction for Poly {
    fn value(&self, t: f64) -> f64 {
        self.eval_f64(t)
    }
    fn exact_value(&self, t: &Rational) -> Option<Rational> {
        Some(self.eval(t))
    }
    fn exact_integral(&self, lo: &Rational, hi: &Rational) -> Option<Rational> {
        Some(self.integral(lo, hi))
    }
}

impl TestFunction for PiecewisePoly {
    fn value(&self, t: f64) -> f64 {
        self.eval_f64(t)
    }
    fn exact_value(&self, t: &Rational) -> Option<Rational> {
        Some(self.eval(t))
    }
    fn kinks(&self) -> Vec<f64> {
        self.breakpoints().iter().map(rational::to_f64).collect()
    }
    fn exact_integral(&self, lo: &Rational, hi: &Rational) -> Option<Rational> {
        Some(self.integral(lo, hi))
    }
}

/// Wraps a closure as a (float-only, smooth) test function.
pub struct FnTest<F>(pub F);

impl<F: Fn(f64) -> f64 + Sync> TestFunction for FnTest<F> {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

fn density_at(density: &Expression, x: f64) -> Result<f64, EvalError> {
    density.eval(&Bindings::new().with(Var::S, x).with(Var::T, x))
}

fn density_breaks(density: &Expression) -> Vec<f64> {
    let mut out: Vec<f64> = [Var::S, Var::T]
        .iter()
        .flat_map(|v| density.guard_boundaries(*v))
        .map(|r| rational::to_f64(&r))
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StieltjesMeasure {
    pub atoms: Vec<Atom>,
    pub density: Option<Expression>,
}

impl StieltjesMeasure {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn atom(at: Rational, weight: Rational) -> Self {
        StieltjesMeasure { atoms: vec![Atom::new(at, weight)], density: None }
    }

    pub fn is_atomic(&self) -> bool {
        self.density.is_none()
    }

    /// Problems with the measure itself: non-positive weights, atoms outside
    /// `[0,1]`, and density values that are negative or fail at sample points.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.atoms {
            if !a.weight.is_positive() {
                out.push(format!("atom at {} has non-positive weight {}", rational::format(&a.at), rational::format(&a.weight)));
            }
            if a.at.is_negative() || a.at > rational::int(1) {
                out.push(format!("atom at {} lies outside [0, 1]", rational::format(&a.at)));
            }
        }
        if let Some(d) = &self.density {
            for j in 0..DENSITY_SAMPLES {
                let x = j as f64 / (DENSITY_SAMPLES - 1) as f64;
                match density_at(d, x) {
                    Ok(y) if y < 0.0 => {
                        out.push(format!("density is negative at s = {x} (sampled check)"));
                        break;
                    }
                    Ok(_) => {}
                    Err(e) => {
                        out.push(format!("density fails at s = {x}: {e}"));
                        break;
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, w: &dyn TestFunction) -> Result<Value, MeasureError> {
        let jumps = w.discontinuities();
        if let Some(a) = self.atoms.iter().find(|a| jumps.contains(&a.at)) {
            return Err(MeasureError::AtomAtDiscontinuity(rational::format(&a.at)));
        }
        let exact: Option<Rational> = if self.density.is_none() {
            self.atoms
                .iter()
                .map(|a| w.exact_value(&a.at).map(|v| v * &a.weight))
                .sum()
        } else {
            None
        };
        if let Some(v) = exact {
            return Ok(Value::Exact(v));
        }
        let mut total: f64 = self
            .atoms
            .iter()
            .map(|a| rational::to_f64(&a.weight) * w.value(rational::to_f64(&a.at)))
            .sum();
        if let Some(d) = &self.density {
            let mut breaks = w.kinks();
            breaks.extend(jumps.iter().map(rational::to_f64));
            breaks.extend(density_breaks(d));
            total += quadrature::integrate(
                |x| Ok(w.value(x) * density_at(d, x)?),
                0.0,
                1.0,
                &breaks,
                DEFAULT_REL_TOL,
            )?;
        }
        Ok(Value::Float(total))
    }

    /// `measure[1]`.
    pub fn total_mass(&self) -> Result<Value, MeasureError> {
        self.apply(&Poly::constant(rational::int(1)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Augment {
    /// Scale `h2`, atom weight `p12`.
    Tilde,
    /// Scale `h1`, atom weight `p11`.
    Bar,
}

/// `scale * base[w] + tau_weight * w(tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedMeasure {
    pub kind: Augment,
    pub base: StieltjesMeasure,
    pub scale: Rational,
    pub tau: Rational,
    pub tau_weight: Rational,
}

pub fn augment_tilde(alpha: &StieltjesMeasure, h2: &Rational, p12: &Rational, tau: &Rational) -> AugmentedMeasure {
    AugmentedMeasure {
        kind: Augment::Tilde,
        base: alpha.clone(),
        scale: h2.clone(),
        tau: tau.clone(),
        tau_weight: p12.clone(),
    }
}

pub fn augment_bar(alpha: &StieltjesMeasure, h1: &Rational, p11: &Rational, tau: &Rational) -> AugmentedMeasure {
    AugmentedMeasure {
        kind: Augment::Bar,
        base: alpha.clone(),
        scale: h1.clone(),
        tau: tau.clone(),
        tau_weight: p11.clone(),
    }
}

impl AugmentedMeasure {
    /// `w(tau)` is the left value when `w` jumps there.
    pub fn apply(&self, w: &dyn TestFunction) -> Result<Value, MeasureError> {
        let base = self.base.apply(w)?;
        let at_tau = match w.exact_value(&self.tau) {
            Some(v) => Value::Exact(v),
            None => Value::Float(w.value(rational::to_f64(&self.tau))),
        };
        Ok(Value::Exact(self.scale.clone())
            .mul(&base)
            .add(&Value::Exact(self.tau_weight.clone()).mul(&at_tau)))
    }
}

/// `s -> \int k(t,s) dC(t)`: an exact piecewise-affine part from the atoms
/// plus an optional scaled density part evaluated by quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTransform {
    kernel: GreenKernel,
    atomic: PiecewisePoly,
    density: Option<(Rational, Expression)>,
}

fn atomic_part(kernel: &GreenKernel, atoms: &[Atom]) -> PiecewisePoly {
    atoms.iter().fold(PiecewisePoly::new(vec![]), |acc, a| {
        acc.add(&kernel.section(&a.at).scale(&a.weight))
    })
}

pub fn kernel_transform(kernel: &GreenKernel, measure: &StieltjesMeasure) -> KernelTransform {
    KernelTransform {
        kernel: kernel.clone(),
        atomic: atomic_part(kernel, &measure.atoms),
        density: measure.density.clone().map(|d| (rational::int(1), d)),
    }
}

pub fn kernel_transform_augmented(kernel: &GreenKernel, measure: &AugmentedMeasure) -> KernelTransform {
    let base = atomic_part(kernel, &measure.base.atoms).scale(&measure.scale);
    let atomic = base.add(&kernel.section(&measure.tau).scale(&measure.tau_weight));
    KernelTransform {
        kernel: kernel.clone(),
        atomic,
        density: measure.base.density.clone().map(|d| (measure.scale.clone(), d)),
    }
}

impl KernelTransform {
    pub fn is_piecewise_affine(&self) -> bool {
        self.density.is_none()
    }

    pub fn atomic_part(&self) -> &PiecewisePoly {
        &self.atomic
    }

    pub fn eval(&self, s: f64) -> Result<f64, MeasureError> {
        let mut v = self.atomic.eval_f64(s);
        if let Some((scale, d)) = &self.density {
            let mut breaks = density_breaks(d);
            breaks.push(s);
            let k = &self.kernel;
            v += rational::to_f64(scale)
                * quadrature::integrate(|t| Ok(k.eval_f64(t, s) * density_at(d, t)?), 0.0, 1.0, &breaks, DEFAULT_REL_TOL)?;
        }
        Ok(v)
    }
}

impl TestFunction for KernelTransform {
    fn value(&self, s: f64) -> f64 {
        self.eval(s).unwrap_or(f64::NAN)
    }
    fn exact_value(&self, s: &Rational) -> Option<Rational> {
        self.density.is_none().then(|| self.atomic.eval(s))
    }
    fn kinks(&self) -> Vec<f64> {
        self.atomic.kinks()
    }
    fn exact_integral(&self, lo: &Rational, hi: &Rational) -> Option<Rational> {
        self.density.is_none().then(|| self.atomic.integral(lo, hi))
    }
}

/// `\int_lo^hi f(s) g(s) ds`; exact when `f` integrates exactly, `g` is a
/// constant and `mode` is exact, otherwise adaptive quadrature.
pub fn weighted_integral(
    f: &dyn TestFunction,
    g: &Expression,
    lo: &Rational,
    hi: &Rational,
    mode: EvalMode,
) -> Result<Value, MeasureError> {
    if mode == EvalMode::Exact {
        if let (Some(c), Some(i)) = (g.constant_value(), f.exact_integral(lo, hi)) {
            return Ok(Value::Exact(c * i));
        }
    }
    if lo >= hi {
        return Ok(Value::Exact(Rational::zero()));
    }
    let mut breaks = f.kinks();
    breaks.extend(f.discontinuities().iter().map(rational::to_f64));
    breaks.extend(density_breaks(g));
    let v = quadrature::integrate(
        |s| Ok(f.value(s) * density_at(g, s)?),
        rational::to_f64(lo),
        rational::to_f64(hi),
        &breaks,
        DEFAULT_REL_TOL,
    )?;
    Ok(Value::Float(v))
}
