//! Boundary basis, Green kernel and window constants for
//! `-w'' = h` with separated Sturm–Liouville boundary operators
//! `a1 w(0) - b1 w'(0)` and `a2 w(1) + b2 w'(1)`.

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::poly::{PiecewisePoly, Poly};
use crate::rational::{self, int, Rat, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KernelError {
    #[error("boundary coefficient {name} is negative")]
    NegativeCoefficient { name: &'static str },
    #[error("{which} boundary operator vanishes (both coefficients are zero)")]
    EmptyBoundaryOperator { which: &'static str },
    #[error("resonant boundary coefficients (a1*a2 + a1*b2 + a2*b1 = 0)")]
    Resonant,
    #[error("window [{a}, {b}] is not a proper subinterval of [0, 1]")]
    BadWindow { a: String, b: String },
    #[error("degenerate window: {which} vanishes at {at}")]
    DegenerateWindow { which: &'static str, at: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlCoefficients {
    pub a1: Rational,
    pub b1: Rational,
    pub a2: Rational,
    pub b2: Rational,
}

impl SlCoefficients {
    pub fn new(a1: Rational, b1: Rational, a2: Rational, b2: Rational) -> Self {
        SlCoefficients { a1, b1, a2, b2 }
    }

    pub fn from_ints(a1: i64, b1: i64, a2: i64, b2: i64) -> Self {
        Self::new(int(a1), int(b1), int(a2), int(b2))
    }

    pub fn determinant(&self) -> Rational {
        &self.a1 * &self.a2 + &self.a1 * &self.b2 + &self.a2 * &self.b1
    }

    /// Every violated requirement, not just the first.
    pub fn violations(&self) -> Vec<KernelError> {
        let mut out = Vec::new();
        for (name, x) in [("a1", &self.a1), ("b1", &self.b1), ("a2", &self.a2), ("b2", &self.b2)] {
            if x.is_negative() {
                out.push(KernelError::NegativeCoefficient { name });
            }
        }
        if (&self.a1 + &self.b1).is_zero() {
            out.push(KernelError::EmptyBoundaryOperator { which: "left" });
        }
        if (&self.a2 + &self.b2).is_zero() {
            out.push(KernelError::EmptyBoundaryOperator { which: "right" });
        }
        if out.is_empty() && !self.determinant().is_positive() {
            out.push(KernelError::Resonant);
        }
        out
    }
}

/// Affine `gamma`, `delta` and the (constant) Wronskian.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryBasis {
    pub coeffs: SlCoefficients,
    pub gamma: Poly,
    pub delta: Poly,
    pub wronskian: Rational,
}

pub fn make_basis(coeffs: &SlCoefficients) -> Result<BoundaryBasis, KernelError> {
    if let Some(e) = coeffs.violations().into_iter().next() {
        return Err(e);
    }
    let d = coeffs.determinant();
    let SlCoefficients { a1, b1, a2, b2 } = coeffs;
    let gamma = Poly::affine((a2 + b2) / &d, -a2 / &d);
    let delta = Poly::affine(b1 / &d, a1 / &d);
    Ok(BoundaryBasis {
        coeffs: coeffs.clone(),
        gamma,
        delta,
        wronskian: int(1) / d,
    })
}

impl BoundaryBasis {
    pub fn gamma_at(&self, t: &Rational) -> Rational {
        self.gamma.eval(t)
    }

    pub fn delta_at(&self, t: &Rational) -> Rational {
        self.delta.eval(t)
    }

    /// `gamma(t) delta'(t) - delta(t) gamma'(t)`, computed from the polynomials.
    pub fn wronskian_at(&self, t: &Rational) -> Rational {
        self.gamma.eval(t) * self.delta.slope() - self.delta.eval(t) * self.gamma.slope()
    }

    /// `gamma` is nonincreasing, so its sup norm is `gamma(0)`.
    pub fn gamma_norm(&self) -> Rational {
        self.gamma.intercept()
    }

    /// `delta` is nondecreasing, so its sup norm is `delta(1)`.
    pub fn delta_norm(&self) -> Rational {
        self.delta.eval(&int(1))
    }

    /// Left operator `a1 w(0) - b1 w'(0)` applied to an affine function.
    pub fn left_operator(&self, p: &Poly) -> Rational {
        &self.coeffs.a1 * p.intercept() - &self.coeffs.b1 * p.slope()
    }

    /// Right operator `a2 w(1) + b2 w'(1)` applied to an affine function.
    pub fn right_operator(&self, p: &Poly) -> Rational {
        &self.coeffs.a2 * p.eval(&int(1)) + &self.coeffs.b2 * p.slope()
    }

    pub fn to_f64(&self) -> BasisF64 {
        let f = rational::to_f64;
        BasisF64 {
            g0: f(&self.gamma.intercept()),
            g1: f(&self.gamma.slope()),
            d0: f(&self.delta.intercept()),
            d1: f(&self.delta.slope()),
            w: f(&self.wronskian),
        }
    }
}

/// Float copy of a basis for inner loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisF64 {
    pub g0: f64,
    pub g1: f64,
    pub d0: f64,
    pub d1: f64,
    pub w: f64,
}

impl BasisF64 {
    pub fn gamma(&self, t: f64) -> f64 {
        self.g0 + self.g1 * t
    }

    pub fn delta(&self, t: f64) -> f64 {
        self.d0 + self.d1 * t
    }

    pub fn kernel(&self, t: f64, s: f64) -> f64 {
        if s <= t {
            self.gamma(t) * self.delta(s) / self.w
        } else {
            self.gamma(s) * self.delta(t) / self.w
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenKernel {
    pub basis: BoundaryBasis,
    fast: BasisF64,
}

impl GreenKernel {
    pub fn new(basis: BoundaryBasis) -> GreenKernel {
        let fast = basis.to_f64();
        GreenKernel { basis, fast }
    }

    pub fn eval(&self, t: &Rational, s: &Rational) -> Rational {
        let b = &self.basis;
        if s <= t {
            b.gamma_at(t) * b.delta_at(s) / &b.wronskian
        } else {
            b.gamma_at(s) * b.delta_at(t) / &b.wronskian
        }
    }

    pub fn eval_f64(&self, t: f64, s: f64) -> f64 {
        self.fast.kernel(t, s)
    }

    pub fn fast(&self) -> &BasisF64 {
        &self.fast
    }

    /// `Phi(s) = gamma(s) delta(s) / W`.
    pub fn phi(&self) -> Poly {
        let b = &self.basis;
        b.gamma.mul(&b.delta).scale(&(int(1) / &b.wronskian))
    }

    /// `s -> k(eta, s)` on `[0, 1]`, affine on each side of `eta`.
    pub fn section(&self, eta: &Rational) -> PiecewisePoly {
        let b = &self.basis;
        let left = b.delta.scale(&(b.gamma_at(eta) / &b.wronskian));
        let right = b.gamma.scale(&(b.delta_at(eta) / &b.wronskian));
        let mut pieces = Vec::new();
        if eta.is_positive() {
            pieces.push((int(0), eta.clone(), left));
        }
        if eta < &int(1) {
            pieces.push((eta.clone(), int(1), right));
        }
        PiecewisePoly::new(pieces)
    }

    /// `t -> \int_lo^hi k(t, s) ds` for `t` in `[lo, hi]`, a polynomial of degree at most 2.
    pub fn row_integral(&self, lo: &Rational, hi: &Rational) -> Poly {
        let b = &self.basis;
        let big_delta = b.delta.antiderivative();
        let big_gamma = b.gamma.antiderivative();
        let near = big_delta.sub(&Poly::constant(big_delta.eval(lo)));
        let far = Poly::constant(big_gamma.eval(hi)).sub(&big_gamma);
        b.gamma
            .mul(&near)
            .add(&b.delta.mul(&far))
            .scale(&(int(1) / &b.wronskian))
    }
}

/// `c_Phi`, `c_gamma`, `c_delta` for a window `[a, b]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalConstants {
    pub c_phi: Rat,
    pub c_gamma: Rat,
    pub c_delta: Rat,
}

pub fn interval_constants(basis: &BoundaryBasis, a: &Rational, b: &Rational) -> Result<IntervalConstants, KernelError> {
    if a.is_negative() || a >= b || b > &int(1) {
        return Err(KernelError::BadWindow {
            a: rational::format(a),
            b: rational::format(b),
        });
    }
    let gamma_b = basis.gamma_at(b);
    if gamma_b.is_zero() {
        return Err(KernelError::DegenerateWindow { which: "gamma", at: rational::format(b) });
    }
    let delta_a = basis.delta_at(a);
    if delta_a.is_zero() {
        return Err(KernelError::DegenerateWindow { which: "delta", at: rational::format(a) });
    }
    let c_gamma = gamma_b / basis.gamma_norm();
    let c_delta = delta_a / basis.delta_norm();
    let c_phi = c_gamma.clone().min(c_delta.clone());
    Ok(IntervalConstants {
        c_phi: Rat(c_phi),
        c_gamma: Rat(c_gamma),
        c_delta: Rat(c_delta),
    })
}

/// Smallest `k(t,s)/Phi(s)` over an `n x n` grid on `[a,b] x [0,1]`
/// (points with `Phi(s) = 0` skipped). Never below `c_Phi`; approaches it as `n` grows.
pub fn sampled_window_ratio(kernel: &GreenKernel, a: &Rational, b: &Rational, n: usize) -> Rational {
    let phi = kernel.phi();
    let n = n.max(2);
    let mut best: Option<Rational> = None;
    for i in 0..n {
        let t = a + (b - a) * rational::ratio(i as i64, n as i64 - 1);
        for j in 0..n {
            let s = rational::ratio(j as i64, n as i64 - 1);
            let p = phi.eval(&s);
            if p.is_zero() {
                continue;
            }
            let r = kernel.eval(&t, &s) / p;
            if best.as_ref().is_none_or(|x| &r < x) {
                best = Some(r);
            }
        }
    }
    best.unwrap_or_else(|| int(1))
}

/// `1/m = sup_{[0,1]} \int_0^1 k(t,s) ds` and `1/M = inf_{[a,b]} \int_a^b k(t,s) ds`
/// for `g = 1`, with the points where they are attained.
pub fn unit_weight_bounds(kernel: &GreenKernel, a: &Rational, b: &Rational) -> UnitWeightBounds {
    let zero = int(0);
    let one = int(1);
    let full = kernel.row_integral(&zero, &one);
    let (_, (sup, sup_at)) = full.extrema_quadratic(&zero, &one);
    let window = kernel.row_integral(a, b);
    let ((inf, inf_at), _) = window.extrema_quadratic(a, b);
    UnitWeightBounds { one_over_m: sup, sup_at, one_over_big_m: inf, inf_at }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitWeightBounds {
    pub one_over_m: Rational,
    pub sup_at: Rational,
    pub one_over_big_m: Rational,
    pub inf_at: Rational,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;
    use num_traits::One;

    fn basis(a1: i64, b1: i64, a2: i64, b2: i64) -> BoundaryBasis {
        make_basis(&SlCoefficients::from_ints(a1, b1, a2, b2)).unwrap()
    }

    #[test]
    fn closed_forms() {
        let b = basis(1, 0, 1, 0);
        assert_eq!(b.gamma, Poly::affine(int(1), int(-1)));
        assert_eq!(b.delta, Poly::affine(int(0), int(1)));
        assert_eq!(b.wronskian, int(1));

        let b = basis(1, 0, 0, 1);
        assert_eq!(b.gamma, Poly::constant(int(1)));
        assert_eq!(b.delta, Poly::affine(int(0), int(1)));
        assert_eq!(b.wronskian, int(1));

        let b = basis(1, 1, 1, 1);
        assert_eq!(b.gamma, Poly::affine(ratio(2, 3), ratio(-1, 3)));
        assert_eq!(b.delta, Poly::affine(ratio(1, 3), ratio(1, 3)));
        assert_eq!(b.wronskian, ratio(1, 3));
    }

    #[test]
    fn boundary_identities() {
        for c in [(1, 0, 1, 0), (1, 0, 0, 1), (1, 1, 1, 1), (3, 2, 0, 5), (0, 1, 2, 7)] {
            let b = basis(c.0, c.1, c.2, c.3);
            assert!(b.left_operator(&b.gamma).is_one());
            assert!(b.right_operator(&b.gamma).is_zero());
            assert!(b.left_operator(&b.delta).is_zero());
            assert!(b.right_operator(&b.delta).is_one());
            assert_eq!(b.wronskian_at(&ratio(1, 7)), b.wronskian);
            assert_eq!(b.wronskian_at(&ratio(5, 6)), b.wronskian);
        }
    }

    #[test]
    fn rejects_bad_coefficients() {
        assert_eq!(make_basis(&SlCoefficients::from_ints(0, 1, 0, 1)), Err(KernelError::Resonant));
        assert_eq!(
            make_basis(&SlCoefficients::from_ints(0, 0, 1, 0)),
            Err(KernelError::EmptyBoundaryOperator { which: "left" })
        );
        assert!(matches!(
            make_basis(&SlCoefficients::from_ints(1, -1, 1, 0)),
            Err(KernelError::NegativeCoefficient { name: "b1" })
        ));
    }

    #[test]
    fn kernel_values() {
        let k1 = GreenKernel::new(basis(1, 0, 1, 0));
        assert_eq!(k1.eval(&ratio(3, 4), &ratio(1, 4)), ratio(1, 16));
        let k2 = GreenKernel::new(basis(1, 0, 0, 1));
        assert_eq!(k2.eval(&ratio(1, 3), &ratio(2, 3)), ratio(1, 3));
        assert!(k1.eval(&ratio(1, 2), &int(0)).is_zero());
        assert!((k1.eval_f64(0.75, 0.25) - 0.0625).abs() < 1e-16);
    }

    #[test]
    fn sections_match_pointwise() {
        let k = GreenKernel::new(basis(1, 1, 1, 1));
        let eta = ratio(2, 5);
        let sec = k.section(&eta);
        for j in 0..=10 {
            let s = ratio(j, 10);
            assert_eq!(sec.eval(&s), k.eval(&eta, &s));
        }
    }

    #[test]
    fn window_constants() {
        let b1 = basis(1, 0, 1, 0);
        let c = interval_constants(&b1, &ratio(1, 4), &ratio(3, 4)).unwrap();
        assert_eq!((c.c_phi.0, c.c_gamma.0, c.c_delta.0), (ratio(1, 4), ratio(1, 4), ratio(1, 4)));
        let b2 = basis(1, 0, 0, 1);
        let c = interval_constants(&b2, &ratio(1, 2), &int(1)).unwrap();
        assert_eq!((c.c_phi.0, c.c_gamma.0, c.c_delta.0), (ratio(1, 2), int(1), ratio(1, 2)));
        assert!(matches!(
            interval_constants(&b1, &int(0), &int(1)),
            Err(KernelError::DegenerateWindow { .. })
        ));
    }

    #[test]
    fn sampled_ratio_agrees_with_closed_form() {
        let k = GreenKernel::new(basis(1, 0, 1, 0));
        let (a, b) = (ratio(1, 4), ratio(3, 4));
        let c = interval_constants(&k.basis, &a, &b).unwrap();
        // the infimum is approached as s -> 1, where Phi vanishes
        let sampled = sampled_window_ratio(&k, &a, &b, 21);
        assert!(sampled >= c.c_phi.0);
        assert_eq!(sampled, c.c_phi.0 / ratio(19, 20));
    }

    #[test]
    fn row_integral_closed_form() {
        // t(1-t)/2 for the Dirichlet kernel
        let k = GreenKernel::new(basis(1, 0, 1, 0));
        let p = k.row_integral(&int(0), &int(1));
        assert_eq!(p, Poly::new(vec![int(0), ratio(1, 2), ratio(-1, 2)]));
        let quad = crate::quadrature::integrate(|s| Ok(k.eval_f64(0.3, s)), 0.0, 1.0, &[0.3], 1e-13).unwrap();
        assert!((quad - p.eval_f64(0.3)).abs() < 1e-12);
    }

    #[test]
    fn unit_weight_bounds_of_example_kernels() {
        let k1 = GreenKernel::new(basis(1, 0, 1, 0));
        let u = unit_weight_bounds(&k1, &ratio(1, 4), &ratio(3, 4));
        assert_eq!(u.one_over_m, ratio(1, 8));
        assert_eq!(u.one_over_big_m, ratio(1, 16));
        let k2 = GreenKernel::new(basis(1, 0, 0, 1));
        let u = unit_weight_bounds(&k2, &ratio(1, 2), &int(1));
        assert_eq!(u.one_over_m, ratio(1, 2));
        assert_eq!(u.one_over_big_m, ratio(1, 4));
    }
}
