//! Exact polynomials in one variable and piecewise polynomials on intervals.

use std::fmt;

use num_traits::{One, Zero};

use crate::rational::{self, Rational};

/// Polynomial with rational coefficients, lowest degree first.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Poly {
    coeffs: Vec<Rational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<Rational>) -> Poly {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Rational) -> Poly {
        Poly::new(vec![c])
    }

    /// `intercept + slope * x`.
    pub fn affine(intercept: Rational, slope: Rational) -> Poly {
        Poly::new(vec![intercept, slope])
    }

    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn intercept(&self) -> Rational {
        self.coeff(0)
    }

    pub fn slope(&self) -> Rational {
        self.coeff(1)
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        self.coeffs
            .iter()
            .rev()
            .fold(Rational::zero(), |acc, c| acc * x + c)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * x + rational::to_f64(c))
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| c * rational::int(k as i64))
                .collect(),
        )
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![Rational::zero()];
        out.extend(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| c / rational::int(k as i64 + 1)),
        );
        Poly::new(out)
    }

    pub fn integral(&self, lo: &Rational, hi: &Rational) -> Rational {
        let anti = self.antiderivative();
        anti.eval(hi) - anti.eval(lo)
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Poly::new((0..n).map(|k| self.coeff(k) + o.coeff(k)).collect())
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Poly::zero();
        }
        let mut out = vec![Rational::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in o.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly::new(out)
    }

    /// Minimum and maximum over `[lo, hi]` with their arguments; degree ≤ 2 only.
    pub fn extrema_quadratic(&self, lo: &Rational, hi: &Rational) -> ((Rational, Rational), (Rational, Rational)) {
        assert!(self.degree() <= 2, "extrema_quadratic needs degree <= 2");
        let mut candidates = vec![lo.clone(), hi.clone()];
        let a = self.coeff(2);
        if !a.is_zero() {
            let vertex = -self.coeff(1) / (rational::int(2) * a);
            if &vertex > lo && &vertex < hi {
                candidates.push(vertex);
            }
        }
        let values: Vec<(Rational, Rational)> =
            candidates.into_iter().map(|x| (self.eval(&x), x)).collect();
        let min = values.iter().min_by(|p, q| p.0.cmp(&q.0)).cloned().unwrap();
        let max = values.iter().max_by(|p, q| p.0.cmp(&q.0)).cloned().unwrap();
        ((min.0, min.1), (max.0, max.1))
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return f.write_str("0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            let text = rational::format(c);
            match k {
                0 => f.write_str(&text)?,
                1 => write!(f, "({text})*x")?,
                _ => write!(f, "({text})*x^{k}")?,
            }
        }
        Ok(())
    }
}

/// Polynomial pieces on consecutive closed intervals.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly {
    pieces: Vec<(Rational, Rational, Poly)>,
}

impl PiecewisePoly {
    /// Pieces must be ordered and contiguous.
    pub fn new(pieces: Vec<(Rational, Rational, Poly)>) -> PiecewisePoly {
        debug_assert!(pieces.windows(2).all(|w| w[0].1 == w[1].0));
        PiecewisePoly { pieces }
    }

    pub fn pieces(&self) -> &[(Rational, Rational, Poly)] {
        &self.pieces
    }

    pub fn add(&self, o: &PiecewisePoly) -> PiecewisePoly {
        let mut cuts: Vec<Rational> = self
            .pieces
            .iter()
            .chain(o.pieces.iter())
            .flat_map(|(a, b, _)| [a.clone(), b.clone()])
            .collect();
        cuts.sort();
        cuts.dedup();
        let pieces = cuts
            .windows(2)
            .map(|w| {
                let mid = (&w[0] + &w[1]) / rational::int(2);
                let p = self.poly_at(&mid).add(&o.poly_at(&mid));
                (w[0].clone(), w[1].clone(), p)
            })
            .collect();
        PiecewisePoly { pieces }
    }

    pub fn scale(&self, c: &Rational) -> PiecewisePoly {
        PiecewisePoly {
            pieces: self
                .pieces
                .iter()
                .map(|(a, b, p)| (a.clone(), b.clone(), p.scale(c)))
                .collect(),
        }
    }

    fn poly_at(&self, x: &Rational) -> Poly {
        self.pieces
            .iter()
            .find(|(a, b, _)| a <= x && x <= b)
            .map(|(_, _, p)| p.clone())
            .unwrap_or_default()
    }

    /// Value at `x`; at a shared endpoint the left piece is used.
    pub fn eval(&self, x: &Rational) -> Rational {
        self.poly_at(x).eval(x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        self.pieces
            .iter()
            .find(|(a, b, _)| rational::to_f64(a) <= x && x <= rational::to_f64(b))
            .map(|(_, _, p)| p.eval_f64(x))
            .unwrap_or(0.0)
    }

    pub fn breakpoints(&self) -> Vec<Rational> {
        self.pieces.iter().skip(1).map(|(a, _, _)| a.clone()).collect()
    }

    /// Exact integral over `[lo, hi]`; outside the pieces the function is zero.
    pub fn integral(&self, lo: &Rational, hi: &Rational) -> Rational {
        self.pieces
            .iter()
            .filter_map(|(a, b, p)| {
                let from = a.max(lo);
                let to = b.min(hi);
                (from < to).then(|| p.integral(from, to))
            })
            .fold(Rational::zero(), |acc, x| acc + x)
    }
}
