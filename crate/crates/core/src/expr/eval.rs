use std::cmp::Ordering;

use num_traits::{Signed, Zero};

use crate::rational::{self, Rational};

use super::{BinOp, Cmp, Func, Node, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("square root of a negative number")]
    SqrtOfNegative,
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable `{}` is not bound", .0.name())]
    Unbound(Var),
    #[error("`{0}` has no exact rational value here")]
    NotRational(&'static str),
    #[error("non-finite result")]
    NonFinite,
}

/// Which one-sided limit to take when a guard is evaluated exactly on its bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Values for the variable slots.
#[derive(Debug, Clone)]
pub struct Bindings<T> {
    slots: [Option<T>; 5],
}

impl<T> Default for Bindings<T> {
    fn default() -> Self {
        Bindings { slots: [None, None, None, None, None] }
    }
}

impl<T: Clone> Bindings<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, var: Var, value: T) -> Self {
        self.slots[var.index()] = Some(value);
        self
    }

    pub fn set(&mut self, var: Var, value: T) {
        self.slots[var.index()] = Some(value);
    }

    pub fn get(&self, var: Var) -> Option<&T> {
        self.slots[var.index()].as_ref()
    }
}

/// Arithmetic the evaluator needs; implemented for `f64` and exact rationals.
pub trait Scalar: Clone + Sized {
    fn from_rational(r: &Rational) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> Result<Self, EvalError>;
    fn powi(&self, n: i32) -> Result<Self, EvalError>;
    fn sqrt(&self) -> Result<Self, EvalError>;
    fn sin(&self) -> Result<Self, EvalError>;
    fn cos(&self) -> Result<Self, EvalError>;
    fn abs(&self) -> Self;
    fn compare(&self, o: &Self) -> Ordering;
    fn compare_rational(&self, r: &Rational) -> Ordering;
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        rational::to_f64(r)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, o: &Self) -> Result<Self, EvalError> {
        if *o == 0.0 {
            Err(EvalError::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        if n < 0 && *self == 0.0 {
            return Err(EvalError::DivisionByZero);
        }
        Ok(f64::powi(*self, n))
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        if *self < 0.0 {
            Err(EvalError::SqrtOfNegative)
        } else {
            Ok(f64::sqrt(*self))
        }
    }
    fn sin(&self) -> Result<Self, EvalError> {
        Ok(f64::sin(*self))
    }
    fn cos(&self) -> Result<Self, EvalError> {
        Ok(f64::cos(*self))
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn compare(&self, o: &Self) -> Ordering {
        self.partial_cmp(o).unwrap_or(Ordering::Equal)
    }
    fn compare_rational(&self, r: &Rational) -> Ordering {
        self.compare(&rational::to_f64(r))
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, o: &Self) -> Result<Self, EvalError> {
        if o.is_zero() {
            Err(EvalError::DivisionByZero)
        } else {
            Ok(self / o)
        }
    }
    fn powi(&self, n: i32) -> Result<Self, EvalError> {
        if n < 0 && self.is_zero() {
            return Err(EvalError::DivisionByZero);
        }
        Ok(num_traits::Pow::pow(self, n))
    }
    fn sqrt(&self) -> Result<Self, EvalError> {
        if self.is_negative() {
            return Err(EvalError::SqrtOfNegative);
        }
        rational::sqrt_exact(self).ok_or(EvalError::NotRational("sqrt"))
    }
    fn sin(&self) -> Result<Self, EvalError> {
        if self.is_zero() {
            Ok(Rational::zero())
        } else {
            Err(EvalError::NotRational("sin"))
        }
    }
    fn cos(&self) -> Result<Self, EvalError> {
        if self.is_zero() {
            Ok(rational::int(1))
        } else {
            Err(EvalError::NotRational("cos"))
        }
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn compare(&self, o: &Self) -> Ordering {
        self.cmp(o)
    }
    fn compare_rational(&self, r: &Rational) -> Ordering {
        self.cmp(r)
    }
}

fn guard_holds(ord: Ordering, cmp: Cmp, side: Option<Side>) -> bool {
    // On the bound itself a one-sided limit behaves like a point just beside it.
    let ord = match (ord, side) {
        (Ordering::Equal, Some(Side::Left)) => Ordering::Less,
        (Ordering::Equal, Some(Side::Right)) => Ordering::Greater,
        (o, _) => o,
    };
    match cmp {
        Cmp::Lt => ord == Ordering::Less,
        Cmp::Le => ord != Ordering::Greater,
        Cmp::Gt => ord == Ordering::Greater,
        Cmp::Ge => ord != Ordering::Less,
    }
}

pub(super) fn eval<T: Scalar>(
    node: &Node,
    env: &Bindings<T>,
    side: Option<Side>,
) -> Result<T, EvalError> {
    match node {
        Node::Num(r) => Ok(T::from_rational(r)),
        Node::Var(v) => env.get(*v).cloned().ok_or(EvalError::Unbound(*v)),
        Node::Neg(a) => Ok(eval(a, env, side)?.neg()),
        Node::Binary(op, a, b) => {
            let x = eval(a, env, side)?;
            let y = eval(b, env, side)?;
            match op {
                BinOp::Add => Ok(x.add(&y)),
                BinOp::Sub => Ok(x.sub(&y)),
                BinOp::Mul => Ok(x.mul(&y)),
                BinOp::Div => x.div(&y),
            }
        }
        Node::Pow(a, n) => eval(a, env, side)?.powi(*n),
        Node::Call(func, args) => {
            let first = eval(&args[0], env, side)?;
            match func {
                Func::Sqrt => first.sqrt(),
                Func::Sin => first.sin(),
                Func::Cos => first.cos(),
                Func::Abs => Ok(first.abs()),
                Func::Min | Func::Max => {
                    let want = if *func == Func::Min { Ordering::Less } else { Ordering::Greater };
                    let mut best = first;
                    for a in &args[1..] {
                        let x = eval(a, env, side)?;
                        if x.compare(&best) == want {
                            best = x;
                        }
                    }
                    Ok(best)
                }
            }
        }
        Node::Piecewise { branches, default } => {
            for br in branches {
                let lhs = eval(&br.guard.lhs, env, side)?;
                if guard_holds(lhs.compare_rational(&br.guard.bound), br.guard.cmp, side) {
                    return eval(&br.body, env, side);
                }
            }
            eval(default, env, side)
        }
    }
}
