//! Scalar expression language for the user-supplied nonlinearities.
//!
//! Expressions cover `f(t,u,v)`, `g(t)`, the boundary nonlinearities `H`, `L`,
//! the impulse maps `I`, `N` and measure densities. Literals are exact
//! rationals; floats appear only when an expression is evaluated in `f64`.
//!
//! ```text
//! expr      := term (('+' | '-') term)*
//! term      := unary (('*' | '/') unary)*
//! unary     := ('-' | '+') unary | power
//! power     := primary ('^' int)?            int may carry a sign, optionally in parens
//! primary   := number | variable | func '(' expr (',' expr)* ')' | '(' expr ')'
//!            | 'piecewise' '(' branch (';' branch)* ';' 'else' ':' expr ')'
//! branch    := expr ('<' | '<=' | '>' | '>=') constant ':' expr
//! variable  := t | u | v | w | s
//! func      := sqrt | sin | cos | abs | min | max
//! ```
//!
//! Piecewise branches are tried in order and the first satisfied guard wins,
//! so the trailing `else` makes the selection total.

mod eval;
mod parse;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::rational::{self, Rational};

pub use eval::{Bindings, EvalError, Scalar, Side};
pub use parse::ParseError;

/// Variable slots an expression may reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    T,
    U,
    V,
    W,
    S,
}

impl Var {
    pub const ALL: [Var; 5] = [Var::T, Var::U, Var::V, Var::W, Var::S];

    pub fn name(self) -> &'static str {
        match self {
            Var::T => "t",
            Var::U => "u",
            Var::V => "v",
            Var::W => "w",
            Var::S => "s",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        Var::ALL.into_iter().find(|v| v.name() == name)
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Abs,
    Min,
    Max,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        [Func::Sqrt, Func::Sin, Func::Cos, Func::Abs, Func::Min, Func::Max]
            .into_iter()
            .find(|f| f.name() == name)
    }

    /// Allowed argument counts (min, max).
    fn arity(self) -> (usize, usize) {
        match self {
            Func::Min | Func::Max => (2, usize::MAX),
            _ => (1, 1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cmp {
    Lt,
    Le,
    Gt,
    Ge,
}

impl Cmp {
    fn symbol(self) -> &'static str {
        match self {
            Cmp::Lt => "<",
            Cmp::Le => "<=",
            Cmp::Gt => ">",
            Cmp::Ge => ">=",
        }
    }
}

/// `lhs cmp bound` with a constant rational bound.
#[derive(Debug, Clone, PartialEq)]
pub struct Guard {
    pub lhs: Node,
    pub cmp: Cmp,
    pub bound: Rational,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub guard: Guard,
    pub body: Node,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(Rational),
    Var(Var),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Vec<Node>),
    Piecewise { branches: Vec<Branch>, default: Box<Node> },
}

/// A parsed, immutable expression.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
}

impl Expression {
    pub fn parse(source: &str) -> Result<Expression, ParseError> {
        parse::parse(source).map(|root| Expression { root })
    }

    pub fn from_node(root: Node) -> Expression {
        Expression { root }
    }

    pub fn constant(value: Rational) -> Expression {
        Expression { root: Node::Num(value) }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// `factor * self`, used to rescale measure densities.
    pub fn scaled(&self, factor: &Rational) -> Expression {
        Expression {
            root: Node::Binary(
                BinOp::Mul,
                Box::new(Node::Num(factor.clone())),
                Box::new(self.root.clone()),
            ),
        }
    }

    pub fn eval(&self, env: &Bindings<f64>) -> Result<f64, EvalError> {
        eval::eval(&self.root, env, None)
    }

    /// Exact evaluation; fails with [`EvalError::NotRational`] when a
    /// transcendental value is reached.
    pub fn eval_exact(&self, env: &Bindings<Rational>) -> Result<Rational, EvalError> {
        eval::eval(&self.root, env, None)
    }

    /// Evaluation where a guard sitting exactly on its bound is resolved as
    /// the one-sided limit from `side`.
    pub fn eval_limit<T: Scalar>(&self, env: &Bindings<T>, side: Side) -> Result<T, EvalError> {
        eval::eval(&self.root, env, Some(side))
    }

    /// Shorthand for single-variable expressions.
    pub fn eval_at(&self, var: Var, x: f64) -> Result<f64, EvalError> {
        self.eval(&Bindings::new().with(var, x))
    }

    pub fn eval_exact_at(&self, var: Var, x: &Rational) -> Result<Rational, EvalError> {
        self.eval_exact(&Bindings::new().with(var, x.clone()))
    }

    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        collect_vars(&self.root, &mut out);
        out
    }

    /// Returns the first variable outside `allowed`, if any.
    pub fn check_vars(&self, allowed: &[Var]) -> Result<(), Var> {
        match self.free_vars().into_iter().find(|v| !allowed.contains(v)) {
            Some(v) => Err(v),
            None => Ok(()),
        }
    }

    /// Value of a variable-free, transcendental-free expression.
    pub fn constant_value(&self) -> Option<Rational> {
        if !self.free_vars().is_empty() {
            return None;
        }
        self.eval_exact(&Bindings::new()).ok()
    }

    /// Guard boundaries of piecewise nodes that compare `var` directly.
    pub fn guard_boundaries(&self, var: Var) -> Vec<Rational> {
        let mut out = Vec::new();
        collect_boundaries(&self.root, var, &mut out);
        out.sort();
        out.dedup();
        out
    }

    /// Jump of a single-variable expression at each of its guard boundaries.
    pub fn continuity_gaps(&self, var: Var) -> Result<Vec<ContinuityGap>, EvalError> {
        let mut gaps = Vec::new();
        for b in self.guard_boundaries(var) {
            let exact_env = Bindings::new().with(var, b.clone());
            let exact = self
                .eval_limit(&exact_env, Side::Left)
                .and_then(|l| self.eval_limit(&exact_env, Side::Right).map(|r| (l, r)));
            let (left, right, exact_gap) = match exact {
                Ok((l, r)) => {
                    let g = &r - &l;
                    (rational::to_f64(&l), rational::to_f64(&r), Some(g))
                }
                Err(EvalError::NotRational(_)) => {
                    let env = Bindings::new().with(var, rational::to_f64(&b));
                    let l = self.eval_limit(&env, Side::Left)?;
                    let r = self.eval_limit(&env, Side::Right)?;
                    (l, r, None)
                }
                Err(e) => return Err(e),
            };
            gaps.push(ContinuityGap {
                boundary: b,
                left,
                right,
                exact_gap,
            });
        }
        Ok(gaps)
    }
}

/// Left and right limits at one guard boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuityGap {
    pub boundary: Rational,
    pub left: f64,
    pub right: f64,
    /// `right - left` when both limits are rational.
    pub exact_gap: Option<Rational>,
}

impl ContinuityGap {
    pub fn gap(&self) -> f64 {
        (self.right - self.left).abs()
    }

    pub fn is_continuous(&self, tol: f64) -> bool {
        match &self.exact_gap {
            Some(g) => num_traits::Zero::is_zero(g),
            None => self.gap() <= tol,
        }
    }
}

fn collect_vars(node: &Node, out: &mut BTreeSet<Var>) {
    match node {
        Node::Num(_) => {}
        Node::Var(v) => {
            out.insert(*v);
        }
        Node::Neg(a) | Node::Pow(a, _) => collect_vars(a, out),
        Node::Binary(_, a, b) => {
            collect_vars(a, out);
            collect_vars(b, out);
        }
        Node::Call(_, args) => args.iter().for_each(|a| collect_vars(a, out)),
        Node::Piecewise { branches, default } => {
            for br in branches {
                collect_vars(&br.guard.lhs, out);
                collect_vars(&br.body, out);
            }
            collect_vars(default, out);
        }
    }
}

fn collect_boundaries(node: &Node, var: Var, out: &mut Vec<Rational>) {
    match node {
        Node::Num(_) | Node::Var(_) => {}
        Node::Neg(a) | Node::Pow(a, _) => collect_boundaries(a, var, out),
        Node::Binary(_, a, b) => {
            collect_boundaries(a, var, out);
            collect_boundaries(b, var, out);
        }
        Node::Call(_, args) => args.iter().for_each(|a| collect_boundaries(a, var, out)),
        Node::Piecewise { branches, default } => {
            for br in branches {
                if br.guard.lhs == Node::Var(var) {
                    out.push(br.guard.bound.clone());
                }
                collect_boundaries(&br.guard.lhs, var, out);
                collect_boundaries(&br.body, var, out);
            }
            collect_boundaries(default, var, out);
        }
    }
}

impl FromStr for Expression {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expression::parse(s)
    }
}

// Canonical printer: fully parenthesized, reparses to the same tree.
impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Num(r) => {
                let nonneg = !num_traits::Signed::is_negative(r);
                match rational::format_decimal_exact(r) {
                    Some(d) if nonneg => f.write_str(&d),
                    _ => write!(f, "({})", rational::format(r)),
                }
            }
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Pow(a, n) if *n < 0 => write!(f, "({a}^({n}))"),
            Node::Pow(a, n) => write!(f, "({a}^{n})"),
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{a}")?;
                }
                f.write_str(")")
            }
            Node::Piecewise { branches, default } => {
                f.write_str("piecewise(")?;
                for br in branches {
                    write!(
                        f,
                        "{} {} {}: {}; ",
                        br.guard.lhs,
                        br.guard.cmp.symbol(),
                        rational::format(&br.guard.bound),
                        br.body
                    )?;
                }
                write!(f, "else: {default})")
            }
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}
