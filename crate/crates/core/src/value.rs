//! Quantities that are exact rationals when possible and floats otherwise.

use std::fmt;

use num_traits::{Signed, Zero};
use serde::Serialize;

use crate::rational::{self, Rational};

/// Exact or floating value; arithmetic stays exact while both operands are.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Exact(Rational),
    Float(f64),
}

/// Whether results may use closed forms or must go through floating point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    #[default]
    Exact,
    Numeric,
}

impl Value {
    pub fn zero() -> Value {
        Value::Exact(Rational::zero())
    }

    pub fn int(n: i64) -> Value {
        Value::Exact(rational::int(n))
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => rational::to_f64(r),
            Value::Float(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&Rational> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    /// Drops exactness when running in numeric mode.
    pub fn in_mode(self, mode: EvalMode) -> Value {
        match (mode, self) {
            (EvalMode::Numeric, Value::Exact(r)) => Value::Float(rational::to_f64(&r)),
            (_, v) => v,
        }
    }

    pub fn add(&self, o: &Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a + b),
            _ => Value::Float(self.to_f64() + o.to_f64()),
        }
    }

    pub fn sub(&self, o: &Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a - b),
            _ => Value::Float(self.to_f64() - o.to_f64()),
        }
    }

    pub fn mul(&self, o: &Value) -> Value {
        match (self, o) {
            (Value::Exact(a), Value::Exact(b)) => Value::Exact(a * b),
            _ => Value::Float(self.to_f64() * o.to_f64()),
        }
    }

    /// Division; `None` on an exact zero divisor.
    pub fn div(&self, o: &Value) -> Option<Value> {
        match (self, o) {
            (Value::Exact(_), Value::Exact(b)) if b.is_zero() => None,
            (Value::Exact(a), Value::Exact(b)) => Some(Value::Exact(a / b)),
            _ => Some(Value::Float(self.to_f64() / o.to_f64())),
        }
    }

    pub fn recip(&self) -> Option<Value> {
        Value::int(1).div(self)
    }

    pub fn is_positive(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_positive(),
            Value::Float(x) => *x > 0.0,
        }
    }

    /// Exact rational text, if any.
    pub fn rational_text(&self) -> Option<String> {
        self.exact().map(rational::format)
    }

    pub fn report(&self) -> ValueReport {
        ValueReport {
            rational: self.rational_text(),
            decimal: self.to_f64(),
        }
    }
}

impl From<Rational> for Value {
    fn from(r: Rational) -> Self {
        Value::Exact(r)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Float(x)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => f.write_str(&rational::format(r)),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}

/// Serialized form of a [`Value`]: the rational (when exact) and a decimal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValueReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rational: Option<String>,
    pub decimal: f64,
}

impl Serialize for Value {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.report().serialize(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    #[test]
    fn exactness_propagates() {
        let a = Value::from(ratio(1, 3));
        let b = Value::from(ratio(1, 6));
        assert_eq!(a.add(&b), Value::from(ratio(1, 2)));
        assert_eq!(a.div(&b).unwrap(), Value::int(2));
        assert!(!a.mul(&Value::Float(2.0)).is_exact());
        assert!(a.div(&Value::zero()).is_none());
        assert_eq!(a.clone().in_mode(EvalMode::Numeric), Value::Float(1.0 / 3.0));
    }

    #[test]
    fn serializes_both_forms() {
        let v = Value::from(ratio(641, 1000));
        assert_eq!(
            serde_json::to_string(&v).unwrap(),
            r#"{"rational":"641/1000","decimal":0.641}"#
        );
        assert_eq!(serde_json::to_string(&Value::Float(0.5)).unwrap(), r#"{"decimal":0.5}"#);
    }
}
