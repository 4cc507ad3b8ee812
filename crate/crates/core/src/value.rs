//! Scalar values carried by labels and produced by evaluation.

use alloc::vec::Vec;
use core::fmt;

use crate::num::Rat;

/// A scalar: exact rational or binary64.
#[derive(Clone, Debug)]
pub enum Value {
    Exact(Rat),
    Float(f64),
}

impl Value {
    pub fn int(n: i64) -> Value {
        Value::Exact(Rat::from_int(n))
    }

    pub fn zero() -> Value {
        Value::Exact(Rat::zero())
    }

    pub fn one() -> Value {
        Value::Exact(Rat::one())
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Value::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rat> {
        match self {
            Value::Exact(r) => Some(r),
            Value::Float(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(r) => r.to_f64(),
            Value::Float(x) => *x,
        }
    }

    /// True when the value is exactly one (rational 1 or float 1.0).
    pub fn is_one(&self) -> bool {
        match self {
            Value::Exact(r) => r.is_one(),
            Value::Float(x) => *x == 1.0,
        }
    }

    /// Canonical bytes: rationals by their reduced text, floats by bit pattern.
    pub fn canonical_bytes(&self, out: &mut Vec<u8>) {
        match self {
            Value::Exact(r) => {
                let (n, d) = r.parts();
                out.push(b'q');
                out.extend_from_slice(&(n.len() as u32).to_be_bytes());
                out.extend_from_slice(n.as_bytes());
                out.extend_from_slice(&(d.len() as u32).to_be_bytes());
                out.extend_from_slice(d.as_bytes());
            }
            Value::Float(x) => {
                out.push(b'f');
                out.extend_from_slice(&x.to_bits().to_be_bytes());
            }
        }
    }

    /// Equality within an absolute-or-relative tolerance; exact pairs compare exactly.
    pub fn close_to(&self, other: &Value, tol: f64) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            _ => {
                let (a, b) = (self.to_f64(), other.to_f64());
                a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
            }
        }
    }
}

/// Structural equality: exact values compare exactly, floats by bit pattern.
impl PartialEq for Value {
    fn eq(&self, other: &Value) -> bool {
        match (self, other) {
            (Value::Exact(a), Value::Exact(b)) => a == b,
            (Value::Float(a), Value::Float(b)) => a.to_bits() == b.to_bits(),
            _ => false,
        }
    }
}

impl Eq for Value {}

impl From<Rat> for Value {
    fn from(r: Rat) -> Value {
        Value::Exact(r)
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Value {
        Value::Float(x)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Exact(r) => write!(f, "{r}"),
            Value::Float(x) => write!(f, "{x}"),
        }
    }
}
