//! Exact and floating-point scalars behind a common trait.

mod rational;

use std::cmp::Ordering;
use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde_json::Value;
use thiserror::Error;

pub use rational::{rat_arith, ArithOp, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NumericsError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("parse error: {0}")]
    Parse(String),
}

/// Comparison tolerance for floating-point scalars. Exact scalars ignore it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
}

impl Tolerance {
    pub const DEFAULT: Tolerance = Tolerance { abs: 1e-9 };
    pub const VERIFY: Tolerance = Tolerance { abs: 1e-8 };

    pub const fn new(abs: f64) -> Self {
        Tolerance { abs }
    }

    pub const fn exact() -> Self {
        Tolerance { abs: 0.0 }
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::DEFAULT
    }
}

/// Field operations shared by [`Rational`] and `f64`.
pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    fn is_zero(&self) -> bool;
    fn abs(&self) -> Self;
    fn parse_str(s: &str) -> Result<Self, NumericsError>;
    fn to_json(&self) -> Value;

    fn ratio(n: i64, d: i64) -> Self {
        Self::from_i64(n) / Self::from_i64(d)
    }

    fn from_json(v: &Value) -> Result<Self, NumericsError> {
        match v {
            Value::String(s) => Self::parse_str(s),
            Value::Number(n) => Self::parse_str(&n.to_string()),
            other => Err(NumericsError::Parse(format!("expected number, got {other}"))),
        }
    }

    /// Three-way comparison treating values within `tol` as equal (float only).
    fn cmp_tol(&self, other: &Self, tol: Tolerance) -> Ordering {
        if !Self::EXACT && (self.to_f64() - other.to_f64()).abs() <= tol.abs {
            return Ordering::Equal;
        }
        self.partial_cmp(other).unwrap_or(Ordering::Equal)
    }

    fn approx_eq(&self, other: &Self, tol: Tolerance) -> bool {
        self.cmp_tol(other, tol) == Ordering::Equal
    }

    fn approx_le(&self, other: &Self, tol: Tolerance) -> bool {
        self.cmp_tol(other, tol) != Ordering::Greater
    }

    fn approx_lt(&self, other: &Self, tol: Tolerance) -> bool {
        self.cmp_tol(other, tol) == Ordering::Less
    }

    fn is_positive_tol(&self, tol: Tolerance) -> bool {
        self.cmp_tol(&Self::zero(), tol) == Ordering::Greater
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn from_i64(v: i64) -> Self {
        Rational::from_integer(v)
    }
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }
    fn to_f64(&self) -> f64 {
        Rational::to_f64(self)
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn abs(&self) -> Self {
        Rational::abs(self)
    }
    fn parse_str(s: &str) -> Result<Self, NumericsError> {
        s.parse()
    }
    fn to_json(&self) -> Value {
        Value::String(self.to_string())
    }
    fn from_json(v: &Value) -> Result<Self, NumericsError> {
        match v {
            Value::String(s) => s.parse(),
            // JSON numbers are read from their decimal text, so 0.1 means 1/10
            Value::Number(n) => n.to_string().parse(),
            other => Err(NumericsError::Parse(format!("expected number, got {other}"))),
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_rational(r: &Rational) -> Self {
        r.to_f64()
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn abs(&self) -> Self {
        f64::abs(*self)
    }
    fn parse_str(s: &str) -> Result<Self, NumericsError> {
        if s.contains('/') {
            return s.parse::<Rational>().map(|r| r.to_f64());
        }
        s.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| NumericsError::Parse(format!("not a number: {s:?}")))
    }
    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
}

pub fn max_of<S: Scalar>(a: S, b: S) -> S {
    if b > a {
        b
    } else {
        a
    }
}

pub fn min_of<S: Scalar>(a: S, b: S) -> S {
    if b < a {
        b
    } else {
        a
    }
}
