use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::NumericsError;

/// Exact rational number with arbitrary-precision numerator and denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

/// Binary operation selector for [`rat_arith`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// Applies `op` to two rationals, reporting division by zero instead of panicking.
pub fn rat_arith(a: &Rational, b: &Rational, op: ArithOp) -> Result<Rational, NumericsError> {
    Ok(match op {
        ArithOp::Add => a + b,
        ArithOp::Sub => a - b,
        ArithOp::Mul => a * b,
        ArithOp::Div => a.checked_div(b)?,
    })
}

impl Rational {
    pub fn new(numer: i64, denom: i64) -> Result<Self, NumericsError> {
        if denom == 0 {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer.into(), denom.into())))
    }

    /// Panicking constructor for literals in code and tests.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Self::new(numer, denom).expect("zero denominator")
    }

    pub fn from_integer(v: i64) -> Self {
        Rational(BigRational::from_integer(v.into()))
    }

    pub fn from_big(numer: BigInt, denom: BigInt) -> Result<Self, NumericsError> {
        if denom.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(BigRational::new(numer, denom)))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn checked_div(&self, rhs: &Rational) -> Result<Self, NumericsError> {
        if rhs.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(&self.0 / &rhs.0))
    }

    pub fn recip(&self) -> Result<Self, NumericsError> {
        Self::one().checked_div(self)
    }

    pub fn pow(&self, exp: i32) -> Result<Self, NumericsError> {
        if exp < 0 && self.is_zero() {
            return Err(NumericsError::DivisionByZero);
        }
        Ok(Rational(num_traits::Pow::pow(&self.0, exp)))
    }

    pub fn to_f64(&self) -> f64 {
        match self.0.to_f64() {
            Some(v) if v.is_finite() => v,
            _ => {
                // numerator/denominator overflow f64 separately; scale down first
                let n = self.numer().bits() as i64;
                let d = self.denom().bits() as i64;
                let shift = (n.max(d) - 1000).max(0) as usize;
                let nn = (self.numer() >> shift).to_f64().unwrap_or(f64::NAN);
                let dd = (self.denom() >> shift).to_f64().unwrap_or(f64::NAN);
                nn / dd
            }
        }
    }

    /// Exact conversion of a finite double.
    pub fn from_f64_exact(v: f64) -> Result<Self, NumericsError> {
        BigRational::from_float(v)
            .map(Rational)
            .ok_or_else(|| NumericsError::Parse(format!("non-finite value {v}")))
    }

    /// Best rational approximation with denominator at most `max_denom`, accepted only
    /// when it lies within `tol` of `v`.
    pub fn approximate(v: f64, max_denom: u64, tol: f64) -> Option<Self> {
        if !v.is_finite() {
            return None;
        }
        let neg = v < 0.0;
        let x = v.abs();
        let (mut p0, mut q0, mut p1, mut q1) = (0u128, 1u128, 1u128, 0u128);
        let mut r = x;
        let mut best: Option<(u128, u128)> = None;
        for _ in 0..64 {
            let a = r.floor();
            if a > 1e18 {
                break;
            }
            let a_int = a as u128;
            let p2 = a_int * p1 + p0;
            let q2 = a_int * q1 + q0;
            if q2 > max_denom as u128 {
                break;
            }
            best = Some((p2, q2));
            if ((p2 as f64) / (q2 as f64) - x).abs() <= tol * 1e-3 {
                break;
            }
            let frac = r - a;
            if frac <= f64::EPSILON {
                break;
            }
            r = 1.0 / frac;
            p0 = p1;
            q0 = q1;
            p1 = p2;
            q1 = q2;
        }
        let (p, q) = best?;
        if ((p as f64) / (q as f64) - x).abs() > tol {
            return None;
        }
        let n = BigInt::from(p);
        let n = if neg { -n } else { n };
        Rational::from_big(n, BigInt::from(q)).ok()
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn inner(&self) -> &BigRational {
        &self.0
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::from_integer(v)
    }
}

impl From<BigRational> for Rational {
    fn from(v: BigRational) -> Self {
        Rational(v)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Rational {
    type Err = NumericsError;

    /// Accepts `p`, `p/q` and exact decimals such as `-0.125` or `2.5e-3`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || NumericsError::Parse(format!("not a rational: {s:?}"));
        if s.is_empty() {
            return Err(bad());
        }
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            return Rational::from_big(n, d);
        }
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(pos) => {
                let e: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
                (&s[..pos], e)
            }
            None => (s, 0),
        };
        let (neg, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(bad());
        }
        if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let all: BigInt = format!("0{int_part}{frac_part}").parse().map_err(|_| bad())?;
        let scale = exp - frac_part.len() as i32;
        let ten = Rational::from_integer(10);
        let mut r = Rational(BigRational::from_integer(all)) * ten.pow(scale)?;
        if neg {
            r = -r;
        }
        Ok(r)
    }
}

macro_rules! binop {
    ($tr:ident, $m:ident, $op:tt) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(self.0 $op rhs.0)
            }
        }
        impl<'a> $tr<&'a Rational> for Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational(self.0 $op &rhs.0)
            }
        }
        impl<'a> $tr<&'a Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: &'a Rational) -> Rational {
                Rational(&self.0 $op &rhs.0)
            }
        }
        impl<'a> $tr<Rational> for &'a Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                Rational(&self.0 $op rhs.0)
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);
binop!(Mul, mul, *);
binop!(Div, div, /);

impl AddAssign for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        self.0 += rhs.0;
    }
}

impl<'a> AddAssign<&'a Rational> for Rational {
    fn add_assign(&mut self, rhs: &'a Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign for Rational {
    fn sub_assign(&mut self, rhs: Rational) {
        self.0 -= rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Self {
        iter.fold(Rational::zero(), |a, b| a + b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn display_and_parse() {
        assert_eq!(Rational::frac(6, 8).to_string(), "3/4");
        assert_eq!(Rational::frac(-4, 2).to_string(), "-2");
        assert_eq!("3/4".parse::<Rational>().unwrap(), Rational::frac(3, 4));
        assert_eq!("0.125".parse::<Rational>().unwrap(), Rational::frac(1, 8));
        assert_eq!("-2.5e-1".parse::<Rational>().unwrap(), Rational::frac(-1, 4));
        assert_eq!("7".parse::<Rational>().unwrap(), Rational::from_integer(7));
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
    }

    #[test]
    fn arith_examples() {
        let a = Rational::frac(1, 3);
        let b = Rational::frac(1, 6);
        assert_eq!(rat_arith(&a, &b, ArithOp::Add).unwrap(), Rational::frac(1, 2));
        assert_eq!(
            rat_arith(&a, &Rational::zero(), ArithOp::Div),
            Err(NumericsError::DivisionByZero)
        );
        assert_eq!(Rational::frac(2, 3).pow(-2).unwrap(), Rational::frac(9, 4));
    }

    #[test]
    fn approximate_snaps_simple_fractions() {
        assert_eq!(
            Rational::approximate(7.0 / 9.0, 1_000_000, 1e-9),
            Some(Rational::frac(7, 9))
        );
        assert_eq!(
            Rational::approximate(-0.6, 1_000_000, 1e-12),
            Some(Rational::frac(-3, 5))
        );
        assert_eq!(Rational::approximate(std::f64::consts::PI, 10, 1e-9), None);
    }
}
