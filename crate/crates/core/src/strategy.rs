//! Mixed pricing strategies as piecewise CDFs on (0, 1] with optional atoms.
//!
//! On each segment the upper tail `Fbar(x) = Pr[price >= x]` has the form `a + b / x`.

use std::fmt::Write as _;

use serde_json::{json, Value};
use thiserror::Error;

use crate::network::{check_format_version, Network};
use crate::numerics::{NumericsError, Scalar, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("price {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("invalid CDF: {0}")]
    InvalidCdf(String),
    #[error("profile has {got} strategies for {expected} sellers")]
    SellerCount { expected: usize, got: usize },
    #[error("malformed profile file: {0}")]
    Malformed(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CdfMode {
    /// `Pr[p <= x]`
    F,
    /// `Pr[p < x]`
    FMinus,
    /// `Pr[p >= x]`
    FBar,
    /// `Pr[p = x]`
    Atom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment<S> {
    pub lo: S,
    pub hi: S,
    pub a: S,
    pub b: S,
}

impl<S: Scalar> Segment<S> {
    /// Segment through `(x0, f0)` and `(x1, f1)`, linear in `1/x`.
    pub fn through(x0: S, f0: S, x1: S, f1: S) -> Self {
        let b = (f0.clone() - f1) * x0.clone() * x1.clone() / (x1.clone() - x0.clone());
        let a = f0 - b.clone() / x0.clone();
        Segment { lo: x0, hi: x1, a, b }
    }

    pub fn fbar(&self, x: &S) -> S {
        self.a.clone() + self.b.clone() / x.clone()
    }

    pub fn start(&self) -> S {
        self.fbar(&self.lo)
    }

    pub fn end(&self) -> S {
        self.fbar(&self.hi)
    }

    pub fn mass(&self) -> S {
        self.start() - self.end()
    }

    fn map<T: Scalar>(&self, f: &impl Fn(&S) -> T) -> Segment<T> {
        Segment { lo: f(&self.lo), hi: f(&self.hi), a: f(&self.a), b: f(&self.b) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseCdf<S> {
    segments: Vec<Segment<S>>,
    atom_one: S,
    atom_zero: S,
}

impl<S: Scalar> PiecewiseCdf<S> {
    pub fn new(
        segments: Vec<Segment<S>>,
        atom_one: S,
        atom_zero: S,
        tol: Tolerance,
    ) -> Result<Self, StrategyError> {
        let cdf = PiecewiseCdf { segments, atom_one, atom_zero };
        cdf.validate(tol)?;
        Ok(cdf)
    }

    pub fn point_mass_at_one() -> Self {
        PiecewiseCdf { segments: vec![], atom_one: S::one(), atom_zero: S::zero() }
    }

    pub fn point_mass_at_zero() -> Self {
        PiecewiseCdf { segments: vec![], atom_one: S::zero(), atom_zero: S::one() }
    }

    /// Builds the CDF through ascending knots `(x, Fbar(x))`. The first knot value must be
    /// one, the last one is the atom at price one. Flat runs at either end are dropped.
    pub fn from_knots(knots: &[(S, S)], tol: Tolerance) -> Result<Self, StrategyError> {
        if knots.is_empty() {
            return Ok(Self::point_mass_at_one());
        }
        let mut lo = 0;
        while lo + 1 < knots.len() && knots[lo + 1].1.approx_eq(&knots[lo].1, tol) {
            lo += 1;
        }
        let mut hi = knots.len() - 1;
        while hi > lo && knots[hi - 1].1.approx_eq(&knots[hi].1, tol) {
            hi -= 1;
        }
        let atom_one = knots[knots.len() - 1].1.clone();
        let mut segments = Vec::new();
        for w in knots[lo..=hi].windows(2) {
            if !w[0].0.approx_lt(&w[1].0, tol) {
                if w[0].0.approx_eq(&w[1].0, tol) && w[0].1.approx_eq(&w[1].1, tol) {
                    continue;
                }
                return Err(StrategyError::InvalidCdf("knots must be strictly increasing".into()));
            }
            segments.push(Segment::through(w[0].0.clone(), w[0].1.clone(), w[1].0.clone(), w[1].1.clone()));
        }
        Self::new(segments, atom_one, S::zero(), tol)
    }

    fn validate(&self, tol: Tolerance) -> Result<(), StrategyError> {
        let bad = |m: String| Err(StrategyError::InvalidCdf(m));
        let zero = S::zero();
        let one = S::one();
        let in_unit = |v: &S| !v.approx_lt(&zero, tol) && v.approx_le(&one, tol);
        if !in_unit(&self.atom_one) || !in_unit(&self.atom_zero) {
            return bad("atoms must lie in [0, 1]".into());
        }
        if self.segments.is_empty() {
            let total = self.atom_one.clone() + self.atom_zero.clone();
            if !total.approx_eq(&one, tol) {
                return bad(format!("total mass {total} without continuous part"));
            }
            return Ok(());
        }
        let first = &self.segments[0];
        if !first.lo.is_positive_tol(tol) {
            return bad("support must stay above zero".into());
        }
        if !first.start().approx_eq(&(one.clone() - self.atom_zero.clone()), tol) {
            return bad(format!("upper tail starts at {}, expected {}", first.start(), one.clone() - self.atom_zero.clone()));
        }
        for (k, s) in self.segments.iter().enumerate() {
            if !s.lo.approx_lt(&s.hi, tol) {
                return bad(format!("empty segment [{}, {}]", s.lo, s.hi));
            }
            if s.b.approx_lt(&zero, tol) {
                return bad(format!("decreasing CDF on [{}, {}]", s.lo, s.hi));
            }
            if !in_unit(&s.start()) || !in_unit(&s.end()) {
                return bad(format!("tail leaves [0, 1] on [{}, {}]", s.lo, s.hi));
            }
            if let Some(next) = self.segments.get(k + 1) {
                if !s.hi.approx_eq(&next.lo, tol) {
                    return bad(format!("gap between {} and {}", s.hi, next.lo));
                }
                if !s.end().approx_eq(&next.start(), tol) {
                    return bad(format!("discontinuity at {}", s.hi));
                }
            }
        }
        let last = self.segments.last().expect("non-empty");
        if !last.hi.approx_le(&one, tol) {
            return bad("support exceeds 1".into());
        }
        if !last.end().approx_eq(&self.atom_one, tol) {
            return bad(format!("tail ends at {}, atom at 1 is {}", last.end(), self.atom_one));
        }
        Ok(())
    }

    pub fn segments(&self) -> &[Segment<S>] {
        &self.segments
    }

    pub fn atom_one(&self) -> &S {
        &self.atom_one
    }

    pub fn atom_zero(&self) -> &S {
        &self.atom_zero
    }

    /// `Pr[price >= x]` for `x` in `[0, 1]`.
    pub fn fbar(&self, x: &S) -> S {
        let one = S::one();
        if *x <= S::zero() {
            return one;
        }
        if *x >= one {
            return self.atom_one.clone();
        }
        match self.segments.first() {
            None => one - self.atom_zero.clone(),
            Some(first) if *x <= first.lo => one - self.atom_zero.clone(),
            Some(_) => {
                let last = self.segments.last().expect("non-empty");
                if *x >= last.hi {
                    return self.atom_one.clone();
                }
                let k = self.segments.partition_point(|s| s.hi < *x);
                self.segments[k].fbar(x)
            }
        }
    }

    pub fn atom(&self, x: &S) -> S {
        if *x == S::one() {
            self.atom_one.clone()
        } else if x.is_zero() {
            self.atom_zero.clone()
        } else {
            S::zero()
        }
    }

    pub fn eval(&self, x: &S, mode: CdfMode) -> S {
        match mode {
            CdfMode::FBar => self.fbar(x),
            CdfMode::FMinus => S::one() - self.fbar(x),
            CdfMode::F => S::one() - self.fbar(x) + self.atom(x),
            CdfMode::Atom => self.atom(x),
        }
    }

    /// Closed intervals where the CDF strictly increases.
    pub fn support_intervals(&self, tol: Tolerance) -> Vec<(S, S)> {
        let mut out: Vec<(S, S)> = Vec::new();
        for s in &self.segments {
            if !s.mass().is_positive_tol(tol) {
                continue;
            }
            match out.last_mut() {
                Some(last) if last.1.approx_eq(&s.lo, tol) => last.1 = s.hi.clone(),
                _ => out.push((s.lo.clone(), s.hi.clone())),
            }
        }
        out
    }

    pub fn support_min(&self, tol: Tolerance) -> Option<S> {
        if self.atom_zero.is_positive_tol(tol) {
            return Some(S::zero());
        }
        self.support_intervals(tol)
            .first()
            .map(|s| s.0.clone())
            .or_else(|| self.atom_one.is_positive_tol(tol).then(S::one))
    }

    pub fn total_mass(&self) -> S {
        self.segments
            .iter()
            .fold(self.atom_one.clone() + self.atom_zero.clone(), |acc, s| acc + s.mass())
    }

    /// Knots `(x, Fbar(x))` at every segment endpoint, ascending.
    pub fn knots(&self) -> Vec<(S, S)> {
        let mut out = Vec::new();
        for (k, s) in self.segments.iter().enumerate() {
            if k == 0 {
                out.push((s.lo.clone(), s.start()));
            }
            out.push((s.hi.clone(), s.end()));
        }
        out
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> PiecewiseCdf<T> {
        PiecewiseCdf {
            segments: self.segments.iter().map(|s| s.map(&f)).collect(),
            atom_one: f(&self.atom_one),
            atom_zero: f(&self.atom_zero),
        }
    }

    pub fn to_f64(&self) -> PiecewiseCdf<f64> {
        self.map(|v| v.to_f64())
    }

    fn to_json(&self) -> Value {
        let segs: Vec<Value> = self
            .segments
            .iter()
            .map(|s| json!({"lo": s.lo.to_json(), "hi": s.hi.to_json(), "a": s.a.to_json(), "b": s.b.to_json()}))
            .collect();
        json!({"atomAtOne": self.atom_one.to_json(), "atomAtZero": self.atom_zero.to_json(), "segments": segs})
    }

    fn from_json(v: &Value, tol: Tolerance) -> Result<Self, StrategyError> {
        let get = |obj: &Value, key: &str| -> Result<S, StrategyError> {
            match obj.get(key) {
                Some(x) => Ok(S::from_json(x)?),
                None => Err(StrategyError::Malformed(format!("missing {key}"))),
            }
        };
        let atom_one = get(v, "atomAtOne")?;
        let atom_zero = match v.get("atomAtZero") {
            Some(x) => S::from_json(x)?,
            None => S::zero(),
        };
        let mut segments = Vec::new();
        for s in v.get("segments").and_then(Value::as_array).into_iter().flatten() {
            segments.push(Segment { lo: get(s, "lo")?, hi: get(s, "hi")?, a: get(s, "a")?, b: get(s, "b")? });
        }
        Self::new(segments, atom_one, atom_zero, tol)
    }
}

/// Evaluates a CDF at `x`, rejecting prices outside `[0, 1]`.
pub fn cdf_eval<S: Scalar>(cdf: &PiecewiseCdf<S>, x: &S, mode: CdfMode) -> Result<S, StrategyError> {
    if *x < S::zero() || *x > S::one() {
        return Err(StrategyError::OutOfDomain(x.to_f64()));
    }
    Ok(cdf.eval(x, mode))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyProfile<S> {
    pub cdfs: Vec<PiecewiseCdf<S>>,
}

impl<S: Scalar> StrategyProfile<S> {
    pub fn new(cdfs: Vec<PiecewiseCdf<S>>) -> Self {
        StrategyProfile { cdfs }
    }

    pub fn len(&self) -> usize {
        self.cdfs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdfs.is_empty()
    }

    pub fn check_against<T: Scalar>(&self, net: &Network<T>) -> Result<(), StrategyError> {
        if self.cdfs.len() != net.len() {
            return Err(StrategyError::SellerCount { expected: net.len(), got: self.cdfs.len() });
        }
        Ok(())
    }

    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> StrategyProfile<T> {
        StrategyProfile { cdfs: self.cdfs.iter().map(|c| c.map(f)).collect() }
    }

    pub fn to_f64(&self) -> StrategyProfile<f64> {
        self.map(|v| v.to_f64())
    }

    /// Lossless segment table, rationals written as strings.
    pub fn to_json(&self, net: &Network<S>) -> Value {
        let sellers: Vec<Value> = self
            .cdfs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let mut v = c.to_json();
                v["id"] = json!(net.label(i));
                v
            })
            .collect();
        json!({"formatVersion": 1, "kind": "profile", "exact": S::EXACT, "sellers": sellers})
    }

    pub fn from_json<T: Scalar>(v: &Value, net: &Network<T>, tol: Tolerance) -> Result<Self, StrategyError> {
        check_format_version(v).map_err(StrategyError::Malformed)?;
        let sellers = v
            .get("sellers")
            .and_then(Value::as_array)
            .ok_or_else(|| StrategyError::Malformed("missing sellers".into()))?;
        let mut cdfs: Vec<Option<PiecewiseCdf<S>>> = vec![None; net.len()];
        for s in sellers {
            let id = s
                .get("id")
                .and_then(Value::as_str)
                .ok_or_else(|| StrategyError::Malformed("seller entry without id".into()))?;
            let idx = net
                .index_of(id)
                .map_err(|_| StrategyError::Malformed(format!("unknown seller {id:?}")))?;
            let cdf = PiecewiseCdf::from_json(s, tol)
                .map_err(|e| StrategyError::InvalidCdf(format!("seller {id}: {e}")))?;
            cdfs[idx] = Some(cdf);
        }
        let got = cdfs.iter().filter(|c| c.is_some()).count();
        let cdfs: Option<Vec<_>> = cdfs.into_iter().collect();
        cdfs.map(StrategyProfile::new)
            .ok_or(StrategyError::SellerCount { expected: net.len(), got })
    }

    /// CSV with columns `seller,x,F` on an even grid of `points` prices in `[0, 1]`.
    pub fn to_csv(&self, net: &Network<S>, points: usize) -> String {
        let mut out = String::from("seller,x,F\n");
        let points = points.max(2);
        for (i, c) in self.cdfs.iter().enumerate() {
            for k in 0..points {
                let x = S::ratio(k as i64, (points - 1) as i64);
                let f = c.eval(&x, CdfMode::F);
                let _ = writeln!(out, "{},{:.9},{:.9}", net.label(i), x.to_f64(), f.to_f64());
            }
        }
        out
    }
}

/// Expected revenue of seller `i` at price `x` against the rest of the profile. A tie at
/// price one goes to the deviating seller.
pub fn utility<S: Scalar>(net: &Network<S>, profile: &StrategyProfile<S>, i: usize, x: &S) -> S {
    let mut demand = net.alpha(i).clone();
    for (j, beta) in net.neighbors(i) {
        demand = demand + beta.clone() * profile.cdfs[*j].fbar(x);
    }
    x.clone() * demand
}

/// Sorted union of all segment endpoints and the price 1.
pub fn breakpoints<S: Scalar>(profile: &StrategyProfile<S>) -> Vec<S> {
    let mut pts: Vec<S> = vec![S::one()];
    for c in &profile.cdfs {
        for s in c.segments() {
            pts.push(s.lo.clone());
            pts.push(s.hi.clone());
        }
    }
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    pts.dedup();
    pts
}
