//! Support sketches and their exact linear-program solution.
//!
//! A sketch fixes boundary points `1 = t[0] > t[1] > ... > t[k-1] > 0`, which sellers mix
//! on each open interval `(t[j+1], t[j])`, and which sellers keep an atom at price 1.
//! Given the points, the equilibrium conditions are linear in the tail values
//! `Fbar_i(t[j])` and the utilities.

pub mod lp;

use std::collections::BTreeMap;
use std::fmt;

use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::network::{check_format_version, Network};
use crate::numerics::{NumericsError, Rational, Scalar, Tolerance};
use crate::strategy::{PiecewiseCdf, StrategyError, StrategyProfile};

pub use lp::{solve_lp_rational, LinearConstraint, LinearProgram, LpOutcome, PivotOrder, Relation};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SketchError {
    #[error("invalid sketch: {0}")]
    InvalidSketch(String),
    #[error("adjacent sellers {0} and {1} both have an atom at price 1")]
    SharedAtom(String, String),
    #[error("sketch is infeasible; violated or binding: {}", .violated.join(", "))]
    Infeasible { violated: Vec<String> },
    #[error("tail values of seller {0} are not monotone")]
    InterpolationNotMonotone(String),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Combinatorial part of a sketch: `k` boundary points, interval membership, atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SketchShape {
    k: usize,
    /// `membership[i][j]`: seller `i` mixes on `(t[j+1], t[j])`.
    membership: Vec<Vec<bool>>,
    atoms: Vec<bool>,
}

impl SketchShape {
    pub fn new(k: usize, membership: Vec<Vec<bool>>, atoms: Vec<bool>) -> Result<Self, SketchError> {
        if k == 0 {
            return Err(SketchError::InvalidSketch("need at least the point 1".into()));
        }
        if membership.len() != atoms.len() {
            return Err(SketchError::InvalidSketch("membership and atom lists differ in length".into()));
        }
        if membership.iter().any(|m| m.len() != k - 1) {
            return Err(SketchError::InvalidSketch(format!("each seller needs {} interval flags", k - 1)));
        }
        for (i, m) in membership.iter().enumerate() {
            if !atoms[i] && !m.iter().any(|b| *b) {
                return Err(SketchError::InvalidSketch(format!("seller {i} has empty support")));
            }
        }
        Ok(SketchShape { k, membership, atoms })
    }

    /// Shape from 1-based closed index ranges `[a, b]`, `a < b`, covering `[t_b, t_a]`.
    pub fn from_index_ranges(k: usize, ranges: &[Vec<(usize, usize)>], atoms: Vec<bool>) -> Result<Self, SketchError> {
        let mut membership = vec![vec![false; k.saturating_sub(1)]; ranges.len()];
        for (i, rs) in ranges.iter().enumerate() {
            for &(a, b) in rs {
                if a == 0 || a >= b || b > k {
                    return Err(SketchError::InvalidSketch(format!("bad index range [{a}, {b}]")));
                }
                for flag in &mut membership[i][a - 1..b - 1] {
                    *flag = true;
                }
            }
        }
        Self::new(k, membership, atoms)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sellers(&self) -> usize {
        self.atoms.len()
    }

    pub fn in_interval(&self, i: usize, j: usize) -> bool {
        self.membership[i][j]
    }

    pub fn has_atom(&self, i: usize) -> bool {
        self.atoms[i]
    }

    /// Sellers mixing on interval `j`.
    pub fn active(&self, j: usize) -> Vec<usize> {
        (0..self.sellers()).filter(|&i| self.membership[i][j]).collect()
    }

    /// Whether `t[j]` lies in the support of seller `i`.
    pub fn is_support_point(&self, i: usize, j: usize) -> bool {
        (j == 0 && self.atoms[i])
            || (j + 1 < self.k && self.membership[i][j])
            || (j >= 1 && self.membership[i][j - 1])
    }

    /// Sellers that are the same under `perm` map to the same flags.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.sellers();
        let mut membership = vec![Vec::new(); n];
        let mut atoms = vec![false; n];
        for i in 0..n {
            membership[perm[i]] = self.membership[i].clone();
            atoms[perm[i]] = self.atoms[i];
        }
        SketchShape { k: self.k, membership, atoms }
    }

    pub fn check_network<S: Scalar>(&self, net: &Network<S>) -> Result<(), SketchError> {
        if self.sellers() != net.len() {
            return Err(SketchError::InvalidSketch(format!(
                "sketch covers {} sellers, network has {}",
                self.sellers(),
                net.len()
            )));
        }
        for m in net.markets() {
            if self.atoms[m.a] && self.atoms[m.b] {
                return Err(SketchError::SharedAtom(net.label(m.a).into(), net.label(m.b).into()));
            }
        }
        Ok(())
    }

    pub fn from_json<S: Scalar>(v: &Value, net: &Network<S>) -> Result<Self, SketchError> {
        check_format_version(v).map_err(SketchError::InvalidSketch)?;
        let bad = |m: &str| SketchError::InvalidSketch(m.to_string());
        let k = v.get("boundaryCount").and_then(Value::as_u64).ok_or_else(|| bad("missing boundaryCount"))? as usize;
        let (ranges, atoms) = read_supports(v, net, |x| {
            let pair = x.as_array().filter(|p| p.len() == 2).ok_or_else(|| bad("range must be a pair"))?;
            let a = pair[0].as_u64().ok_or_else(|| bad("range index must be an integer"))? as usize;
            let b = pair[1].as_u64().ok_or_else(|| bad("range index must be an integer"))? as usize;
            Ok((a, b))
        })?;
        Self::from_index_ranges(k, &ranges, atoms)
    }

    pub fn to_json<S: Scalar>(&self, net: &Network<S>) -> Value {
        let mut supports = Map::new();
        for i in 0..self.sellers() {
            let mut ranges = Vec::new();
            let mut j = 0;
            while j + 1 < self.k {
                if self.membership[i][j] {
                    let start = j;
                    while j + 1 < self.k && self.membership[i][j] {
                        j += 1;
                    }
                    ranges.push(json!([start + 1, j + 1]));
                } else {
                    j += 1;
                }
            }
            supports.insert(net.label(i).to_string(), Value::Array(ranges));
        }
        let atoms: Vec<&str> = (0..self.sellers()).filter(|&i| self.atoms[i]).map(|i| net.label(i)).collect();
        json!({"formatVersion": 1, "boundaryCount": self.k, "supports": supports, "atoms": atoms})
    }
}

type SupportTable<T> = (Vec<Vec<T>>, Vec<bool>);

fn read_supports<S: Scalar, T>(
    v: &Value,
    net: &Network<S>,
    parse: impl Fn(&Value) -> Result<T, SketchError>,
) -> Result<SupportTable<T>, SketchError> {
    let bad = |m: String| SketchError::InvalidSketch(m);
    let supports = v.get("supports").and_then(Value::as_object).ok_or_else(|| bad("missing supports".into()))?;
    let mut ranges: Vec<Vec<T>> = (0..net.len()).map(|_| Vec::new()).collect();
    for (id, list) in supports {
        let i = net.index_of(id).map_err(|_| bad(format!("unknown seller {id:?}")))?;
        for x in list.as_array().ok_or_else(|| bad(format!("supports of {id} must be a list")))? {
            ranges[i].push(parse(x)?);
        }
    }
    let mut atoms = vec![false; net.len()];
    for a in v.get("atoms").and_then(Value::as_array).into_iter().flatten() {
        let id = a.as_str().ok_or_else(|| bad("atom entries must be seller ids".into()))?;
        atoms[net.index_of(id).map_err(|_| bad(format!("unknown seller {id:?}")))?] = true;
    }
    Ok((ranges, atoms))
}

/// A shape together with numeric boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch<S> {
    pub shape: SketchShape,
    /// Strictly decreasing, starting at 1.
    pub points: Vec<S>,
}

impl<S: Scalar> Sketch<S> {
    pub fn new(shape: SketchShape, points: Vec<S>, tol: Tolerance) -> Result<Self, SketchError> {
        if points.len() != shape.k() {
            return Err(SketchError::InvalidSketch("point count does not match shape".into()));
        }
        if !points[0].approx_eq(&S::one(), tol) {
            return Err(SketchError::InvalidSketch("first boundary point must be 1".into()));
        }
        for w in points.windows(2) {
            if !w[1].approx_lt(&w[0], tol) {
                return Err(SketchError::InvalidSketch("boundary points must strictly decrease".into()));
            }
        }
        if !points[points.len() - 1].is_positive_tol(tol) {
            return Err(SketchError::InvalidSketch("boundary points must be positive".into()));
        }
        Ok(Sketch { shape, points })
    }

    /// Sketch from explicit support intervals `[lo, hi]` per seller plus atom flags.
    pub fn from_supports(supports: &[Vec<(S, S)>], atoms: Vec<bool>, tol: Tolerance) -> Result<Self, SketchError> {
        let mut pts = vec![S::one()];
        for (lo, hi) in supports.iter().flatten() {
            if !lo.is_positive_tol(tol) || !lo.approx_lt(hi, tol) || !hi.approx_le(&S::one(), tol) {
                return Err(SketchError::InvalidSketch(format!("bad support interval [{lo}, {hi}]")));
            }
            pts.push(lo.clone());
            pts.push(hi.clone());
        }
        pts.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
        let mut points: Vec<S> = Vec::new();
        for p in pts {
            if points.last().is_none_or(|l: &S| !l.approx_eq(&p, tol)) {
                points.push(p);
            }
        }
        let k = points.len();
        let membership = supports
            .iter()
            .map(|ivs| {
                (0..k - 1)
                    .map(|j| {
                        ivs.iter().any(|(lo, hi)| lo.approx_le(&points[j + 1], tol) && points[j].approx_le(hi, tol))
                    })
                    .collect()
            })
            .collect();
        Self::new(SketchShape::new(k, membership, atoms)?, points, tol)
    }

    pub fn from_json(v: &Value, net: &Network<S>, tol: Tolerance) -> Result<Self, SketchError> {
        check_format_version(v).map_err(SketchError::InvalidSketch)?;
        let (supports, atoms) = read_supports(v, net, |x| {
            let pair = x
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| SketchError::InvalidSketch("support interval must be a pair".into()))?;
            Ok((S::from_json(&pair[0])?, S::from_json(&pair[1])?))
        })?;
        Self::from_supports(&supports, atoms, tol)
    }
}

/// Constraint families of the sketch linear program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ConstraintKind {
    EqUtil { seller: usize, point: usize },
    OffEqUtil { seller: usize, point: usize },
    StartsAtOne { seller: usize },
    NoAtom { seller: usize },
    YesAtom { seller: usize },
    OutSupport { seller: usize, interval: usize },
    CdfMon { seller: usize, interval: usize },
    SlackCap,
}

impl ConstraintKind {
    pub fn family(&self) -> &'static str {
        match self {
            ConstraintKind::EqUtil { .. } => "eq-util",
            ConstraintKind::OffEqUtil { .. } => "off-eq-util",
            ConstraintKind::StartsAtOne { .. } => "starts-at-one",
            ConstraintKind::NoAtom { .. } => "no-atom",
            ConstraintKind::YesAtom { .. } => "yes-atom",
            ConstraintKind::OutSupport { .. } => "out-support",
            ConstraintKind::CdfMon { .. } => "cdf-mon",
            ConstraintKind::SlackCap => "slack-cap",
        }
    }

    pub fn is_strict(&self) -> bool {
        matches!(self, ConstraintKind::YesAtom { .. } | ConstraintKind::CdfMon { .. })
    }

    pub fn label(&self, labels: &[String]) -> String {
        match *self {
            ConstraintKind::EqUtil { seller, point } | ConstraintKind::OffEqUtil { seller, point } => {
                format!("{}({}@t{})", self.family(), labels[seller], point + 1)
            }
            ConstraintKind::StartsAtOne { seller } | ConstraintKind::NoAtom { seller } | ConstraintKind::YesAtom { seller } => {
                format!("{}({})", self.family(), labels[seller])
            }
            ConstraintKind::OutSupport { seller, interval } | ConstraintKind::CdfMon { seller, interval } => {
                format!("{}({}@t{}..t{})", self.family(), labels[seller], interval + 2, interval + 1)
            }
            ConstraintKind::SlackCap => "slack-cap".into(),
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.family())
    }
}

/// The sketch program: variables `u` (n), tail values (n*k) and a strictness slack.
#[derive(Debug, Clone)]
pub struct Lp1 {
    pub program: LinearProgram,
    pub kinds: Vec<ConstraintKind>,
    pub n: usize,
    pub k: usize,
}

impl Lp1 {
    pub fn u_var(&self, i: usize) -> usize {
        i
    }

    pub fn fbar_var(&self, i: usize, j: usize) -> usize {
        self.n + i * self.k + j
    }

    pub fn slack_var(&self) -> usize {
        self.n + self.n * self.k
    }

    pub fn counts(&self) -> BTreeMap<&'static str, usize> {
        let mut m = BTreeMap::new();
        for k in &self.kinds {
            *m.entry(k.family()).or_insert(0) += 1;
        }
        m
    }
}

pub fn build_lp1(net: &Network<Rational>, sketch: &Sketch<Rational>) -> Result<Lp1, SketchError> {
    let shape = &sketch.shape;
    shape.check_network(net)?;
    let n = net.len();
    let k = shape.k();
    let mut lp = Lp1 { program: LinearProgram { num_vars: n + n * k + 1, ..Default::default() }, kinds: vec![], n, k };
    let s = lp.slack_var();
    let fv = |i: usize, j: usize| n + i * k + j;
    let uv = |i: usize| i;
    let one = Rational::one();
    let push = |lp: &mut Lp1, kind, coeffs, rel, rhs| {
        lp.program.constraints.push(LinearConstraint { coeffs, rel, rhs });
        lp.kinds.push(kind);
    };
    for i in 0..n {
        for (j, t) in sketch.points.iter().enumerate() {
            // u_i - t * sum_r beta_ir Fbar_r(t)  (=|>=)  t * alpha_i
            let mut coeffs = vec![(uv(i), one.clone())];
            for (r, beta) in net.neighbors(i) {
                coeffs.push((fv(*r, j), -(t * beta)));
            }
            let rhs = t * net.alpha(i);
            if shape.is_support_point(i, j) {
                push(&mut lp, ConstraintKind::EqUtil { seller: i, point: j }, coeffs, Relation::Eq, rhs);
            } else {
                push(&mut lp, ConstraintKind::OffEqUtil { seller: i, point: j }, coeffs, Relation::Ge, rhs);
            }
        }
    }
    for i in 0..n {
        push(&mut lp, ConstraintKind::StartsAtOne { seller: i }, vec![(fv(i, k - 1), one.clone())], Relation::Eq, one.clone());
        if shape.has_atom(i) {
            push(
                &mut lp,
                ConstraintKind::YesAtom { seller: i },
                vec![(fv(i, 0), one.clone()), (s, -one.clone())],
                Relation::Ge,
                Rational::zero(),
            );
        } else {
            push(&mut lp, ConstraintKind::NoAtom { seller: i }, vec![(fv(i, 0), one.clone())], Relation::Eq, Rational::zero());
        }
        for j in 0..k - 1 {
            // tail values are non-increasing in price: Fbar(t[j+1]) >= Fbar(t[j])
            let lower = fv(i, j + 1);
            let upper = fv(i, j);
            if shape.in_interval(i, j) {
                push(
                    &mut lp,
                    ConstraintKind::CdfMon { seller: i, interval: j },
                    vec![(lower, one.clone()), (upper, -one.clone()), (s, -one.clone())],
                    Relation::Ge,
                    Rational::zero(),
                );
            } else {
                push(
                    &mut lp,
                    ConstraintKind::OutSupport { seller: i, interval: j },
                    vec![(lower, one.clone()), (upper, -one.clone())],
                    Relation::Eq,
                    Rational::zero(),
                );
            }
        }
    }
    push(&mut lp, ConstraintKind::SlackCap, vec![(s, one.clone())], Relation::Le, one.clone());
    lp.program.objective = vec![(s, one)];
    Ok(lp)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Uniqueness {
    /// Every interval's active shared-market matrix is nonsingular.
    Unique,
    /// Two pivot orders produced different solutions.
    NotUnique,
    /// Not full rank, but no second solution was found.
    Undetermined,
}

impl Uniqueness {
    pub fn as_str(&self) -> &'static str {
        match self {
            Uniqueness::Unique => "unique",
            Uniqueness::NotUnique => "not-unique",
            Uniqueness::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SketchSolution<S> {
    pub sketch: Sketch<S>,
    /// `fbar[i][j] = Fbar_i(t[j])`.
    pub fbar: Vec<Vec<S>>,
    pub utilities: Vec<S>,
    pub uniqueness: Uniqueness,
}

impl<S: Scalar> SketchSolution<S> {
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T + Copy) -> SketchSolution<T> {
        SketchSolution {
            sketch: Sketch { shape: self.sketch.shape.clone(), points: self.sketch.points.iter().map(f).collect() },
            fbar: self.fbar.iter().map(|r| r.iter().map(f).collect()).collect(),
            utilities: self.utilities.iter().map(f).collect(),
            uniqueness: self.uniqueness,
        }
    }

    pub fn to_json(&self, net: &Network<S>) -> Value {
        let sellers: Vec<Value> = (0..net.len())
            .map(|i| {
                json!({
                    "id": net.label(i),
                    "utility": self.utilities[i].to_json(),
                    "atom": self.sketch.shape.has_atom(i),
                    "fbar": self.fbar[i].iter().map(Scalar::to_json).collect::<Vec<_>>(),
                })
            })
            .collect();
        json!({
            "formatVersion": 1,
            "kind": "sketchSolution",
            "exact": S::EXACT,
            "points": self.sketch.points.iter().map(Scalar::to_json).collect::<Vec<_>>(),
            "shape": self.sketch.shape.to_json(net),
            "uniqueness": self.uniqueness.as_str(),
            "sellers": sellers,
        })
    }
}

/// Exact determinant by Gaussian elimination.
pub fn determinant(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&r| !m[r][c].is_zero()) else { return Rational::zero() };
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        let pivot = m[c][c].clone();
        det = det * &pivot;
        for r in c + 1..n {
            if m[r][c].is_zero() {
                continue;
            }
            let f = &m[r][c] / &pivot;
            let (top, bottom) = m.split_at_mut(r);
            for (x, y) in bottom[0][c..n].iter_mut().zip(&top[c][c..n]) {
                *x -= &f * y;
            }
        }
    }
    det
}

/// True when the shared-market submatrix of the active sellers on every interval is
/// nonsingular, which pins the solution down uniquely.
pub fn check_full_rank<S: Scalar>(net: &Network<S>, shape: &SketchShape) -> bool {
    (0..shape.k().saturating_sub(1)).all(|j| {
        let act = shape.active(j);
        if act.is_empty() {
            return true;
        }
        let m: Vec<Vec<Rational>> = act
            .iter()
            .map(|&a| {
                act.iter()
                    .map(|&b| match net.beta(a, b) {
                        Some(v) if S::EXACT => Rational::from_f64_exact(v.to_f64()).unwrap_or_else(|_| Rational::zero()),
                        Some(v) => Rational::approximate(v.to_f64(), 1 << 40, 1e-12)
                            .unwrap_or_else(|| Rational::from_f64_exact(v.to_f64()).unwrap_or_else(|_| Rational::zero())),
                        None => Rational::zero(),
                    })
                    .collect()
            })
            .collect();
        !determinant(m).is_zero()
    })
}

fn solution_from_x(lp: &Lp1, sketch: &Sketch<Rational>, x: &[Rational]) -> (Vec<Vec<Rational>>, Vec<Rational>) {
    let fbar = (0..lp.n).map(|i| (0..lp.k).map(|j| x[lp.fbar_var(i, j)].clone()).collect()).collect();
    let utilities = (0..lp.n).map(|i| x[lp.u_var(i)].clone()).collect();
    let _ = sketch;
    (fbar, utilities)
}

/// Solves the sketch program exactly. Strict constraints hold when the optimal slack is
/// positive; otherwise the sketch is reported infeasible together with the culprits.
pub fn solve_lp1(net: &Network<Rational>, sketch: &Sketch<Rational>) -> Result<SketchSolution<Rational>, SketchError> {
    let lp = build_lp1(net, sketch)?;
    let labels = net.labels();
    let x = match solve_lp_rational(&lp.program, PivotOrder::Forward) {
        LpOutcome::Optimal { x, value } if value.is_positive() => x,
        LpOutcome::Optimal { x, .. } => {
            let violated = lp
                .kinds
                .iter()
                .zip(&lp.program.constraints)
                .filter(|(kind, c)| {
                    kind.is_strict() && {
                        let lhs: Rational = c.coeffs.iter().filter(|(j, _)| *j != lp.slack_var()).map(|(j, v)| v * &x[*j]).sum();
                        lhs.is_zero()
                    }
                })
                .map(|(kind, _)| kind.label(labels))
                .collect();
            return Err(SketchError::Infeasible { violated });
        }
        LpOutcome::Infeasible { conflicting } => {
            return Err(SketchError::Infeasible { violated: conflicting.iter().map(|&c| lp.kinds[c].label(labels)).collect() })
        }
        LpOutcome::Unbounded => unreachable!("slack is capped"),
    };
    let (fbar, utilities) = solution_from_x(&lp, sketch, &x);
    let uniqueness = if check_full_rank(net, &sketch.shape) {
        Uniqueness::Unique
    } else {
        match solve_lp_rational(&lp.program, PivotOrder::Reverse) {
            LpOutcome::Optimal { x: y, value } if value.is_positive() => {
                let (f2, u2) = solution_from_x(&lp, sketch, &y);
                if f2 == fbar && u2 == utilities {
                    Uniqueness::Undetermined
                } else {
                    Uniqueness::NotUnique
                }
            }
            _ => Uniqueness::Undetermined,
        }
    };
    Ok(SketchSolution { sketch: sketch.clone(), fbar, utilities, uniqueness })
}

/// Reconstructs the profile by interpolating each tail linearly in `1/x` between points.
pub fn sketch_solution_to_profile<S: Scalar>(
    ss: &SketchSolution<S>,
    labels: &[String],
    tol: Tolerance,
) -> Result<StrategyProfile<S>, SketchError> {
    let k = ss.sketch.points.len();
    let mut cdfs = Vec::with_capacity(ss.fbar.len());
    for (i, row) in ss.fbar.iter().enumerate() {
        let name = || labels.get(i).cloned().unwrap_or_else(|| i.to_string());
        if row.len() != k {
            return Err(SketchError::InvalidSketch(format!("seller {} has {} tail values", name(), row.len())));
        }
        for j in 0..k - 1 {
            if row[j + 1].approx_lt(&row[j], tol) {
                return Err(SketchError::InterpolationNotMonotone(name()));
            }
        }
        let knots: Vec<(S, S)> = (0..k).rev().map(|j| (ss.sketch.points[j].clone(), row[j].clone())).collect();
        cdfs.push(PiecewiseCdf::from_knots(&knots, tol).map_err(|e| match e {
            StrategyError::InvalidCdf(_) => SketchError::InterpolationNotMonotone(name()),
            other => other.into(),
        })?);
    }
    Ok(StrategyProfile::new(cdfs))
}

/// Reads a profile back into sketch form, using every breakpoint as a boundary point.
pub fn sketch_solution_from_profile<S: Scalar>(
    net: &Network<S>,
    profile: &StrategyProfile<S>,
    utilities: Vec<S>,
    tol: Tolerance,
) -> Result<SketchSolution<S>, SketchError> {
    let mut points = crate::strategy::breakpoints(profile);
    points.reverse();
    let k = points.len();
    let fbar: Vec<Vec<S>> = profile.cdfs.iter().map(|c| points.iter().map(|t| c.fbar(t)).collect()).collect();
    let membership = fbar
        .iter()
        .map(|row| (0..k - 1).map(|j| row[j].approx_lt(&row[j + 1], tol)).collect())
        .collect();
    let atoms = fbar.iter().map(|row| row[0].is_positive_tol(tol)).collect();
    let shape = SketchShape::new(k, membership, atoms)?;
    let uniqueness = if check_full_rank(net, &shape) { Uniqueness::Unique } else { Uniqueness::Undetermined };
    Ok(SketchSolution { sketch: Sketch::new(shape, points, tol)?, fbar, utilities, uniqueness })
}

/// Converts per-interval masses (`masses[i][j]` on `(t[j+1], t[j])`) plus atoms into
/// tail values at the boundary points.
pub fn fbar_from_masses<S: Scalar>(
    shape: &SketchShape,
    masses: &[Vec<S>],
    atoms: &[S],
    tol: Tolerance,
) -> Result<Vec<Vec<S>>, SketchError> {
    let k = shape.k();
    let mut out = Vec::with_capacity(masses.len());
    for (i, m) in masses.iter().enumerate() {
        if m.len() + 1 != k {
            return Err(SketchError::InvalidSketch(format!("seller {i} needs {} masses", k - 1)));
        }
        let mut row = vec![atoms[i].clone()];
        for mass in m {
            if mass.approx_lt(&S::zero(), tol) {
                return Err(SketchError::InterpolationNotMonotone(i.to_string()));
            }
            let next = row.last().expect("non-empty").clone() + mass.clone();
            row.push(next);
        }
        if !row[k - 1].approx_eq(&S::one(), tol) {
            return Err(SketchError::InvalidSketch(format!("masses of seller {i} sum to {}", row[k - 1])));
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    fn intro() -> (Network<Rational>, Sketch<Rational>) {
        let net = Network::new(vec![q(1, 1), q(0, 1)], vec![(0, 1, q(1, 1))]).unwrap();
        let sk = Sketch::from_supports(&[vec![(q(1, 2), q(1, 1))], vec![(q(1, 2), q(1, 1))]], vec![true, false], Tolerance::exact())
            .unwrap();
        (net, sk)
    }

    #[test]
    fn intro_sketch_solves() {
        let (net, sk) = intro();
        let sol = solve_lp1(&net, &sk).unwrap();
        assert_eq!(sol.utilities, vec![q(1, 1), q(1, 2)]);
        assert_eq!(sol.fbar, vec![vec![q(1, 2), q(1, 1)], vec![q(0, 1), q(1, 1)]]);
        assert_eq!(sol.uniqueness, Uniqueness::Unique);
        let p = sketch_solution_to_profile(&sol, net.labels(), Tolerance::exact()).unwrap();
        assert_eq!(p.cdfs[0].fbar(&q(3, 4)), q(2, 3));
    }

    #[test]
    fn wrong_boundary_is_infeasible() {
        let (net, _) = intro();
        let sk = Sketch::from_supports(&[vec![(q(1, 3), q(1, 1))], vec![(q(1, 3), q(1, 1))]], vec![true, false], Tolerance::exact())
            .unwrap();
        assert!(matches!(solve_lp1(&net, &sk), Err(SketchError::Infeasible { .. })));
    }

    #[test]
    fn shared_atom_rejected() {
        let (net, _) = intro();
        let sk = Sketch::from_supports(&[vec![(q(1, 2), q(1, 1))], vec![(q(1, 2), q(1, 1))]], vec![true, true], Tolerance::exact())
            .unwrap();
        assert!(matches!(solve_lp1(&net, &sk), Err(SketchError::SharedAtom(..))));
    }

    #[test]
    fn masses_to_tails() {
        let shape = SketchShape::from_index_ranges(3, &[vec![(1, 3)]], vec![true]).unwrap();
        let f = fbar_from_masses(&shape, &[vec![q(7, 12), q(1, 3)]], &[q(1, 12)], Tolerance::exact()).unwrap();
        assert_eq!(f, vec![vec![q(1, 12), q(2, 3), q(1, 1)]]);
    }

    #[test]
    fn determinant_small() {
        let m = vec![vec![q(0, 1), q(1, 1), q(1, 1)], vec![q(1, 1), q(0, 1), q(1, 1)], vec![q(1, 1), q(1, 1), q(0, 1)]];
        assert_eq!(determinant(m), q(2, 1));
    }
}
