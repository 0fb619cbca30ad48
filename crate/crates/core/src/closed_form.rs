//! Explicit equilibrium constructions for special topologies.

use thiserror::Error;

use crate::network::{validate_network, Network, NetworkError, Triviality};
use crate::numerics::{Scalar, Tolerance};
use crate::sketch::{sketch_solution_from_profile, SketchError, SketchSolution};
use crate::strategy::{PiecewiseCdf, StrategyError, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClosedFormError {
    #[error("expected exactly two sellers sharing one market")]
    NotTwoSellers,
    #[error("network is not a tree")]
    NotATree,
    #[error("network is not a line")]
    NotALine,
    #[error("network is not a star")]
    NotAStar,
    #[error("network is not a clique")]
    NotAClique,
    #[error("more than one seller has a captive market")]
    MultipleCaptive,
    #[error("no seller has a captive market")]
    NoCaptive,
    #[error("shared markets must all have size 1")]
    NonUnitMarkets,
    #[error("degenerate parameters: {0}")]
    NonGeneric(String),
    #[error("construction broken: {0}")]
    ConstructionBroken(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

/// Solution of a closed-form construction, indexed like the input network.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedFormSolution<S> {
    pub profile: StrategyProfile<S>,
    pub utilities: Vec<S>,
    pub sketch: SketchSolution<S>,
}

pub(crate) fn tol_for<S: Scalar>() -> Tolerance {
    if S::EXACT {
        Tolerance::exact()
    } else {
        Tolerance::DEFAULT
    }
}

fn finish<S: Scalar>(
    net: &Network<S>,
    knots: Vec<Vec<(S, S)>>,
    utilities: Vec<S>,
) -> Result<ClosedFormSolution<S>, ClosedFormError> {
    let tol = tol_for::<S>();
    let cdfs = knots
        .iter()
        .map(|k| PiecewiseCdf::from_knots(k, tol))
        .collect::<Result<Vec<_>, _>>()?;
    let profile = StrategyProfile::new(cdfs);
    let sketch = sketch_solution_from_profile(net, &profile, utilities.clone(), tol)?;
    Ok(ClosedFormSolution { profile, utilities, sketch })
}

/// Two sellers with captive sizes `alpha1, alpha2` and one shared market `beta`.
pub fn two_seller<S: Scalar>(alpha1: S, alpha2: S, beta: S) -> Result<ClosedFormSolution<S>, ClosedFormError> {
    let net = Network::new(vec![alpha1, alpha2], vec![(0, 1, beta)])?;
    solve_two(&net)
}

pub fn solve_two<S: Scalar>(net: &Network<S>) -> Result<ClosedFormSolution<S>, ClosedFormError> {
    if net.len() != 2 || net.markets().len() != 1 {
        return Err(ClosedFormError::NotTwoSellers);
    }
    let beta = net.markets()[0].beta.clone();
    let (hi, lo) = if net.alpha(0) >= net.alpha(1) { (0, 1) } else { (1, 0) };
    let a1 = net.alpha(hi).clone();
    let a2 = net.alpha(lo).clone();
    if a1.is_zero() {
        let profile = StrategyProfile::new(vec![PiecewiseCdf::point_mass_at_zero(); 2]);
        let sketch = zero_sketch(net)?;
        return Ok(ClosedFormSolution { profile, utilities: vec![S::zero(), S::zero()], sketch });
    }
    let t2 = a1.clone() / (a1.clone() + beta.clone());
    let u_lo = t2.clone() * (a2.clone() + beta.clone());
    let atom = (u_lo.clone() - a2) / beta;
    let mut knots = vec![Vec::new(), Vec::new()];
    knots[hi] = vec![(t2.clone(), S::one()), (S::one(), atom)];
    knots[lo] = vec![(t2, S::one()), (S::one(), S::zero())];
    let mut utilities = vec![S::zero(), S::zero()];
    utilities[hi] = a1;
    utilities[lo] = u_lo;
    finish(net, knots, utilities)
}

fn zero_sketch<S: Scalar>(net: &Network<S>) -> Result<SketchSolution<S>, ClosedFormError> {
    // pricing at zero has no interior support; record it as all sellers below the lone point
    let shape = crate::sketch::SketchShape::new(1, vec![vec![]; net.len()], vec![true; net.len()]);
    let shape = shape.map_err(ClosedFormError::Sketch)?;
    Ok(SketchSolution {
        sketch: crate::sketch::Sketch { shape, points: vec![S::one()] },
        fbar: vec![vec![S::zero()]; net.len()],
        utilities: vec![S::zero(); net.len()],
        uniqueness: crate::sketch::Uniqueness::Unique,
    })
}

/// Per-seller quantities of the tree construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeQuantities<S> {
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    /// Tail value of each seller at its middle knot (root: the atom).
    pub q: Vec<S>,
    /// Middle knot of each seller.
    pub m: Vec<S>,
}

pub fn tree_quantities<S: Scalar>(net: &Network<S>) -> Result<TreeQuantities<S>, ClosedFormError> {
    if !net.is_tree() {
        return Err(ClosedFormError::NotATree);
    }
    let captive: Vec<usize> = (0..net.len()).filter(|&i| !net.alpha(i).is_zero()).collect();
    let root = match captive.as_slice() {
        [] => return Err(ClosedFormError::NoCaptive),
        [r] => *r,
        _ => return Err(ClosedFormError::MultipleCaptive),
    };
    let n = net.len();
    let mut parent = vec![None; n];
    let mut order = vec![root];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for (c, _) in net.neighbors(v) {
            if !seen[*c] {
                seen[*c] = true;
                parent[*c] = Some(v);
                order.push(*c);
            }
        }
    }
    let mut q = vec![S::one(); n];
    for &v in order.iter().rev() {
        let below = net
            .neighbors(v)
            .iter()
            .filter(|(c, _)| parent[*c] == Some(v))
            .fold(S::zero(), |acc, (c, b)| acc + b.clone() * q[*c].clone());
        let own = match parent[v] {
            Some(p) => net.beta(v, p).expect("tree edge").clone(),
            None => net.alpha(v).clone(),
        };
        q[v] = own.clone() / (own + below);
    }
    let mut m = vec![S::one(); n];
    for &v in &order {
        if let Some(p) = parent[v] {
            m[v] = m[p].clone() * q[p].clone();
        }
    }
    Ok(TreeQuantities { root, parent, q, m })
}

/// Tree with a single captive market, rooted at the captive seller.
pub fn solve_tree<S: Scalar>(net: &Network<S>) -> Result<ClosedFormSolution<S>, ClosedFormError> {
    let tq = tree_quantities(net)?;
    let n = net.len();
    let mut knots = Vec::with_capacity(n);
    let mut utilities = Vec::with_capacity(n);
    for v in 0..n {
        let low = tq.m[v].clone() * tq.q[v].clone();
        match tq.parent[v] {
            None => {
                utilities.push(net.alpha(v).clone());
                if n == 1 {
                    knots.push(vec![]);
                } else {
                    knots.push(vec![(low, S::one()), (S::one(), tq.q[v].clone())]);
                }
            }
            Some(p) => {
                utilities.push(tq.m[v].clone() * net.beta(v, p).expect("tree edge").clone());
                let high = tq.m[p].clone();
                let mut k = vec![(low.clone(), S::one())];
                if low != tq.m[v] {
                    k.push((tq.m[v].clone(), tq.q[v].clone()));
                }
                k.push((high, S::zero()));
                knots.push(k);
            }
        }
    }
    finish(net, knots, utilities)
}

fn is_path<S: Scalar>(net: &Network<S>) -> bool {
    net.is_tree() && (0..net.len()).all(|i| net.degree(i) <= 2)
}

/// Line with a single captive market.
pub fn solve_line<S: Scalar>(net: &Network<S>) -> Result<ClosedFormSolution<S>, ClosedFormError> {
    if !is_path(net) {
        return Err(ClosedFormError::NotALine);
    }
    solve_tree(net)
}

/// Three sellers in a line with the captive market at one end.
pub fn line3<S: Scalar>(alpha1: S, beta12: S, beta23: S) -> Result<ClosedFormSolution<S>, ClosedFormError> {
    let net = Network::line(vec![alpha1, S::zero(), S::zero()], vec![beta12, beta23])?;
    solve_line(&net)
}

/// Which construction branch the star solution took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarCase {
    /// The center keeps an atom at price 1.
    CenterAtom,
    /// Peripherals of rank `1..j` (1-based) price at 1, rank `j` keeps an atom there; the center has none.
    PeripheralAtom { j: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarSolution<S> {
    pub solution: ClosedFormSolution<S>,
    pub center: usize,
    /// Peripheral sellers sorted by decreasing captive size.
    pub ranking: Vec<usize>,
    /// Boundary points `b[0] = 1, b[1], ..., b[m]` in rank order.
    pub boundaries: Vec<S>,
    /// Center tail values at the boundary points as realized by the profile.
    pub center_tail: Vec<S>,
    pub case: StarCase,
    /// Case chosen by the CDF-form recurrence; differs from `case` only on a bug.
    pub cross_check_case: StarCase,
}

impl<S> StarSolution<S> {
    pub fn conventions_agree(&self) -> bool {
        self.case == self.cross_check_case
    }
}

fn find_center<S: Scalar>(net: &Network<S>) -> Option<usize> {
    let n = net.len();
    if n < 2 || net.markets().len() != n - 1 {
        return None;
    }
    (0..n).find(|&c| net.degree(c) == n - 1)
}

pub fn solve_star<S: Scalar>(net: &Network<S>, center: Option<usize>) -> Result<StarSolution<S>, ClosedFormError> {
    let center = match center {
        Some(c) if c < net.len() && net.degree(c) + 1 == net.len() && net.markets().len() + 1 == net.len() => c,
        Some(_) => return Err(ClosedFormError::NotAStar),
        None => find_center(net).ok_or(ClosedFormError::NotAStar)?,
    };
    if net.markets().iter().any(|m| m.beta != S::one()) {
        return Err(ClosedFormError::NonUnitMarkets);
    }
    if validate_network(net)? == Triviality::NoCaptive {
        return Err(ClosedFormError::NoCaptive);
    }
    let mut ranking: Vec<usize> = (0..net.len()).filter(|&i| i != center).collect();
    ranking.sort_by(|&a, &b| net.alpha(b).partial_cmp(net.alpha(a)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let m = ranking.len();
    let a0 = net.alpha(center).clone();
    let alpha = |r: usize| net.alpha(ranking[r - 1]).clone();
    let denom = |r: usize| a0.clone() + S::from_i64(r as i64);

    // tail recurrence, f[m] = 1
    let mut f = vec![S::one(); m + 1];
    for i in (1..=m).rev() {
        f[i - 1] = f[i].clone() - (alpha(i) + f[i].clone()) / denom(i);
    }
    if f.iter().any(|v| v.is_zero()) {
        return Err(ClosedFormError::NonGeneric("center tail vanishes at a boundary".into()));
    }
    let case = match (1..=m).rev().find(|&i| f[i - 1] < S::zero()) {
        None => StarCase::CenterAtom,
        Some(j) => StarCase::PeripheralAtom { j },
    };
    // the same recurrence in CDF form, g = 1 - f, g[m] = 0
    let mut g = vec![S::zero(); m + 1];
    for i in (1..=m).rev() {
        g[i - 1] = g[i].clone() + (alpha(i) + S::one() - g[i].clone()) / denom(i);
    }
    let cross_check_case = match (1..=m).rev().find(|&i| g[i - 1] > S::one()) {
        None => StarCase::CenterAtom,
        Some(j) => StarCase::PeripheralAtom { j },
    };

    let (u0, j) = match case {
        StarCase::CenterAtom => {
            if a0.is_zero() {
                return Err(ClosedFormError::NonGeneric("center atom with empty captive market".into()));
            }
            (a0.clone(), 1)
        }
        StarCase::PeripheralAtom { j } => (alpha(j) * denom(j) / (alpha(j) + f[j].clone()), j),
    };
    let mut b = vec![S::one(); m + 1];
    for (i, bi) in b.iter_mut().enumerate().skip(j) {
        *bi = u0.clone() / denom(i);
    }
    if case == StarCase::CenterAtom {
        b[0] = S::one();
    }
    for i in j..=m {
        let upper = if i == j && case != StarCase::CenterAtom { S::one() } else { b[i - 1].clone() };
        if !(b[i] < upper) || !(b[i] > S::zero()) {
            return Err(ClosedFormError::NonGeneric("boundary points collide".into()));
        }
    }

    let n = net.len();
    let mut knots: Vec<Vec<(S, S)>> = vec![Vec::new(); n];
    let mut utilities = vec![S::zero(); n];
    // center: knots at b[m] .. b[j], then price 1
    let mut ck: Vec<(S, S)> = (j..=m).rev().map(|i| (b[i].clone(), f[i].clone())).collect();
    match case {
        StarCase::CenterAtom => ck.push((S::one(), f[0].clone())),
        StarCase::PeripheralAtom { .. } => ck.push((S::one(), S::zero())),
    }
    knots[center] = ck;
    utilities[center] = u0.clone();
    let mut u_next = S::zero();
    for i in (1..=m).rev() {
        let s = ranking[i - 1];
        if i < j {
            knots[s] = vec![];
            utilities[s] = alpha(i);
            continue;
        }
        let u_i = if i == m {
            b[m].clone() * (alpha(m) + S::one())
        } else {
            u_next.clone() + b[i].clone() * (alpha(i) - alpha(i + 1))
        };
        if i == j && case != StarCase::CenterAtom {
            let atom = u0.clone() - a0.clone() - S::from_i64(j as i64 - 1);
            knots[s] = vec![(b[i].clone(), S::one()), (S::one(), atom)];
            utilities[s] = alpha(j);
        } else {
            knots[s] = vec![(b[i].clone(), S::one()), (b[i - 1].clone(), S::zero())];
            utilities[s] = u_i.clone();
        }
        u_next = u_i;
    }
    let solution = finish(net, knots, utilities)?;
    let mut center_tail = f;
    if case != StarCase::CenterAtom {
        // cut points above b[j] collapse to 1, where the center keeps no atom
        center_tail.iter_mut().take(j).for_each(|v| *v = S::zero());
    }
    Ok(StarSolution { solution, center, ranking, boundaries: b, center_tail, case, cross_check_case })
}

/// Candidate construction for cliques with unit shared markets. It is not guaranteed to be
/// an equilibrium and must be checked with the verifier.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueCandidate<S> {
    pub solution: ClosedFormSolution<S>,
    /// Sellers sorted by decreasing captive size.
    pub ranking: Vec<usize>,
    /// Boundary points in rank order, `t[0] = 1`.
    pub t: Vec<S>,
    /// Tail value of each ranked seller at its own boundary point; the last one is 1.
    pub q: Vec<S>,
    /// Always true: the construction is unproven.
    pub flagged: bool,
}

pub fn clique_candidate<S: Scalar>(net: &Network<S>) -> Result<CliqueCandidate<S>, ClosedFormError> {
    let n = net.len();
    if n < 2 || net.markets().len() != n * (n - 1) / 2 {
        return Err(ClosedFormError::NotAClique);
    }
    if net.markets().iter().any(|m| m.beta != S::one()) {
        return Err(ClosedFormError::NonUnitMarkets);
    }
    let mut ranking: Vec<usize> = (0..n).collect();
    ranking.sort_by(|&a, &b| net.alpha(b).partial_cmp(net.alpha(a)).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let alpha = |r: usize| net.alpha(ranking[r]).clone();
    if !(alpha(0) > S::zero()) {
        return Err(ClosedFormError::NoCaptive);
    }
    // 0-based rank r carries the offset r (sellers ranked above it)
    let offset = |r: usize| S::from_i64(r as i64);
    let mut q = vec![S::one(); n];
    let mut ratio = vec![S::one(); n];
    for r in (0..n - 1).rev() {
        let base = alpha(r) + offset(r);
        ratio[r] = (base.clone() + q[r + 1].clone()) / base;
        q[r] = (alpha(r + 1) + offset(r + 1)) / ratio[r].clone() - (alpha(r + 1) + offset(r));
    }
    let mut t = vec![S::one(); n];
    for r in 1..n {
        t[r] = t[r - 1].clone() / ratio[r - 1].clone();
    }
    for r in 0..n - 1 {
        if !(q[r] > S::zero() && q[r] < S::one()) {
            return Err(ClosedFormError::ConstructionBroken(format!("tail value {} of rank {} outside (0, 1)", q[r], r + 1)));
        }
        if !(t[r + 1] < t[r]) {
            return Err(ClosedFormError::ConstructionBroken("boundary points not decreasing".into()));
        }
    }
    let mut knots = vec![Vec::new(); n];
    let mut utilities = vec![S::zero(); n];
    for r in 0..n {
        let s = ranking[r];
        utilities[s] = t[r].clone() * (alpha(r) + offset(r));
        knots[s] = if r == 0 {
            vec![(t[1].clone(), S::one()), (S::one(), q[0].clone())]
        } else if r == n - 1 {
            vec![(t[r].clone(), S::one()), (t[r - 1].clone(), S::zero())]
        } else {
            vec![(t[r + 1].clone(), S::one()), (t[r].clone(), q[r].clone()), (t[r - 1].clone(), S::zero())]
        };
    }
    let solution = finish(net, knots, utilities)?;
    Ok(CliqueCandidate { solution, ranking, t, q, flagged: true })
}
