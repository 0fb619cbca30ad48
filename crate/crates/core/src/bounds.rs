//! Utility bounds in terms of effective degree, distance and cuts, and a checker that
//! runs them against the utilities of an equilibrium.

use std::collections::VecDeque;

use serde_json::{json, Value};
use thiserror::Error;

use crate::network::{effective_degree, graph_metrics, Network, NetworkError};
use crate::numerics::{max_of, Scalar, Tolerance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("seller subset is empty")]
    EmptySubset,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("expected {expected} utilities, got {got}")]
    UtilityCount { expected: usize, got: usize },
    #[error("seller index {0} out of range")]
    UnknownSeller(usize),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

fn pow<S: Scalar>(base: &S, exp: usize) -> S {
    (0..exp).fold(S::one(), |acc, _| acc * base.clone())
}

/// Diameter of the largest component of the graph on `members` using only edges
/// accepted by `keep`.
fn sub_diameter<S: Scalar>(net: &Network<S>, members: &[usize], keep: impl Fn(usize, usize, &S) -> bool) -> usize {
    let inside = |v: usize| members.contains(&v);
    let mut best = 0;
    for &s in members {
        let mut dist = vec![usize::MAX; net.len()];
        dist[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(v) = queue.pop_front() {
            for (w, b) in net.neighbors(v) {
                if inside(*w) && dist[*w] == usize::MAX && keep(v, *w, b) {
                    dist[*w] = dist[v] + 1;
                    best = best.max(dist[*w]);
                    queue.push_back(*w);
                }
            }
        }
    }
    best
}

fn check_members<S: Scalar>(net: &Network<S>, g: &[usize]) -> Result<Vec<usize>, BoundsError> {
    if g.is_empty() {
        return Err(BoundsError::EmptySubset);
    }
    let mut g = g.to_vec();
    g.sort_unstable();
    g.dedup();
    if let Some(&bad) = g.iter().find(|&&i| i >= net.len()) {
        return Err(BoundsError::UnknownSeller(bad));
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NeighborViolation<S> {
    pub i: usize,
    pub j: usize,
    pub u_j: S,
    /// `u_i / Delta_i`, the smallest utility `j` may have.
    pub required: S,
}

/// Flags every ordered pair of neighbors with `u_j < u_i / Delta_i`.
pub fn neighbor_bound<S: Scalar>(
    net: &Network<S>,
    u: &[S],
    tol: Tolerance,
) -> Result<Vec<NeighborViolation<S>>, BoundsError> {
    if u.len() != net.len() {
        return Err(BoundsError::UtilityCount { expected: net.len(), got: u.len() });
    }
    let mut out = Vec::new();
    for i in 0..net.len() {
        let d = effective_degree(net, i);
        let required = u[i].clone() / d;
        for (j, _) in net.neighbors(i) {
            if u[*j].approx_lt(&required, tol) {
                out.push(NeighborViolation { i, j: *j, u_j: u[*j].clone(), required: required.clone() });
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathBounds<S> {
    pub delta: S,
    pub diameter: usize,
    pub alpha_max: S,
    /// `(alpha_max / Delta^D, alpha_max * Delta^D)` for every seller.
    pub per_seller: Vec<(S, S)>,
    /// `max_i alpha_i / Delta^dist(i, j)`: the neighbor bound chained along shortest paths.
    pub chain_lower: Vec<S>,
}

pub fn path_bounds<S: Scalar>(net: &Network<S>) -> Result<PathBounds<S>, BoundsError> {
    let m = graph_metrics(net)?;
    let spread = pow(&m.max_effective_degree, m.diameter);
    let lower = m.alpha_max.clone() / spread.clone();
    let upper = m.alpha_max.clone() * spread;
    let chain_lower = (0..net.len())
        .map(|j| {
            (0..net.len())
                .map(|i| net.alpha(i).clone() / pow(&m.max_effective_degree, m.distances[i][j]))
                .fold(S::zero(), max_of)
        })
        .collect();
    Ok(PathBounds {
        delta: m.max_effective_degree,
        diameter: m.diameter,
        alpha_max: m.alpha_max,
        per_seller: vec![(lower, upper); net.len()],
        chain_lower,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutBound<S> {
    pub members: Vec<usize>,
    /// `max_{i in G} alpha_i + sum_{j not in G} beta_ij`.
    pub epsilon: S,
    pub delta_g: S,
    pub diameter_g: usize,
    pub bound: S,
}

/// Upper bound `epsilon * Delta_G^D_G` on every member of `g`.
pub fn cut_bound<S: Scalar>(net: &Network<S>, g: &[usize]) -> Result<CutBound<S>, BoundsError> {
    let g = check_members(net, g)?;
    let inside = |v: usize| g.binary_search(&v).is_ok();
    let mut epsilon = S::zero();
    let mut delta_g = S::one();
    for &i in &g {
        let leak = net
            .neighbors(i)
            .iter()
            .filter(|(j, _)| !inside(*j))
            .fold(net.alpha(i).clone(), |acc, (_, b)| acc + b.clone());
        epsilon = max_of(epsilon, leak);
        let total = net.alpha(i).clone() + net.incident_total(i);
        for (j, b) in net.neighbors(i) {
            if inside(*j) {
                delta_g = max_of(delta_g, total.clone() / b.clone());
            }
        }
    }
    let diameter_g = sub_diameter(net, &g, |_, _, _| true);
    let bound = epsilon.clone() * pow(&delta_g, diameter_g);
    Ok(CutBound { members: g, epsilon, delta_g, diameter_g, bound })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BigCutBound<S> {
    pub big_edges: Vec<(usize, usize)>,
    /// Sellers incident to a big edge.
    pub big_sellers: Vec<usize>,
    /// Members of `G` not in `B`; the bound applies to these.
    pub covered: Vec<usize>,
    pub delta: S,
    pub diameter: usize,
    pub bound: S,
}

/// `n^2 Delta^(2D) / M` for the sellers of `g` not touching a big market. Big edges are
/// those with size at least `m`; every other edge must be at most 1, as must every
/// captive market.
pub fn big_cut_bound<S: Scalar>(net: &Network<S>, g: &[usize], m: &S) -> Result<BigCutBound<S>, BoundsError> {
    let g = check_members(net, g)?;
    if *m <= S::one() {
        return Err(BoundsError::PreconditionViolated("big scale must exceed 1".into()));
    }
    if let Some(i) = (0..net.len()).find(|&i| *net.alpha(i) > S::one()) {
        return Err(BoundsError::PreconditionViolated(format!("captive market of {} exceeds 1", net.label(i))));
    }
    let mut big_edges = Vec::new();
    for mk in net.markets() {
        if mk.beta >= *m {
            big_edges.push((mk.a.min(mk.b), mk.a.max(mk.b)));
        } else if mk.beta > S::one() {
            return Err(BoundsError::PreconditionViolated(format!(
                "market ({}, {}) is neither small nor big",
                net.label(mk.a),
                net.label(mk.b)
            )));
        }
    }
    for &i in &g {
        if !crate::network::edge_cut_separates(net, &big_edges, i)? {
            return Err(BoundsError::PreconditionViolated(format!(
                "big markets do not separate {} from captive demand",
                net.label(i)
            )));
        }
    }
    let mut big_sellers: Vec<usize> = big_edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    big_sellers.sort_unstable();
    big_sellers.dedup();
    let covered: Vec<usize> = g.iter().copied().filter(|i| big_sellers.binary_search(i).is_err()).collect();
    let is_big = |b: &S| *b >= *m;

    // Delta_B uses only big edges; Delta_{G-B} only the small edges inside G - B
    let mut delta = S::one();
    for &i in &big_sellers {
        let total = net.neighbors(i).iter().filter(|(_, b)| is_big(b)).fold(S::zero(), |acc, (_, b)| acc + b.clone());
        for (_, b) in net.neighbors(i).iter().filter(|(_, b)| is_big(b)) {
            delta = max_of(delta, total.clone() / b.clone());
        }
    }
    for &i in &covered {
        let total = net.alpha(i).clone() + net.incident_total(i);
        for (j, b) in net.neighbors(i) {
            if covered.binary_search(j).is_ok() {
                delta = max_of(delta, total.clone() / b.clone());
            }
        }
    }
    // where the diameters are ambiguous, take the largest of the three
    let d_b = sub_diameter(net, &big_sellers, |_, _, b| is_big(b));
    let d_g = sub_diameter(net, &g, |_, _, _| true);
    let d_gb = sub_diameter(net, &covered, |_, _, b| !is_big(b));
    let diameter = d_b.max(d_g).max(d_gb);
    let n = S::from_i64(net.len() as i64);
    let bound = n.clone() * n * pow(&delta, 2 * diameter) / m.clone();
    Ok(BigCutBound { big_edges, big_sellers, covered, delta, diameter, bound })
}

/// Outcome of checking one set of equilibrium utilities against every bound.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<S> {
    pub utilities: Vec<S>,
    pub path: PathBounds<S>,
    pub neighbor_violations: Vec<NeighborViolation<S>>,
    /// Sellers outside their path interval or below their chained lower bound.
    pub path_violations: Vec<usize>,
    /// One cut per component of sellers without captive demand.
    pub cuts: Vec<CutBound<S>>,
    pub cut_violations: Vec<usize>,
    /// A seller whose utility equals its captive market, if any.
    pub alpha_attained: Option<usize>,
}

impl<S: Scalar> BoundReport<S> {
    pub fn violation_count(&self) -> usize {
        self.neighbor_violations.len() + self.path_violations.len() + self.cut_violations.len()
    }

    pub fn is_clean(&self) -> bool {
        self.violation_count() == 0 && self.alpha_attained.is_some()
    }

    pub fn to_json(&self, net: &Network<S>) -> Value {
        let lbl = |i: usize| net.label(i).to_string();
        json!({
            "formatVersion": 1,
            "kind": "bounds",
            "delta": self.path.delta.to_json(),
            "diameter": self.path.diameter,
            "alphaMax": self.path.alpha_max.to_json(),
            "sellers": (0..net.len()).map(|i| json!({
                "id": lbl(i),
                "utility": self.utilities[i].to_json(),
                "lower": self.path.per_seller[i].0.to_json(),
                "upper": self.path.per_seller[i].1.to_json(),
                "chainLower": self.path.chain_lower[i].to_json(),
            })).collect::<Vec<_>>(),
            "neighborViolations": self.neighbor_violations.iter().map(|v| json!({
                "from": lbl(v.i), "to": lbl(v.j), "utility": v.u_j.to_json(), "required": v.required.to_json(),
            })).collect::<Vec<_>>(),
            "pathViolations": self.path_violations.iter().map(|&i| lbl(i)).collect::<Vec<_>>(),
            "cuts": self.cuts.iter().map(|c| json!({
                "members": c.members.iter().map(|&i| lbl(i)).collect::<Vec<_>>(),
                "epsilon": c.epsilon.to_json(),
                "deltaG": c.delta_g.to_json(),
                "diameterG": c.diameter_g,
                "bound": c.bound.to_json(),
            })).collect::<Vec<_>>(),
            "cutViolations": self.cut_violations.iter().map(|&i| lbl(i)).collect::<Vec<_>>(),
            "alphaAttainedBy": self.alpha_attained.map(lbl),
        })
    }

    pub fn table(&self, net: &Network<S>) -> String {
        let mut out = format!(
            "Delta = {}  D = {}  alpha_max = {}\n{:<10} {:>14} {:>14} {:>14}\n",
            self.path.delta.to_f64(),
            self.path.diameter,
            self.path.alpha_max.to_f64(),
            "seller",
            "lower",
            "utility",
            "upper"
        );
        for i in 0..net.len() {
            let (lo, hi) = &self.path.per_seller[i];
            let lo = max_of(lo.clone(), self.path.chain_lower[i].clone());
            out.push_str(&format!(
                "{:<10} {:>14.8} {:>14.8} {:>14.8}\n",
                net.label(i),
                lo.to_f64(),
                self.utilities[i].to_f64(),
                hi.to_f64()
            ));
        }
        for c in &self.cuts {
            let names: Vec<&str> = c.members.iter().map(|&i| net.label(i)).collect();
            out.push_str(&format!("cut {{{}}}: u <= {:.8}\n", names.join(","), c.bound.to_f64()));
        }
        out.push_str(&format!("violations: {}\n", self.violation_count()));
        out
    }
}

/// Groups the sellers without captive demand into connected components.
pub fn captive_free_components<S: Scalar>(net: &Network<S>) -> Vec<Vec<usize>> {
    let free: Vec<usize> = (0..net.len()).filter(|&i| net.alpha(i).is_zero()).collect();
    let mut seen = vec![false; net.len()];
    let mut out = Vec::new();
    for &s in &free {
        if seen[s] {
            continue;
        }
        let mut comp = vec![s];
        seen[s] = true;
        let mut k = 0;
        while k < comp.len() {
            let v = comp[k];
            for (w, _) in net.neighbors(v) {
                if !seen[*w] && net.alpha(*w).is_zero() {
                    seen[*w] = true;
                    comp.push(*w);
                }
            }
            k += 1;
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Runs the neighbor, path and cut checks on equilibrium utilities `u`. The cut check
/// uses each captive-free component (when some seller does have captive demand).
pub fn check_bounds<S: Scalar>(net: &Network<S>, u: &[S], tol: Tolerance) -> Result<BoundReport<S>, BoundsError> {
    let tol = if S::EXACT { Tolerance::exact() } else { tol };
    let neighbor_violations = neighbor_bound(net, u, tol)?;
    let path = path_bounds(net)?;
    let path_violations = (0..net.len())
        .filter(|&i| {
            let (lo, hi) = &path.per_seller[i];
            u[i].approx_lt(lo, tol) || hi.approx_lt(&u[i], tol) || u[i].approx_lt(&path.chain_lower[i], tol)
        })
        .collect();
    let cuts: Vec<CutBound<S>> = if net.alphas().iter().all(|a| a.is_zero()) {
        Vec::new()
    } else {
        captive_free_components(net).iter().map(|g| cut_bound(net, g)).collect::<Result<_, _>>()?
    };
    let mut cut_violations: Vec<usize> = cuts
        .iter()
        .flat_map(|c| c.members.iter().copied().filter(|&i| c.bound.approx_lt(&u[i], tol)).collect::<Vec<_>>())
        .collect();
    cut_violations.sort_unstable();
    let alpha_attained = (0..net.len()).find(|&i| u[i].approx_eq(net.alpha(i), tol));
    Ok(BoundReport {
        utilities: u.to_vec(),
        path,
        neighbor_violations,
        path_violations,
        cuts,
        cut_violations,
        alpha_attained,
    })
}
