//! Seller networks: captive market sizes on vertices, shared market sizes on edges.

use std::collections::{BTreeMap, VecDeque};

use serde_json::{json, Value};
use thiserror::Error;

use crate::numerics::{NumericsError, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetworkError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("network is disconnected")]
    Disconnected,
    #[error("edge ({0}, {1}) is not a market of this network")]
    UnknownEdge(usize, usize),
    #[error("unknown seller id {0:?}")]
    UnknownSeller(String),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Classification of a network for which equilibria are trivial or well-defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Triviality {
    NonTrivial,
    /// Every captive market is empty; pricing at 0 is the unique equilibrium.
    NoCaptive,
    Disconnected,
    SingleSeller,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Market<S> {
    pub a: usize,
    pub b: usize,
    pub beta: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network<S> {
    labels: Vec<String>,
    alpha: Vec<S>,
    markets: Vec<Market<S>>,
    adjacency: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> Network<S> {
    /// Builds a network with default labels `s1..sn`.
    pub fn new(alpha: Vec<S>, markets: Vec<(usize, usize, S)>) -> Result<Self, NetworkError> {
        let labels = (1..=alpha.len()).map(|i| format!("s{i}")).collect();
        Self::with_labels(labels, alpha, markets)
    }

    pub fn with_labels(
        labels: Vec<String>,
        alpha: Vec<S>,
        markets: Vec<(usize, usize, S)>,
    ) -> Result<Self, NetworkError> {
        let n = alpha.len();
        if n == 0 {
            return Err(NetworkError::MalformedInput("no sellers".into()));
        }
        if labels.len() != n {
            return Err(NetworkError::MalformedInput("label count mismatch".into()));
        }
        let mut seen_labels = std::collections::BTreeSet::new();
        for l in &labels {
            if !seen_labels.insert(l) {
                return Err(NetworkError::MalformedInput(format!("duplicate seller id {l:?}")));
            }
        }
        for (i, a) in alpha.iter().enumerate() {
            if *a < S::zero() {
                return Err(NetworkError::MalformedInput(format!(
                    "negative captive size for seller {}",
                    labels[i]
                )));
            }
        }
        let mut adjacency: Vec<Vec<(usize, S)>> = vec![Vec::new(); n];
        let mut out = Vec::with_capacity(markets.len());
        let mut seen = std::collections::BTreeSet::new();
        for (a, b, beta) in markets {
            if a >= n || b >= n {
                return Err(NetworkError::MalformedInput(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(NetworkError::MalformedInput(format!("self-loop at seller {a}")));
            }
            if beta <= S::zero() {
                return Err(NetworkError::MalformedInput(format!(
                    "shared market ({a}, {b}) must have positive size"
                )));
            }
            let (lo, hi) = (a.min(b), a.max(b));
            if !seen.insert((lo, hi)) {
                return Err(NetworkError::MalformedInput(format!("duplicate edge ({lo}, {hi})")));
            }
            adjacency[lo].push((hi, beta.clone()));
            adjacency[hi].push((lo, beta.clone()));
            out.push(Market { a: lo, b: hi, beta });
        }
        for adj in &mut adjacency {
            adj.sort_by_key(|(j, _)| *j);
        }
        out.sort_by_key(|m| (m.a, m.b));
        Ok(Network { labels, alpha, markets: out, adjacency })
    }

    /// Path `0 - 1 - ... - n-1` with `betas[k]` on edge `(k, k+1)`.
    pub fn line(alpha: Vec<S>, betas: Vec<S>) -> Result<Self, NetworkError> {
        if betas.len() + 1 != alpha.len() {
            return Err(NetworkError::MalformedInput("line needs n-1 edge sizes".into()));
        }
        let markets = betas.into_iter().enumerate().map(|(k, b)| (k, k + 1, b)).collect();
        Self::new(alpha, markets)
    }

    /// Cycle with `betas[k]` on edge `(k, k+1 mod n)`.
    pub fn cycle(alpha: Vec<S>, betas: Vec<S>) -> Result<Self, NetworkError> {
        let n = alpha.len();
        if betas.len() != n || n < 3 {
            return Err(NetworkError::MalformedInput("cycle needs n >= 3 and n edge sizes".into()));
        }
        let markets = betas.into_iter().enumerate().map(|(k, b)| (k, (k + 1) % n, b)).collect();
        Self::new(alpha, markets)
    }

    /// Star with center 0 and unit spokes to sellers `1..=peripheral.len()`.
    pub fn star(center_alpha: S, peripheral: Vec<S>) -> Result<Self, NetworkError> {
        let m = peripheral.len();
        let mut alpha = vec![center_alpha];
        alpha.extend(peripheral);
        let markets = (1..=m).map(|i| (0, i, S::one())).collect();
        Self::new(alpha, markets)
    }

    /// Complete graph with unit shared markets.
    pub fn clique(alpha: Vec<S>) -> Result<Self, NetworkError> {
        let n = alpha.len();
        let mut markets = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                markets.push((i, j, S::one()));
            }
        }
        Self::new(alpha, markets)
    }

    pub fn len(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize, NetworkError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| NetworkError::UnknownSeller(label.to_string()))
    }

    pub fn alpha(&self, i: usize) -> &S {
        &self.alpha[i]
    }

    pub fn alphas(&self) -> &[S] {
        &self.alpha
    }

    pub fn markets(&self) -> &[Market<S>] {
        &self.markets
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, S)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn beta(&self, i: usize, j: usize) -> Option<&S> {
        self.adjacency
            .get(i)?
            .binary_search_by_key(&j, |(k, _)| *k)
            .ok()
            .map(|pos| &self.adjacency[i][pos].1)
    }

    /// Total shared demand incident to seller `i`.
    pub fn incident_total(&self, i: usize) -> S {
        self.adjacency[i].iter().fold(S::zero(), |acc, (_, b)| acc + b.clone())
    }

    /// Converts every size with `f`, keeping labels and topology.
    pub fn map<T: Scalar>(&self, f: impl Fn(&S) -> T) -> Network<T> {
        let markets = self.markets.iter().map(|m| (m.a, m.b, f(&m.beta))).collect();
        Network::with_labels(self.labels.clone(), self.alpha.iter().map(&f).collect(), markets)
            .expect("mapping preserves validity")
    }

    /// Same topology with seller `i` renamed to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, NetworkError> {
        let n = self.len();
        if perm.len() != n {
            return Err(NetworkError::MalformedInput("permutation length mismatch".into()));
        }
        let mut labels = vec![String::new(); n];
        let mut alpha = vec![S::zero(); n];
        for i in 0..n {
            labels[perm[i]] = self.labels[i].clone();
            alpha[perm[i]] = self.alpha[i].clone();
        }
        let markets = self.markets.iter().map(|m| (perm[m.a], perm[m.b], m.beta.clone())).collect();
        Self::with_labels(labels, alpha, markets)
    }

    pub fn is_connected(&self) -> bool {
        bfs(self, 0, &[]).iter().all(|d| d.is_some())
    }

    pub fn is_tree(&self) -> bool {
        self.markets.len() + 1 == self.len() && self.is_connected()
    }

    pub fn from_json_value(v: &Value) -> Result<Self, NetworkError> {
        let bad = |m: &str| NetworkError::MalformedInput(m.to_string());
        check_format_version(v).map_err(|m| bad(&m))?;
        let sellers = v.get("sellers").and_then(Value::as_array).ok_or_else(|| bad("missing sellers"))?;
        let mut labels = Vec::new();
        let mut alpha = Vec::new();
        for (k, s) in sellers.iter().enumerate() {
            let id = match s.get("id") {
                Some(Value::String(s)) => s.clone(),
                Some(Value::Number(n)) => n.to_string(),
                None => format!("s{}", k + 1),
                _ => return Err(bad("seller id must be a string")),
            };
            // several captive markets of one seller merge into their sum
            let a = match s.get("alpha") {
                Some(Value::Array(parts)) => {
                    let mut total = S::zero();
                    for p in parts {
                        total = total + S::from_json(p)?;
                    }
                    total
                }
                Some(x) => S::from_json(x)?,
                None => S::zero(),
            };
            labels.push(id);
            alpha.push(a);
        }
        let mut markets = Vec::new();
        if let Some(ms) = v.get("markets") {
            let ms = ms.as_array().ok_or_else(|| bad("markets must be an array"))?;
            for m in ms {
                let ep = |key: &str| -> Result<usize, NetworkError> {
                    let raw = m.get(key).ok_or_else(|| bad("market endpoint missing"))?;
                    let label = match raw {
                        Value::String(s) => s.clone(),
                        Value::Number(n) => n.to_string(),
                        _ => return Err(bad("market endpoint must be a seller id")),
                    };
                    labels
                        .iter()
                        .position(|l| *l == label)
                        .ok_or(NetworkError::UnknownSeller(label))
                };
                let beta = S::from_json(m.get("beta").ok_or_else(|| bad("market size missing"))?)?;
                markets.push((ep("a")?, ep("b")?, beta));
            }
        }
        Self::with_labels(labels, alpha, markets)
    }

    pub fn from_json_str(s: &str) -> Result<Self, NetworkError> {
        let v: Value = serde_json::from_str(s).map_err(|e| NetworkError::MalformedInput(e.to_string()))?;
        Self::from_json_value(&v)
    }

    pub fn to_json_value(&self) -> Value {
        let sellers: Vec<Value> = (0..self.len())
            .map(|i| json!({"id": self.labels[i], "alpha": self.alpha[i].to_json()}))
            .collect();
        let markets: Vec<Value> = self
            .markets
            .iter()
            .map(|m| json!({"a": self.labels[m.a], "b": self.labels[m.b], "beta": m.beta.to_json()}))
            .collect();
        json!({"formatVersion": 1, "sellers": sellers, "markets": markets})
    }
}

pub(crate) fn check_format_version(v: &Value) -> Result<(), String> {
    match v.get("formatVersion") {
        None => Ok(()),
        Some(x) if x.as_u64() == Some(1) => Ok(()),
        Some(x) => Err(format!("unsupported formatVersion {x}")),
    }
}

fn bfs<S: Scalar>(net: &Network<S>, src: usize, cut: &[(usize, usize)]) -> Vec<Option<usize>> {
    let mut dist = vec![None; net.len()];
    dist[src] = Some(0);
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].unwrap_or(0);
        for (v, _) in net.neighbors(u) {
            let key = (u.min(*v), u.max(*v));
            if cut.contains(&key) || dist[*v].is_some() {
                continue;
            }
            dist[*v] = Some(du + 1);
            queue.push_back(*v);
        }
    }
    dist
}

/// Classifies the network. Structural problems surface as `MalformedInput`.
pub fn validate_network<S: Scalar>(net: &Network<S>) -> Result<Triviality, NetworkError> {
    if net.alphas().iter().any(|a| *a < S::zero()) {
        return Err(NetworkError::MalformedInput("negative captive size".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for m in net.markets() {
        if m.beta <= S::zero() {
            return Err(NetworkError::MalformedInput("non-positive shared market".into()));
        }
        if !seen.insert((m.a, m.b)) {
            return Err(NetworkError::MalformedInput("duplicate edge".into()));
        }
    }
    if net.len() == 1 {
        return Ok(Triviality::SingleSeller);
    }
    if !net.is_connected() {
        return Ok(Triviality::Disconnected);
    }
    if net.alphas().iter().all(|a| a.is_zero()) {
        return Ok(Triviality::NoCaptive);
    }
    Ok(Triviality::NonTrivial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphMetrics<S> {
    pub distances: Vec<Vec<usize>>,
    pub diameter: usize,
    /// Per seller: largest ratio of total demand to a single shared market.
    pub effective_degree: Vec<S>,
    pub max_effective_degree: S,
    pub alpha_max: S,
}

pub fn graph_metrics<S: Scalar>(net: &Network<S>) -> Result<GraphMetrics<S>, NetworkError> {
    let n = net.len();
    let mut distances = Vec::with_capacity(n);
    for i in 0..n {
        let d = bfs(net, i, &[]);
        let row: Option<Vec<usize>> = d.into_iter().collect();
        distances.push(row.ok_or(NetworkError::Disconnected)?);
    }
    let diameter = distances.iter().flatten().copied().max().unwrap_or(0);
    let effective_degree: Vec<S> = (0..n).map(|i| effective_degree(net, i)).collect();
    let max_effective_degree = effective_degree.iter().cloned().fold(S::one(), crate::numerics::max_of);
    let alpha_max = net.alphas().iter().cloned().fold(S::zero(), crate::numerics::max_of);
    Ok(GraphMetrics { distances, diameter, effective_degree, max_effective_degree, alpha_max })
}

/// `max_j (alpha_i + sum_k beta_ik) / beta_ij`; one for an isolated seller.
pub fn effective_degree<S: Scalar>(net: &Network<S>, i: usize) -> S {
    let total = net.alpha(i).clone() + net.incident_total(i);
    net.neighbors(i)
        .iter()
        .map(|(_, b)| total.clone() / b.clone())
        .fold(None, |acc: Option<S>, x| Some(match acc {
            Some(a) => crate::numerics::max_of(a, x),
            None => x,
        }))
        .unwrap_or_else(S::one)
}

/// True when removing `cut` leaves seller `i` in a component without captive demand.
pub fn edge_cut_separates<S: Scalar>(
    net: &Network<S>,
    cut: &[(usize, usize)],
    i: usize,
) -> Result<bool, NetworkError> {
    let mut keys = Vec::with_capacity(cut.len());
    for &(a, b) in cut {
        if net.beta(a, b).is_none() {
            return Err(NetworkError::UnknownEdge(a, b));
        }
        keys.push((a.min(b), a.max(b)));
    }
    if i >= net.len() {
        return Err(NetworkError::MalformedInput(format!("seller {i} out of range")));
    }
    let reach = bfs(net, i, &keys);
    Ok(reach
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some())
        .all(|(j, _)| net.alpha(j).is_zero()))
}

/// Connected components after deleting `cut`, each sorted, ordered by smallest member.
pub fn components_without<S: Scalar>(net: &Network<S>, cut: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let keys: Vec<(usize, usize)> = cut.iter().map(|&(a, b)| (a.min(b), a.max(b))).collect();
    let mut comp_of = vec![usize::MAX; net.len()];
    let mut comps = Vec::new();
    for s in 0..net.len() {
        if comp_of[s] != usize::MAX {
            continue;
        }
        let d = bfs(net, s, &keys);
        let members: Vec<usize> = (0..net.len()).filter(|&j| d[j].is_some()).collect();
        for &m in &members {
            comp_of[m] = comps.len();
        }
        comps.push(members);
    }
    comps
}

/// Degree histogram, handy for summaries.
pub fn degree_counts<S: Scalar>(net: &Network<S>) -> BTreeMap<usize, usize> {
    let mut h = BTreeMap::new();
    for i in 0..net.len() {
        *h.entry(net.degree(i)).or_insert(0) += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rational;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn classification() {
        let two = Network::new(vec![r(0), r(0)], vec![(0, 1, r(1))]).unwrap();
        assert_eq!(validate_network(&two).unwrap(), Triviality::NoCaptive);
        let one = Network::new(vec![r(1)], vec![]).unwrap();
        assert_eq!(validate_network(&one).unwrap(), Triviality::SingleSeller);
        let split = Network::new(vec![r(1), r(1)], vec![]).unwrap();
        assert_eq!(validate_network(&split).unwrap(), Triviality::Disconnected);
        let line = Network::line(vec![r(1), r(0), r(0)], vec![r(1), r(1)]).unwrap();
        assert_eq!(validate_network(&line).unwrap(), Triviality::NonTrivial);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Network::new(vec![r(-1), r(0)], vec![(0, 1, r(1))]).is_err());
        assert!(Network::new(vec![r(1), r(0)], vec![(0, 1, r(1)), (1, 0, r(2))]).is_err());
        assert!(Network::new(vec![r(1), r(0)], vec![(0, 1, r(0))]).is_err());
    }

    #[test]
    fn unit_line_metrics() {
        let line = Network::line(vec![r(1), r(0), r(0)], vec![r(1), r(1)]).unwrap();
        let m = graph_metrics(&line).unwrap();
        assert_eq!(m.diameter, 2);
        assert_eq!(m.effective_degree, vec![r(2), r(2), r(1)]);
        assert_eq!(m.max_effective_degree, r(2));
        assert!(edge_cut_separates(&line, &[(0, 1)], 2).unwrap());
        assert!(!edge_cut_separates(&line, &[(1, 2)], 1).unwrap());
        assert_eq!(edge_cut_separates(&line, &[(0, 2)], 1), Err(NetworkError::UnknownEdge(0, 2)));
    }

    #[test]
    fn json_round_trip_merges_captive_markets() {
        let text = r#"{"formatVersion":1,"sellers":[{"id":"a","alpha":["1/2","1/2"]},{"id":"b","alpha":0}],
                      "markets":[{"a":"a","b":"b","beta":"1"}]}"#;
        let net: Network<Rational> = Network::from_json_str(text).unwrap();
        assert_eq!(net.alpha(0), &r(1));
        let back: Network<Rational> = Network::from_json_value(&net.to_json_value()).unwrap();
        assert_eq!(back, net);
    }
}
