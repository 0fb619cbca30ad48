//! Equilibrium verification by exhaustive breakpoint evaluation.
//!
//! Between consecutive breakpoints every tail is `a + b/x`, so each seller's revenue is
//! affine in `x` there and its supremum over (0, 1] is attained at a breakpoint.

use serde_json::{json, Value};
use thiserror::Error;

use crate::network::{validate_network, Network, NetworkError, Triviality};
use crate::numerics::{max_of, Scalar, Tolerance};
use crate::strategy::{breakpoints, utility, StrategyError, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    InvalidCdf(#[from] StrategyError),
    #[error(transparent)]
    Network(#[from] NetworkError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Equilibrium,
    NotEquilibrium,
    /// Float mode only: largest gain within ten times the tolerance.
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Equilibrium => "equilibrium",
            Verdict::NotEquilibrium => "not-equilibrium",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Structural necessary conditions that a profile violates.
#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    AtomBelowOne { seller: usize, price: f64 },
    SharedAtom { a: usize, b: usize },
    /// Prices in `(lo, hi)` inside the support hull are played by nobody.
    SupportUnion { lo: f64, hi: f64 },
    InfimumNotPositive { seller: usize },
    /// The seller's lowest price falls short of its captive fallback `alpha_i / 1` allows.
    CaptiveFloor { seller: usize },
    /// The highest price of the seller is not shared by a neighbor or equal to 1.
    LocalSupremum { seller: usize, price: f64 },
}

impl Finding {
    pub fn kind(&self) -> &'static str {
        match self {
            Finding::AtomBelowOne { .. } => "atom-below-one",
            Finding::SharedAtom { .. } => "shared-atom",
            Finding::SupportUnion { .. } => "support-union",
            Finding::InfimumNotPositive { .. } => "infimum-not-positive",
            Finding::CaptiveFloor { .. } => "captive-floor",
            Finding::LocalSupremum { .. } => "local-supremum",
        }
    }

    fn to_json<S: Scalar>(&self, net: &Network<S>) -> Value {
        let l = |i: usize| net.label(i).to_string();
        match self {
            Finding::AtomBelowOne { seller, price } => json!({"kind": self.kind(), "seller": l(*seller), "price": price}),
            Finding::SharedAtom { a, b } => json!({"kind": self.kind(), "sellers": [l(*a), l(*b)]}),
            Finding::SupportUnion { lo, hi } => json!({"kind": self.kind(), "lo": lo, "hi": hi}),
            Finding::InfimumNotPositive { seller } | Finding::CaptiveFloor { seller } => {
                json!({"kind": self.kind(), "seller": l(*seller)})
            }
            Finding::LocalSupremum { seller, price } => json!({"kind": self.kind(), "seller": l(*seller), "price": price}),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SellerDiagnostics<S> {
    /// Smallest revenue over the seller's own support points.
    pub utility: S,
    /// Largest revenue over all breakpoints and where it is attained.
    pub best_value: S,
    pub best_price: S,
    /// `best_value - utility`, never negative.
    pub gain: S,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport<S> {
    pub verdict: Verdict,
    pub sellers: Vec<SellerDiagnostics<S>>,
    pub findings: Vec<Finding>,
    pub max_violation: S,
    pub worst_seller: Option<usize>,
    pub tolerance: f64,
}

impl<S: Scalar> VerificationReport<S> {
    pub fn utilities(&self) -> Vec<S> {
        self.sellers.iter().map(|d| d.utility.clone()).collect()
    }

    pub fn to_json(&self, net: &Network<S>) -> Value {
        let sellers: Vec<Value> = self
            .sellers
            .iter()
            .enumerate()
            .map(|(i, d)| {
                json!({
                    "id": net.label(i),
                    "utility": d.utility.to_json(),
                    "bestPrice": d.best_price.to_json(),
                    "bestValue": d.best_value.to_json(),
                    "gain": d.gain.to_json(),
                })
            })
            .collect();
        json!({
            "formatVersion": 1,
            "kind": "verification",
            "exact": S::EXACT,
            "tolerance": self.tolerance,
            "verdict": self.verdict.as_str(),
            "maxViolation": self.max_violation.to_json(),
            "worstSeller": self.worst_seller.map(|i| net.label(i).to_string()),
            "findings": self.findings.iter().map(|f| f.to_json(net)).collect::<Vec<_>>(),
            "sellers": sellers,
        })
    }

    /// Plain-text table, one row per seller.
    pub fn table(&self, net: &Network<S>) -> String {
        let mut out = format!("verdict: {}\n", self.verdict.as_str());
        out.push_str(&format!("{:<10} {:>14} {:>14} {:>14}\n", "seller", "utility", "best-price", "gain"));
        for (i, d) in self.sellers.iter().enumerate() {
            out.push_str(&format!(
                "{:<10} {:>14} {:>14} {:>14}\n",
                net.label(i),
                fmt_scalar(&d.utility),
                fmt_scalar(&d.best_price),
                fmt_scalar(&d.gain)
            ));
        }
        for f in &self.findings {
            out.push_str(&format!("finding: {}\n", f.to_json(net)));
        }
        out
    }
}

fn fmt_scalar<S: Scalar>(v: &S) -> String {
    if S::EXACT {
        v.to_string()
    } else {
        format!("{:.9}", v.to_f64())
    }
}

fn structural_findings<S: Scalar>(
    net: &Network<S>,
    profile: &StrategyProfile<S>,
    triviality: Triviality,
    tol: Tolerance,
) -> Vec<Finding> {
    let mut out = Vec::new();
    for (i, c) in profile.cdfs.iter().enumerate() {
        if c.atom_zero().is_positive_tol(tol) && triviality != Triviality::NoCaptive {
            out.push(Finding::AtomBelowOne { seller: i, price: 0.0 });
        }
    }
    for m in net.markets() {
        if profile.cdfs[m.a].atom_one().is_positive_tol(tol) && profile.cdfs[m.b].atom_one().is_positive_tol(tol) {
            out.push(Finding::SharedAtom { a: m.a, b: m.b });
        }
    }
    if triviality != Triviality::NonTrivial {
        return out;
    }
    // union of supports must be an interval ending at 1
    let mut ivs: Vec<(S, S)> = Vec::new();
    for c in &profile.cdfs {
        ivs.extend(c.support_intervals(tol));
        if c.atom_one().is_positive_tol(tol) {
            ivs.push((S::one(), S::one()));
        }
    }
    ivs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut reach: Option<S> = None;
    for (lo, hi) in &ivs {
        if let Some(r) = &reach {
            if r.approx_lt(lo, tol) {
                out.push(Finding::SupportUnion { lo: r.to_f64(), hi: lo.to_f64() });
            }
        }
        reach = Some(match reach {
            Some(r) => max_of(r, hi.clone()),
            None => hi.clone(),
        });
    }
    if let Some(r) = reach {
        if r.approx_lt(&S::one(), tol) {
            out.push(Finding::SupportUnion { lo: r.to_f64(), hi: 1.0 });
        }
    }
    for (i, c) in profile.cdfs.iter().enumerate() {
        match c.support_min(tol) {
            Some(lo) if lo.is_positive_tol(tol) => {
                // pricing at 1 guarantees alpha_i, so no support price may earn less than
                // that even when winning every shared market
                let best_case = lo.clone() * (net.alpha(i).clone() + net.incident_total(i));
                if best_case.approx_lt(net.alpha(i), tol) {
                    out.push(Finding::CaptiveFloor { seller: i });
                }
            }
            _ => out.push(Finding::InfimumNotPositive { seller: i }),
        }
        // a seller's top price below 1 must be matched by some neighbor still mixing there
        let top = c.support_intervals(tol).last().map(|s| s.1.clone());
        if let (Some(top), false) = (top, c.atom_one().is_positive_tol(tol)) {
            if top.approx_lt(&S::one(), tol) {
                let shared = net.neighbors(i).iter().any(|(j, _)| {
                    let cj = &profile.cdfs[*j];
                    cj.atom_one().is_positive_tol(tol)
                        || cj.support_intervals(tol).iter().any(|(lo, hi)| lo.approx_lt(&top, tol) && top.approx_le(hi, tol))
                        || cj.support_intervals(tol).iter().any(|(lo, _)| top.approx_le(lo, tol))
                });
                if !shared {
                    out.push(Finding::LocalSupremum { seller: i, price: top.to_f64() });
                }
            }
        }
    }
    out
}

/// Checks every seller against every unilateral deviation. With exact scalars the
/// verdict is exact; with floats, gains up to `tol` count as zero.
pub fn verify_profile<S: Scalar>(
    net: &Network<S>,
    profile: &StrategyProfile<S>,
    tol: Tolerance,
) -> Result<VerificationReport<S>, VerifyError> {
    profile.check_against(net)?;
    let tol = if S::EXACT { Tolerance::exact() } else { tol };
    let triviality = validate_network(net)?;
    let findings = structural_findings(net, profile, triviality, tol);
    let pts = breakpoints(profile);
    let mut sellers = Vec::with_capacity(net.len());
    let mut max_violation = S::zero();
    let mut worst_seller = None;
    for (i, cdf) in profile.cdfs.iter().enumerate() {
        let values: Vec<S> = pts.iter().map(|p| utility(net, profile, i, p)).collect();
        let support = cdf.support_intervals(tol);
        let mut own: Option<S> = None;
        let mut take = |v: S| {
            own = Some(match own.take() {
                Some(o) if o <= v => o,
                _ => v,
            })
        };
        for (p, v) in pts.iter().zip(&values) {
            let inside = support.iter().any(|(lo, hi)| lo.approx_le(p, tol) && p.approx_le(hi, tol));
            let at_one = *p == S::one() && cdf.atom_one().is_positive_tol(tol);
            if inside || at_one {
                take(v.clone());
            }
        }
        if cdf.atom_zero().is_positive_tol(tol) {
            take(S::zero());
        }
        let mut best_value = S::zero();
        let mut best_price = S::zero();
        for (p, v) in pts.iter().zip(&values) {
            if *v > best_value {
                best_value = v.clone();
                best_price = p.clone();
            }
        }
        let utility_i = own.unwrap_or_else(S::zero);
        let gain = max_of(best_value.clone() - utility_i.clone(), S::zero());
        if gain > max_violation {
            max_violation = gain.clone();
            worst_seller = Some(i);
        }
        sellers.push(SellerDiagnostics { utility: utility_i, best_value, best_price, gain });
    }
    let verdict = if !findings.is_empty() {
        Verdict::NotEquilibrium
    } else if S::EXACT {
        if max_violation.is_zero() {
            Verdict::Equilibrium
        } else {
            Verdict::NotEquilibrium
        }
    } else {
        let g = max_violation.to_f64();
        if g <= tol.abs {
            Verdict::Equilibrium
        } else if g <= 10.0 * tol.abs {
            Verdict::Inconclusive
        } else {
            Verdict::NotEquilibrium
        }
    };
    Ok(VerificationReport { verdict, sellers, findings, max_violation, worst_seller, tolerance: tol.abs })
}
