//! Discretized fictitious play: sellers take turns best-responding on a price grid
//! against the empirical mixtures of their neighbors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::network::Network;
use crate::numerics::Scalar;
use crate::strategy::{CdfMode, StrategyProfile};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FpError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("profile has {got} sellers, histogram has {expected}")]
    SellerCount { expected: usize, got: usize },
}

/// How a shared market splits when both sellers post the same grid price.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TieRule {
    #[default]
    SplitEqually,
    LowerIndexWins,
    /// Each market draws its split uniformly from [0, 1] once, from the run's seed.
    RandomUniform,
}

impl std::str::FromStr for TieRule {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self, FpError> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "split" | "splitequally" => Ok(TieRule::SplitEqually),
            "lower" | "lowerindexwins" => Ok(TieRule::LowerIndexWins),
            "random" | "randomuniform" => Ok(TieRule::RandomUniform),
            _ => Err(FpError::InvalidConfig(format!("unknown tie rule {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FpConfig {
    pub grid_size: usize,
    pub iterations: usize,
    pub tie_rule: TieRule,
    pub seed: u64,
    /// Fraction of the leading iterations left out of the reported histogram.
    pub burn_in: f64,
}

impl Default for FpConfig {
    fn default() -> Self {
        FpConfig { grid_size: 1000, iterations: 100_000, tie_rule: TieRule::SplitEqually, seed: 0, burn_in: 0.1 }
    }
}

impl FpConfig {
    fn validate(&self) -> Result<(), FpError> {
        if self.grid_size < 2 {
            return Err(FpError::InvalidConfig("grid size must be at least 2".into()));
        }
        if self.iterations < 1 {
            return Err(FpError::InvalidConfig("at least one iteration is required".into()));
        }
        if !(0.0..1.0).contains(&self.burn_in) {
            return Err(FpError::InvalidConfig("burn-in fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Lower end of the grid: the smallest `alpha_i / (alpha_i + beta_i)` if positive, else `1/m`.
pub fn grid_floor<S: Scalar>(net: &Network<S>, m: usize) -> f64 {
    let lo = (0..net.len())
        .map(|i| {
            let a = net.alpha(i).to_f64();
            let total = a + net.incident_total(i).to_f64();
            if total > 0.0 {
                a / total
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min);
    if lo.is_finite() && lo > 0.0 {
        lo
    } else {
        1.0 / m as f64
    }
}

/// `m` evenly spaced prices from `lo` to 1.
pub fn price_grid(lo: f64, m: usize) -> Vec<f64> {
    let step = (1.0 - lo) / (m - 1) as f64;
    (0..m).map(|k| if k + 1 == m { 1.0 } else { lo + step * k as f64 }).collect()
}

/// `share[i][pos]` is seller i's fraction of the market with its `pos`-th neighbor on a tie.
#[derive(Debug, Clone, PartialEq)]
pub struct TieShares {
    share: Vec<Vec<f64>>,
}

impl TieShares {
    pub fn new<S: Scalar>(net: &Network<S>, rule: TieRule, rng: &mut ChaCha8Rng) -> Self {
        let n = net.len();
        let mut share: Vec<Vec<f64>> = (0..n).map(|i| vec![0.5; net.degree(i)]).collect();
        for m in net.markets() {
            let (a, b) = (m.a.min(m.b), m.a.max(m.b));
            let fa = match rule {
                TieRule::SplitEqually => 0.5,
                TieRule::LowerIndexWins => 1.0,
                TieRule::RandomUniform => rng.gen::<f64>(),
            };
            let pa = net.neighbors(a).iter().position(|(k, _)| *k == b).expect("edge present");
            let pb = net.neighbors(b).iter().position(|(k, _)| *k == a).expect("edge present");
            share[a][pa] = fa;
            share[b][pb] = 1.0 - fa;
        }
        TieShares { share }
    }

    pub fn get(&self, i: usize, pos: usize) -> f64 {
        self.share[i][pos]
    }
}

/// Expected payoff of seller `i` at every grid price against the neighbors' mixtures
/// (`mix[j][k]` = probability that j plays grid price k).
pub fn payoffs(net: &Network<f64>, grid: &[f64], mix: &[Vec<f64>], ties: &TieShares, i: usize) -> Vec<f64> {
    let m = grid.len();
    let mut demand = vec![*net.alpha(i); m];
    for (pos, (j, beta)) in net.neighbors(i).iter().enumerate() {
        let f = ties.get(i, pos);
        let pj = &mix[*j];
        let mut above = 0.0;
        for k in (0..m).rev() {
            demand[k] += beta * (above + f * pj[k]);
            above += pj[k];
        }
    }
    grid.iter().zip(demand).map(|(x, d)| x * d).collect()
}

/// Payoffs this close (relative) count as equal when picking a best response.
pub const PAYOFF_TIE: f64 = 1e-12;

/// Grid index maximizing seller `i`'s payoff; the lowest price among (near-)ties.
pub fn best_response(net: &Network<f64>, grid: &[f64], mix: &[Vec<f64>], ties: &TieShares, i: usize) -> (usize, f64) {
    let pay = payoffs(net, grid, mix, ties, i);
    let top = pay.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = top - PAYOFF_TIE * top.abs().max(f64::MIN_POSITIVE);
    let k = pay.iter().position(|v| *v >= cut).expect("non-empty grid");
    (k, pay[k])
}

/// Per seller, the share of reported rounds spent at each grid price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalProfile {
    pub labels: Vec<String>,
    pub grid: Vec<f64>,
    pub mass: Vec<Vec<f64>>,
}

impl EmpiricalProfile {
    pub fn sellers(&self) -> usize {
        self.mass.len()
    }

    /// Empirical `Pr[p_i <= grid[k]]` for every k.
    pub fn cdf(&self, i: usize) -> Vec<f64> {
        let mut acc = 0.0;
        self.mass[i]
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// Mass seller `i` places outside the union of closed intervals.
    pub fn mass_outside(&self, i: usize, intervals: &[(f64, f64)]) -> f64 {
        self.grid
            .iter()
            .zip(&self.mass[i])
            .filter(|(x, _)| !intervals.iter().any(|(lo, hi)| *lo <= **x && **x <= *hi))
            .map(|(_, p)| p)
            .sum()
    }

    /// `seller,gridPrice,mass` rows, sorted by seller then price.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("seller,gridPrice,mass\n");
        for (i, row) in self.mass.iter().enumerate() {
            for (x, p) in self.grid.iter().zip(row) {
                out.push_str(&format!("{},{},{}\n", self.labels[i], x, p));
            }
        }
        out
    }
}

pub fn run_fictitious_play<S: Scalar>(net: &Network<S>, cfg: &FpConfig) -> Result<EmpiricalProfile, FpError> {
    cfg.validate()?;
    let net = net.map(|v| v.to_f64());
    let n = net.len();
    let grid = price_grid(grid_floor(&net, cfg.grid_size), cfg.grid_size);
    let m = grid.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ties = TieShares::new(&net, cfg.tie_rule, &mut rng);

    // one random opening price per seller seeds the history
    let mut counts = vec![vec![0u64; m]; n];
    let mut plays = vec![1u64; n];
    for row in counts.iter_mut() {
        row[rng.gen_range(0..m)] += 1;
    }
    let mut reported = vec![vec![0u64; m]; n];
    let burn = (cfg.burn_in * cfg.iterations as f64).floor() as usize;
    let mut mix = vec![vec![0.0; m]; n];
    for round in 0..cfg.iterations {
        let i = round % n;
        for (j, _) in net.neighbors(i) {
            let total = plays[*j] as f64;
            for (dst, c) in mix[*j].iter_mut().zip(&counts[*j]) {
                *dst = *c as f64 / total;
            }
        }
        let (k, _) = best_response(&net, &grid, &mix, &ties, i);
        counts[i][k] += 1;
        plays[i] += 1;
        if round >= burn {
            reported[i][k] += 1;
        }
    }
    let mass = reported
        .into_iter()
        .zip(&counts)
        .map(|(row, all)| {
            // a seller that never moved after burn-in reports its whole history
            let row = if row.iter().all(|c| *c == 0) { all.clone() } else { row };
            let total: u64 = row.iter().sum();
            row.into_iter().map(|c| c as f64 / total as f64).collect()
        })
        .collect();
    Ok(EmpiricalProfile { labels: net.labels().to_vec(), grid, mass })
}

/// Independent runs, one per configuration, in parallel.
pub fn run_many<S: Scalar + Sync>(net: &Network<S>, cfgs: &[FpConfig]) -> Vec<Result<EmpiricalProfile, FpError>> {
    cfgs.par_iter().map(|c| run_fictitious_play(net, c)).collect()
}

/// Per seller, the largest gap between the empirical and analytic CDFs over the grid.
pub fn kolmogorov_distance<S: Scalar>(emp: &EmpiricalProfile, analytic: &StrategyProfile<S>) -> Result<Vec<f64>, FpError> {
    if analytic.len() != emp.sellers() {
        return Err(FpError::SellerCount { expected: emp.sellers(), got: analytic.len() });
    }
    let analytic = analytic.to_f64();
    Ok((0..emp.sellers())
        .map(|i| {
            let cdf = &analytic.cdfs[i];
            emp.cdf(i)
                .iter()
                .zip(&emp.grid)
                .map(|(fe, x)| (fe - cdf.eval(x, CdfMode::F)).abs())
                .fold(0.0, f64::max)
        })
        .collect())
}
