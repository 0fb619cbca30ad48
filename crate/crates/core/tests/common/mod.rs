#![allow(dead_code)]

pub mod props;

use bertrand_core::sketch::{sketch_solution_to_profile, SketchShape, SketchSolution};
use bertrand_core::strategy::utility;
use bertrand_core::{Network, Rational, StrategyProfile, Tolerance};

pub fn q(n: i64, d: i64) -> Rational {
    Rational::frac(n, d)
}

pub fn r(s: &str) -> Rational {
    s.parse().unwrap()
}

pub fn rs(v: &[&str]) -> Vec<Rational> {
    v.iter().map(|s| r(s)).collect()
}

/// Fibonacci-like numbers with N_1 = 1, N_2 = 2.
pub fn fib(k: usize) -> i64 {
    let (mut a, mut b) = (1i64, 2i64);
    for _ in 1..k {
        (a, b) = (b, a + b);
    }
    a
}

/// Largest gain over the profile utility any seller gets on a uniform grid of `points`
/// prices in (0, 1], evaluated in floating point.
pub fn brute_force_gain(net: &Network<f64>, profile: &StrategyProfile<f64>, utilities: &[f64], points: usize) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for (i, u) in utilities.iter().enumerate() {
        for k in 1..=points {
            let x = k as f64 / points as f64;
            worst = worst.max(utility(net, profile, i, &x) - u);
        }
    }
    worst
}

pub fn line_net(alpha: &[&str], beta: &[&str]) -> Network<Rational> {
    Network::line(rs(alpha), rs(beta)).unwrap()
}

pub fn four_line() -> Network<Rational> {
    line_net(&["6", "3", "7", "2"], &["1", "1", "1"])
}

/// Sketch of the 4-line equilibrium where the first seller always prices at 1.
pub fn four_line_eq1() -> SketchShape {
    SketchShape::from_index_ranges(3, &[vec![], vec![(1, 2)], vec![(1, 3)], vec![(2, 3)]], vec![true, false, true, false])
        .unwrap()
}

pub fn four_line_eq2() -> SketchShape {
    SketchShape::from_index_ranges(3, &[vec![(1, 2)], vec![(1, 2)], vec![(1, 3)], vec![(1, 3)]], vec![true, false, true, false])
        .unwrap()
}

pub fn cycle_net() -> Network<Rational> {
    Network::cycle(rs(&["0", "0", "10", "0", "0"]), rs(&["1", "0.5", "0.5", "1", "1"])).unwrap()
}

pub fn cycle_shape() -> SketchShape {
    SketchShape::from_index_ranges(
        5,
        &[vec![(2, 4)], vec![(1, 3)], vec![(1, 2)], vec![(4, 5), (1, 2)], vec![(3, 5)]],
        vec![false, false, true, false, false],
    )
    .unwrap()
}

pub fn six_line() -> Network<Rational> {
    line_net(&["10", "1", "1", "1", "1", "10"], &["0.5", "1", "1", "1", "0.5"])
}

pub fn six_line_shape() -> SketchShape {
    SketchShape::from_index_ranges(
        6,
        &[vec![(1, 3)], vec![(5, 6), (1, 3)], vec![(4, 6)], vec![(2, 5)], vec![(1, 4)], vec![(1, 2)]],
        vec![true, false, false, false, false, true],
    )
    .unwrap()
}

/// Reversing seller order on a line or cycle.
pub fn reversal(n: usize) -> Vec<usize> {
    (0..n).rev().collect()
}

pub fn float_profile(net: &Network<f64>, ss: &SketchSolution<f64>) -> StrategyProfile<f64> {
    sketch_solution_to_profile(ss, net.labels(), Tolerance::DEFAULT).unwrap()
}

pub fn assert_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len(), "{got:?} vs {want:?}");
    for (g, w) in got.iter().zip(want) {
        assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
    }
}

/// Independent star oracle: the tail recurrence of the center plus the utility recursion,
/// computed directly here. Returns `(case_one, b, utilities by rank, atom)`, where `atom`
/// is the center atom in case one and the atom of the first mixed peripheral otherwise.
pub fn star_oracle(a0: Rational, alpha: &[Rational]) -> (bool, Vec<Rational>, Vec<Rational>, Rational) {
    let n = alpha.len();
    let a = |i: usize| alpha[i - 1].clone(); // 1-based peripheral
    let idx = |i: usize| Rational::from_integer(i as i64);
    let mut tail = vec![q(0, 1); n + 1];
    tail[n] = q(1, 1);
    let mut first_negative = None;
    for i in (1..=n).rev() {
        tail[i - 1] = tail[i].clone() - (a(i) + tail[i].clone()) / (a0.clone() + idx(i));
        if tail[i - 1] < q(0, 1) {
            first_negative = Some(i - 1);
            break;
        }
    }
    let utilities_from = |u0: Rational, b: &[Rational], j: usize| {
        let mut u = vec![q(0, 1); n + 1];
        u[0] = u0.clone();
        u[n] = u0.clone() * (a(n) + q(1, 1)) / (a0.clone() + idx(n));
        for i in (j + 1..=n).rev() {
            u[i - 1] = u[i].clone() + b[i - 1].clone() * (a(i - 1) - a(i));
        }
        u
    };
    match first_negative {
        None => {
            let b: Vec<Rational> = (0..=n).map(|i| a0.clone() / (a0.clone() + idx(i))).collect();
            let u = utilities_from(a0.clone(), &b, 1);
            (true, b, u, tail[0].clone())
        }
        Some(neg) => {
            let j = neg + 1;
            // u_j is linear in u_0; evaluate at u_0 = 1 and rescale so that u_j = alpha_j
            let unit_b: Vec<Rational> = (0..=n).map(|i| q(1, 1) / (a0.clone() + idx(i))).collect();
            let uj_per_u0 = utilities_from(q(1, 1), &unit_b, j)[j].clone();
            let u0 = a(j) / uj_per_u0;
            let mut b: Vec<Rational> = unit_b.iter().map(|x| x.clone() * u0.clone()).collect();
            for v in b.iter_mut().take(j) {
                *v = q(1, 1);
            }
            let mut u = utilities_from(u0.clone(), &b, j);
            for (i, v) in u.iter_mut().enumerate().take(j).skip(1) {
                *v = a(i);
            }
            let atom = u0 - a0 - Rational::from_integer(j as i64 - 1);
            (false, b, u, atom)
        }
    }
}
