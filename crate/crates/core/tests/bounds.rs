mod common;

use bertrand_core::boundary_search::{solve_free_boundaries, BoundarySolution, SearchOptions};
use bertrand_core::bounds::{big_cut_bound, check_bounds, cut_bound, neighbor_bound, path_bounds, BoundsError};
use bertrand_core::closed_form::{line3, solve_line, solve_star, solve_tree, two_seller};
use bertrand_core::{Network, Rational, Tolerance};
use common::{four_line, four_line_eq2, q};

fn exact() -> Tolerance {
    Tolerance::exact()
}

#[test]
fn neighbor_bound_examples() {
    let pair = Network::new(vec![q(1, 1), q(0, 1)], vec![(0, 1, q(1, 1))]).unwrap();
    assert!(neighbor_bound(&pair, &[q(1, 1), q(1, 2)], exact()).unwrap().is_empty());
    let bad = neighbor_bound(&pair, &[q(1, 1), q(2, 5)], exact()).unwrap();
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].required, q(1, 2));
    let line = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]).unwrap();
    assert!(neighbor_bound(&line, &[q(1, 1), q(2, 3), q(1, 3)], exact()).unwrap().is_empty());
    assert!(matches!(
        neighbor_bound(&line, &[q(1, 1)], exact()),
        Err(BoundsError::UtilityCount { expected: 3, got: 1 })
    ));
}

#[test]
fn path_bounds_examples() {
    let line = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]).unwrap();
    let p = path_bounds(&line).unwrap();
    assert_eq!((p.delta.clone(), p.diameter), (q(2, 1), 2));
    assert!(p.per_seller.iter().all(|b| *b == (q(1, 4), q(4, 1))));

    // weights 1, C, C^2 along the line
    let c = q(10, 1);
    let s = line3(q(1, 1), c.clone(), c.clone() * c.clone()).unwrap();
    let net = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![c.clone(), c.clone() * c]).unwrap();
    let p = path_bounds(&net).unwrap();
    assert_eq!(p.delta, q(11, 1));
    let (lo, hi) = &p.per_seller[1];
    assert!(*lo <= s.utilities[1] && s.utilities[1] <= *hi);
}

#[test]
fn cut_bound_examples() {
    let line = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]).unwrap();
    let c = cut_bound(&line, &[1, 2]).unwrap();
    assert_eq!((c.epsilon, c.delta_g, c.diameter_g, c.bound.clone()), (q(1, 1), q(2, 1), 1, q(2, 1)));
    assert!(q(2, 3) <= c.bound && q(1, 3) <= c.bound);

    let thin = q(1, 1000);
    let s = line3(q(1, 1), thin.clone(), q(1, 1)).unwrap();
    let net = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![thin.clone(), q(1, 1)]).unwrap();
    let c = cut_bound(&net, &[1, 2]).unwrap();
    assert_eq!(c.epsilon, thin);
    assert!(c.bound <= q(2, 1000) * c.delta_g.clone());
    assert!(s.utilities[1] <= c.bound && s.utilities[2] <= c.bound);

    let dry = Network::line(vec![q(0, 1); 3], vec![q(1, 1), q(1, 1)]).unwrap();
    assert_eq!(cut_bound(&dry, &[0, 1, 2]).unwrap().bound, q(0, 1));
}

#[test]
fn cut_bound_shrinks_with_boundary_markets() {
    let mut last: Option<Rational> = None;
    for d in [1, 2, 4, 8, 16] {
        let net = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![q(1, d), q(1, 1)]).unwrap();
        let b = cut_bound(&net, &[1, 2]).unwrap().bound;
        if let Some(prev) = last {
            assert!(b <= prev);
        }
        last = Some(b);
    }
}

fn big_line(m: Rational) -> Network<Rational> {
    Network::line(vec![q(1, 1), q(0, 1), q(0, 1), q(0, 1)], vec![q(1, 1), m, q(1, 1)]).unwrap()
}

#[test]
fn big_cut_examples() {
    let m = q(1_000_000, 1);
    let net = big_line(m.clone());
    let b = big_cut_bound(&net, &[2, 3], &m).unwrap();
    assert_eq!(b.bound, q(16, 1_000_000));
    let eq = solve_tree(&net).unwrap();
    assert!(eq.utilities[3] <= b.bound);

    let small = q(10, 1);
    let net = big_line(small.clone());
    let b = big_cut_bound(&net, &[2, 3], &small).unwrap();
    assert!(solve_tree(&net).unwrap().utilities[3] <= b.bound);

    // bound is homogeneous of degree -1 in M
    let b1 = big_cut_bound(&big_line(m.clone()), &[2, 3], &m).unwrap().bound;
    let m10 = m * q(10, 1);
    let b10 = big_cut_bound(&big_line(m10.clone()), &[2, 3], &m10).unwrap().bound;
    assert_eq!(b10 * q(10, 1), b1);

    let mixed = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![q(5, 1), q(100, 1)]).unwrap();
    assert!(matches!(big_cut_bound(&mixed, &[2], &q(100, 1)), Err(BoundsError::PreconditionViolated(_))));
}

#[test]
fn verified_equilibria_satisfy_all_bounds() {
    let mut cases: Vec<(Network<Rational>, Vec<Rational>)> = Vec::new();
    let pair = Network::new(vec![q(1, 1), q(0, 1)], vec![(0, 1, q(1, 1))]).unwrap();
    cases.push((pair, two_seller(q(1, 1), q(0, 1), q(1, 1)).unwrap().utilities));
    for n in 2..=8 {
        let mut alpha = vec![q(0, 1); n];
        alpha[0] = q(1, 1);
        let net = Network::line(alpha, vec![q(1, 1); n - 1]).unwrap();
        let u = solve_line(&net).unwrap().utilities;
        cases.push((net, u));
    }
    for (a0, per) in [(q(10, 1), vec![q(2, 1), q(1, 1)]), (q(1, 1), vec![q(5, 1), q(1, 2)])] {
        let net = Network::star(a0, per).unwrap();
        let u = solve_star(&net, None).unwrap().solution.utilities;
        cases.push((net, u));
    }
    let net = four_line();
    let BoundarySolution::Exact(ss) = solve_free_boundaries(&net, &four_line_eq2(), &SearchOptions::default()).unwrap().solution
    else {
        panic!("expected exact")
    };
    cases.push((net, ss.utilities));
    cases.push((Network::clique(vec![q(2, 1), q(3, 1), q(4, 1)]).unwrap(), vec![q(8, 3), q(10, 3), q(4, 1)]));
    for (net, u) in cases {
        let rep = check_bounds(&net, &u, exact()).unwrap();
        assert!(rep.is_clean(), "{}", rep.table(&net));
    }
}
