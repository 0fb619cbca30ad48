mod common;

use bertrand_core::boundary_search::{solve_free_boundaries, system_size, BoundarySolution, SearchError, SearchOptions};
use bertrand_core::sketch::{sketch_solution_to_profile, SketchSolution};
use bertrand_core::verifier::{verify_profile, Verdict, VerificationReport};
use bertrand_core::{Network, Rational, Tolerance};
use common::*;

fn candidate(net: &Network<Rational>, shape: &bertrand_core::sketch::SketchShape) -> SketchSolution<f64> {
    match solve_free_boundaries(net, shape, &SearchOptions::default()) {
        Err(SearchError::StrictViolated { candidate, .. }) => *candidate,
        Ok(rep) => rep.float_solution,
        Err(e) => panic!("search failed: {e}"),
    }
}

fn float_verdict(net: &Network<Rational>, ss: &SketchSolution<f64>) -> VerificationReport<f64> {
    let fnet = net.map(|x| x.to_f64());
    let profile = float_profile(&fnet, ss);
    verify_profile(&fnet, &profile, Tolerance::VERIFY).unwrap()
}

#[test]
fn four_line_shared_range_is_exact() {
    let net = four_line();
    let rep = solve_free_boundaries(&net, &four_line_eq2(), &SearchOptions::default()).unwrap();
    let BoundarySolution::Exact(ss) = &rep.solution else { panic!("expected an exact solution") };
    assert_eq!(ss.sketch.points, vec![q(1, 1), q(6, 7), q(7, 9)]);
    assert_eq!(ss.utilities, vec![q(6, 1), q(85, 21), q(7, 1), q(7, 3)]);
    assert_eq!((rep.equations, rep.unknowns), system_size(&net, &four_line_eq2()));
    let profile = sketch_solution_to_profile(ss, net.labels(), Tolerance::exact()).unwrap();
    let v = verify_profile(&net, &profile, Tolerance::exact()).unwrap();
    assert_eq!(v.verdict, Verdict::Equilibrium);
}

#[test]
fn four_line_first_sketch_points_snap_but_seller_one_deviates() {
    let net = four_line();
    let err = solve_free_boundaries(&net, &four_line_eq1(), &SearchOptions::default()).unwrap_err();
    let SearchError::StrictViolated { candidate, .. } = err else { panic!("unexpected {err:?}") };
    let pts = &candidate.sketch.points;
    let snapped: Vec<Rational> = pts.iter().map(|&x| Rational::approximate(x, 1000, 1e-9).unwrap()).collect();
    assert_eq!(snapped, vec![q(1, 1), q(7, 8), q(7, 9)]);
    // the first seller prices at 1 for 6 but would earn 49/8 at 7/8
    let v = float_verdict(&net, &candidate);
    assert_eq!(v.verdict, Verdict::NotEquilibrium);
    assert_eq!(v.worst_seller, Some(0));
    assert!((v.max_violation - 0.125).abs() < 1e-8);
    assert!((v.sellers[0].best_price - 0.875).abs() < 1e-8);
}

#[test]
fn cycle_candidate_matches_reference_values() {
    let net = cycle_net();
    let c = candidate(&net, &cycle_shape());
    assert_close(&c.sketch.points, &[1.0, 0.933163, 0.645242, 0.357321, 0.311054], 1e-4);
    assert!((c.utilities[0] - 0.645242).abs() < 1e-4);
    assert!((c.utilities[4] - 0.622108).abs() < 1e-4);
}

#[test]
fn cycle_candidate_is_not_an_equilibrium() {
    let net = cycle_net();
    let v = float_verdict(&net, &candidate(&net, &cycle_shape()));
    assert_eq!(v.verdict, Verdict::NotEquilibrium);
    // the second and fifth sellers both gain about 0.0694
    assert!((v.sellers[1].gain - 0.0694).abs() < 1e-3);
    assert!((v.sellers[4].gain - 0.0694).abs() < 1e-3);
    for i in [0, 2, 3] {
        assert!(v.sellers[i].gain < 1e-8);
    }
}

#[test]
fn cycle_reflection_swaps_utilities() {
    let net = cycle_net();
    let perm = reversal(5);
    assert_eq!(net.permuted(&perm).unwrap().alphas(), net.alphas());
    let a = candidate(&net, &cycle_shape());
    let b = candidate(&net, &cycle_shape().permuted(&perm));
    let mirrored: Vec<f64> = perm.iter().map(|&p| a.utilities[p]).collect();
    assert_close(&b.utilities, &mirrored, 1e-8);
    assert_close(&b.sketch.points, &a.sketch.points, 1e-8);
}

#[test]
fn six_line_candidate_matches_reference_values() {
    let net = six_line();
    let c = candidate(&net, &six_line_shape());
    assert_close(&c.sketch.points, &[1.0, 0.9607495, 0.9601969, 0.8728799, 0.6109288, 0.5761182], 1e-4);
    assert!((c.utilities[1] - 1.4403).abs() < 1e-4);
    assert!((c.utilities[4] - 1.44112).abs() < 1e-4);
}

#[test]
fn six_line_mirror_images() {
    let net = six_line();
    let perm = reversal(6);
    let a = candidate(&net, &six_line_shape());
    let b = candidate(&net, &six_line_shape().permuted(&perm));
    let mirrored: Vec<f64> = perm.iter().map(|&p| a.utilities[p]).collect();
    assert_close(&b.utilities, &mirrored, 1e-8);
    for c in [&a, &b] {
        let v = float_verdict(&net, c);
        assert_eq!(v.verdict, Verdict::NotEquilibrium);
    }
    // third seller gains about 0.0287, fifth about 0.0862
    let v = float_verdict(&net, &a);
    assert!((v.sellers[2].gain - 0.0287).abs() < 1e-3);
    assert!((v.sellers[4].gain - 0.0862).abs() < 1e-3);
}

#[test]
fn explicit_seed_converges_to_same_point() {
    let net = six_line();
    let opts = SearchOptions { seed: Some(vec![1.0, 0.96, 0.955, 0.87, 0.61, 0.58]), ..Default::default() };
    let Err(SearchError::StrictViolated { candidate: seeded, .. }) = solve_free_boundaries(&net, &six_line_shape(), &opts)
    else {
        panic!("expected the strict check to fail")
    };
    assert_close(&seeded.sketch.points, &candidate(&net, &six_line_shape()).sketch.points, 1e-8);
}

#[test]
fn rejects_malformed_seed() {
    let net = four_line();
    let opts = SearchOptions { seed: Some(vec![0.9, 0.8]), ..Default::default() };
    assert!(matches!(
        solve_free_boundaries(&net, &four_line_eq2(), &opts),
        Err(SearchError::BadSeed { expected: 3 })
    ));
}

#[test]
fn search_is_deterministic() {
    let net = cycle_net();
    let a = candidate(&net, &cycle_shape());
    let b = candidate(&net, &cycle_shape());
    assert_eq!(a.sketch.points, b.sketch.points);
}
