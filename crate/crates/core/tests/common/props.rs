//! Property checks shared by the proptest suites and the acceptance run. Each returns a
//! description of the first failure.

use bertrand_core::closed_form::{solve_star, solve_tree, tree_quantities, ClosedFormError, StarCase};
use bertrand_core::sketch::{sketch_solution_from_profile, sketch_solution_to_profile};
use bertrand_core::strategy::{breakpoints, utility, CdfMode};
use bertrand_core::verifier::{verify_profile, Verdict};
use bertrand_core::{Network, PiecewiseCdf, Rational, StrategyProfile, Tolerance};

use super::q;

pub type Check = Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Tree given by parent links (`parents[v - 1]` is the parent of `v`), captive market on 0.
pub fn tree(alpha_root: Rational, parents: &[usize], betas: &[Rational]) -> Network<Rational> {
    let n = parents.len() + 1;
    let mut alpha = vec![q(0, 1); n];
    alpha[0] = alpha_root;
    let markets = parents.iter().enumerate().map(|(k, &p)| (p, k + 1, betas[k].clone())).collect();
    Network::new(alpha, markets).unwrap()
}

pub fn descendants(parent: &[Option<usize>], v: usize) -> Vec<usize> {
    (0..parent.len())
        .filter(|&w| {
            let mut x = parent[w];
            while let Some(p) = x {
                if p == v {
                    return true;
                }
                x = parent[p];
            }
            false
        })
        .collect()
}

fn exact_equilibrium(net: &Network<Rational>, profile: &StrategyProfile<Rational>) -> Check {
    let rep = verify_profile(net, profile, Tolerance::exact()).map_err(|e| e.to_string())?;
    ensure!(rep.verdict == Verdict::Equilibrium, "verifier says {:?}", rep.verdict);
    Ok(())
}

pub fn tree_staggered(net: &Network<Rational>) -> Check {
    let s = solve_tree(net).map_err(|e| e.to_string())?;
    exact_equilibrium(net, &s.profile)?;
    let tq = tree_quantities(net).map_err(|e| e.to_string())?;
    let r = tq.root;
    ensure!(s.utilities[r] == *net.alpha(r), "root utility differs from its captive market");
    ensure!(tq.m[r] == q(1, 1), "root middle knot is not 1");
    for v in 0..net.len() {
        let support = s.profile.cdfs[v].support_intervals(Tolerance::exact());
        ensure!(support.len() == 1, "seller {v} has {} support intervals", support.len());
        let (l, h) = support[0].clone();
        ensure!(l <= tq.m[v] && tq.m[v] <= h, "seller {v}: M outside [L, H]");
        let leaf = v != r && net.degree(v) == 1;
        ensure!((l == tq.m[v]) == leaf, "seller {v}: L = M exactly at leaves fails");
        match tq.parent[v] {
            Some(p) => {
                let beta = net.beta(v, p).unwrap().clone();
                ensure!(s.utilities[v] == tq.m[v].clone() * beta, "seller {v}: u != M * beta");
                ensure!(p == r || h == tq.m[p], "seller {v}: H differs from the parent's M");
                for w in 0..net.len() {
                    ensure!(w == v || tq.parent[w] != Some(p) || tq.m[w] == tq.m[v], "siblings {v}, {w} differ in M");
                }
            }
            None => ensure!(h == q(1, 1), "root support does not reach 1"),
        }
    }
    Ok(())
}

pub fn cdf_monotone(profile: &StrategyProfile<Rational>, samples: i64) -> Check {
    for (i, c) in profile.cdfs.iter().enumerate() {
        ensure!(c.total_mass() == q(1, 1), "seller {i}: mass {}", c.total_mass());
        let mut prev = q(0, 1);
        for j in 0..=samples {
            let x = q(j, samples);
            let f = c.eval(&x, CdfMode::F);
            let fm = c.eval(&x, CdfMode::FMinus);
            ensure!(prev <= fm && fm <= f, "seller {i}: CDF decreases at {x}");
            ensure!(c.eval(&x, CdfMode::Atom) == f.clone() - fm.clone(), "seller {i}: atom mismatch at {x}");
            ensure!(c.eval(&x, CdfMode::FBar) == q(1, 1) - fm, "seller {i}: tail mismatch at {x}");
            ensure!(c.fbar(&x) == c.eval(&x, CdfMode::FBar), "seller {i}: fbar mismatch at {x}");
            prev = f;
        }
        ensure!(c.eval(&q(1, 1), CdfMode::F) == q(1, 1), "seller {i}: F(1) != 1");
    }
    Ok(())
}

/// Between consecutive breakpoints every utility is linear in the price.
pub fn utility_linear(net: &Network<Rational>, profile: &StrategyProfile<Rational>) -> Check {
    let pts = breakpoints(profile);
    for w in pts.windows(2) {
        let (a, b) = (w[0].clone(), w[1].clone());
        let xs: Vec<Rational> = [1i64, 2, 3].iter().map(|&k| a.clone() + (b.clone() - a.clone()) * q(k, 4)).collect();
        for i in 0..net.len() {
            let u: Vec<Rational> = xs.iter().map(|x| utility(net, profile, i, x)).collect();
            ensure!(u[1].clone() - u[0].clone() == u[2].clone() - u[1].clone(), "seller {i} not linear on [{a}, {b}]");
        }
    }
    Ok(())
}

pub fn sketch_round_trip(net: &Network<Rational>) -> Check {
    let s = solve_tree(net).map_err(|e| e.to_string())?;
    let exact = Tolerance::exact();
    let rebuilt = sketch_solution_to_profile(&s.sketch, net.labels(), exact).map_err(|e| e.to_string())?;
    exact_equilibrium(net, &rebuilt)?;
    let again = sketch_solution_from_profile(net, &rebuilt, s.utilities.clone(), exact).map_err(|e| e.to_string())?;
    let twice = sketch_solution_to_profile(&again, net.labels(), exact).map_err(|e| e.to_string())?;
    ensure!(twice == rebuilt, "sketch -> profile -> sketch -> profile changed the profile");
    Ok(())
}

pub fn json_round_trip(net: &Network<Rational>, profile: &StrategyProfile<Rational>) -> Check {
    let text = serde_json::to_string(&profile.to_json(net)).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let back = StrategyProfile::<Rational>::from_json(&v, net, Tolerance::exact()).map_err(|e| e.to_string())?;
    ensure!(back == *profile, "rational profile changed in a JSON round trip");
    let fnet = net.map(|x| x.to_f64());
    let fprof = profile.to_f64();
    let fback = StrategyProfile::<f64>::from_json(&fprof.to_json(&fnet), &fnet, Tolerance::DEFAULT).map_err(|e| e.to_string())?;
    ensure!(fback == fprof, "float profile changed in a JSON round trip");
    let net_back = Network::<Rational>::from_json_value(&net.to_json_value()).map_err(|e| e.to_string())?;
    ensure!(net_back == *net, "network changed in a JSON round trip");
    Ok(())
}

/// Every utility strictly increases with the root's captive market.
pub fn alpha_monotone(parents: &[usize], betas: &[Rational], alphas: &[Rational]) -> Check {
    let mut prev: Option<Vec<Rational>> = None;
    for a in alphas {
        let u = solve_tree(&tree(a.clone(), parents, betas)).map_err(|e| e.to_string())?.utilities;
        if let Some(p) = &prev {
            ensure!(u.iter().zip(p).all(|(x, y)| x > y), "utilities did not all rise: {p:?} -> {u:?}");
        }
        prev = Some(u);
    }
    Ok(())
}

/// On the tree 0-1, 1-2, 1-3, 3-4, a tiny or huge market above `v` starves its descendants.
pub fn beta_extremes() -> Check {
    let parents = [0, 1, 1, 3];
    for v in 1..5 {
        for extreme in [q(1, 1_000_000), q(1_000_000, 1)] {
            let mut betas = vec![q(1, 1); 4];
            betas[v - 1] = extreme.clone();
            let net = tree(q(1, 1), &parents, &betas);
            let s = solve_tree(&net).map_err(|e| e.to_string())?;
            let tq = tree_quantities(&net).map_err(|e| e.to_string())?;
            for w in descendants(&tq.parent, v) {
                ensure!(s.utilities[w] < q(1, 1000), "v = {v}, beta = {extreme}: u_{w} = {}", s.utilities[w]);
            }
        }
    }
    Ok(())
}

pub fn star_valid(net: &Network<Rational>) -> Check {
    let s = match solve_star(net, Some(0)) {
        Ok(s) => s,
        Err(ClosedFormError::NonGeneric(_)) => return Ok(()),
        Err(e) => return Err(e.to_string()),
    };
    ensure!(s.conventions_agree(), "star conventions disagree");
    ensure!(*s.boundaries.last().unwrap() < q(1, 1), "last cut point is 1");
    let first = match s.case {
        StarCase::CenterAtom => 0,
        StarCase::PeripheralAtom { j } => j - 1,
    };
    ensure!(s.boundaries[first..].windows(2).all(|w| w[1] < w[0]), "cut points not descending");
    ensure!(s.center_tail.iter().all(|f| q(0, 1) <= *f && *f <= q(1, 1)), "center tail outside [0, 1]");
    ensure!(s.case != StarCase::CenterAtom || s.solution.utilities[0] == *net.alpha(0), "center atom case with u_0 != alpha_0");
    ensure!((0..net.len()).all(|i| s.solution.utilities[i] >= *net.alpha(i)), "a seller earns less than its captive market");
    exact_equilibrium(net, &s.solution.profile)
}

/// Tails built from decreasing knots are valid whenever construction succeeds.
pub fn knots_valid(knots: &[(Rational, Rational)]) -> Check {
    if let Ok(c) = PiecewiseCdf::from_knots(knots, Tolerance::exact()) {
        ensure!(c.total_mass() == q(1, 1), "mass {}", c.total_mass());
        ensure!(c.atom_one() == &knots.last().unwrap().1, "atom differs from the last knot");
    }
    Ok(())
}
