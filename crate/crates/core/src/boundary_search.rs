//! Numerical search for boundary points of a sketch whose shape is known but whose
//! points are not. Once the points are fixed the sketch program is linear, so the search
//! solves the joint polynomial system with damped Gauss-Newton and then re-checks every
//! inequality, exactly when the points snap to small rationals.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::network::Network;
use crate::numerics::{Rational, Tolerance};
use crate::sketch::{
    check_full_rank, sketch_solution_to_profile, solve_lp1, Sketch, SketchError, SketchShape, SketchSolution, Uniqueness,
};
use crate::verifier::{verify_profile, Verdict};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("no convergence after all restarts (best residual {best_residual:e})")]
    NoConvergence { best_residual: f64 },
    /// The equations were solved but an inequality fails, so the sketch is not an
    /// equilibrium at these points.
    #[error("converged but violates strict conditions: {reason}")]
    StrictViolated { reason: String, candidate: Box<SketchSolution<f64>> },
    #[error("seed must list {expected} decreasing points starting at 1")]
    BadSeed { expected: usize },
    #[error(transparent)]
    Sketch(#[from] SketchError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOptions {
    /// Initial boundary points, `seed[0] = 1`. Defaults to a geometric ladder down to 1/2.
    pub seed: Option<Vec<f64>>,
    pub max_iterations: usize,
    pub restarts: usize,
    pub rng_seed: u64,
    /// Residual infinity-norm that counts as converged.
    pub residual_tol: f64,
    /// Slack required on strict inequalities.
    pub strict_tol: f64,
    /// Tolerance of the final float verification.
    pub verify_tol: f64,
    /// Largest denominator tried when snapping points to rationals.
    pub snap_denominator: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            seed: None,
            max_iterations: 500,
            restarts: 20,
            rng_seed: 0,
            residual_tol: 1e-12,
            strict_tol: 1e-9,
            verify_tol: 1e-8,
            snap_denominator: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundarySolution {
    /// Points snapped to rationals and the exact program plus exact verification agree.
    Exact(SketchSolution<Rational>),
    Approximate(SketchSolution<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchReport {
    pub solution: BoundarySolution,
    /// Float solution the search converged to, kept even when an exact one was found.
    pub float_solution: SketchSolution<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub restart: usize,
    pub equations: usize,
    pub unknowns: usize,
}

impl SearchReport {
    pub fn points_f64(&self) -> Vec<f64> {
        self.float_solution.sketch.points.clone()
    }
}

#[derive(Debug, Clone, Copy)]
enum Row {
    EqUtil { i: usize, j: usize },
    StartsAtOne { i: usize },
    NoAtom { i: usize },
    OutSupport { i: usize, j: usize },
}

/// Residual system in the unknowns `t[1..k]`, `Fbar` (n*k) and `u` (n).
struct System<'a> {
    net: &'a Network<f64>,
    shape: &'a SketchShape,
    rows: Vec<Row>,
    n: usize,
    k: usize,
}

impl<'a> System<'a> {
    fn new(net: &'a Network<f64>, shape: &'a SketchShape) -> Self {
        let n = net.len();
        let k = shape.k();
        let mut rows = Vec::new();
        for i in 0..n {
            for j in 0..k {
                if shape.is_support_point(i, j) {
                    rows.push(Row::EqUtil { i, j });
                }
            }
        }
        for i in 0..n {
            rows.push(Row::StartsAtOne { i });
            if !shape.has_atom(i) {
                rows.push(Row::NoAtom { i });
            }
            for j in 0..k - 1 {
                if !shape.in_interval(i, j) {
                    rows.push(Row::OutSupport { i, j });
                }
            }
        }
        System { net, shape, rows, n, k }
    }

    fn unknowns(&self) -> usize {
        (self.k - 1) + self.n * self.k + self.n
    }

    fn t_var(&self, j: usize) -> usize {
        j - 1
    }

    fn f_var(&self, i: usize, j: usize) -> usize {
        (self.k - 1) + i * self.k + j
    }

    fn u_var(&self, i: usize) -> usize {
        (self.k - 1) + self.n * self.k + i
    }

    fn t(&self, z: &DVector<f64>, j: usize) -> f64 {
        if j == 0 {
            1.0
        } else {
            z[self.t_var(j)]
        }
    }

    fn demand(&self, z: &DVector<f64>, i: usize, j: usize) -> f64 {
        self.net.alpha(i) + self.net.neighbors(i).iter().map(|(r, b)| b * z[self.f_var(*r, j)]).sum::<f64>()
    }

    fn residual(&self, z: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(
            self.rows.len(),
            self.rows.iter().map(|row| match *row {
                Row::EqUtil { i, j } => z[self.u_var(i)] - self.t(z, j) * self.demand(z, i, j),
                Row::StartsAtOne { i } => z[self.f_var(i, self.k - 1)] - 1.0,
                Row::NoAtom { i } => z[self.f_var(i, 0)],
                Row::OutSupport { i, j } => z[self.f_var(i, j + 1)] - z[self.f_var(i, j)],
            }),
        )
    }

    fn jacobian(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let mut jac = DMatrix::zeros(self.rows.len(), self.unknowns());
        for (r, row) in self.rows.iter().enumerate() {
            match *row {
                Row::EqUtil { i, j } => {
                    jac[(r, self.u_var(i))] = 1.0;
                    if j > 0 {
                        jac[(r, self.t_var(j))] = -self.demand(z, i, j);
                    }
                    let t = self.t(z, j);
                    for (s, b) in self.net.neighbors(i) {
                        jac[(r, self.f_var(*s, j))] = -t * b;
                    }
                }
                Row::StartsAtOne { i } => jac[(r, self.f_var(i, self.k - 1))] = 1.0,
                Row::NoAtom { i } => jac[(r, self.f_var(i, 0))] = 1.0,
                Row::OutSupport { i, j } => {
                    jac[(r, self.f_var(i, j + 1))] = 1.0;
                    jac[(r, self.f_var(i, j))] = -1.0;
                }
            }
        }
        jac
    }

    /// With the points fixed the system is linear in the remaining unknowns; solve it in
    /// the least-squares sense to start from a consistent state.
    fn initial_state(&self, points: &[f64]) -> DVector<f64> {
        let mut z = DVector::zeros(self.unknowns());
        for (j, p) in points.iter().enumerate().skip(1) {
            z[self.t_var(j)] = *p;
        }
        let first = self.k - 1;
        let jac = self.jacobian(&z);
        let a = jac.columns(first, self.unknowns() - first).into_owned();
        let mut z0 = z.clone();
        for i in 0..self.n {
            for j in 0..self.k {
                z0[self.f_var(i, j)] = 0.0;
            }
        }
        let b = -self.residual(&z0);
        if let Ok(x) = a.clone().svd(true, true).solve(&b, 1e-12) {
            for (c, v) in x.iter().enumerate() {
                z[first + c] = *v;
            }
        }
        z
    }

    fn solve(&self, points: &[f64], opts: &SearchOptions) -> (DVector<f64>, f64, usize) {
        let mut z = self.initial_state(points);
        let mut r = self.residual(&z);
        let mut cost = r.norm_squared();
        let mut lambda = 1e-3;
        let mut iters = 0;
        while iters < opts.max_iterations {
            if r.amax() < opts.residual_tol {
                break;
            }
            iters += 1;
            let jac = self.jacobian(&z);
            let jt = jac.transpose();
            let g = &jt * &r;
            let h = &jt * &jac;
            let mut improved = false;
            for _ in 0..30 {
                let mut a = h.clone();
                for d in 0..a.nrows() {
                    a[(d, d)] += lambda * (h[(d, d)] + 1e-12);
                }
                let step = match a.cholesky() {
                    Some(ch) => ch.solve(&(-&g)),
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                };
                let trial = &z + &step;
                let rt = self.residual(&trial);
                let ct = rt.norm_squared();
                if ct < cost {
                    z = trial;
                    r = rt;
                    cost = ct;
                    lambda = (lambda / 3.0).max(1e-15);
                    improved = true;
                    break;
                }
                lambda *= 4.0;
            }
            if !improved {
                break;
            }
        }
        (z.clone(), r.amax(), iters)
    }

    fn to_solution(&self, z: &DVector<f64>) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
        let points = (0..self.k).map(|j| self.t(z, j)).collect();
        let fbar = (0..self.n).map(|i| (0..self.k).map(|j| z[self.f_var(i, j)]).collect()).collect();
        let u = (0..self.n).map(|i| z[self.u_var(i)]).collect();
        (points, fbar, u)
    }

    /// Strict conditions the equations cannot express.
    fn check_strict(&self, points: &[f64], fbar: &[Vec<f64>], u: &[f64], tol: f64) -> Result<(), String> {
        for w in points.windows(2) {
            if w[1] >= w[0] - tol {
                return Err(format!("boundary points not decreasing: {points:?}"));
            }
        }
        if points[self.k - 1] <= tol {
            return Err("lowest boundary point not positive".into());
        }
        for i in 0..self.n {
            let label = self.net.label(i);
            if fbar[i].iter().any(|v| *v < -tol || *v > 1.0 + tol) {
                return Err(format!("tail of {label} leaves [0, 1]"));
            }
            if self.shape.has_atom(i) && fbar[i][0] <= tol {
                return Err(format!("atom of {label} vanished"));
            }
            for j in 0..self.k - 1 {
                if self.shape.in_interval(i, j) && fbar[i][j + 1] - fbar[i][j] <= tol {
                    return Err(format!("{label} puts no mass on interval {}", j + 1));
                }
            }
            for j in 0..self.k {
                if !self.shape.is_support_point(i, j) {
                    let off = points[j]
                        * (self.net.alpha(i) + self.net.neighbors(i).iter().map(|(r, b)| b * fbar[*r][j]).sum::<f64>());
                    if off > u[i] + tol {
                        return Err(format!("{label} gains by moving to boundary point {}", j + 1));
                    }
                }
            }
        }
        Ok(())
    }
}

fn default_seed(k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![1.0];
    }
    (0..k).map(|j| 0.5f64.powf(j as f64 / (k - 1) as f64)).collect()
}

fn perturb(seed: &[f64], rng_seed: u64, attempt: usize) -> Vec<f64> {
    if attempt == 0 {
        return seed.to_vec();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut pts: Vec<f64> = seed
        .iter()
        .enumerate()
        .map(|(j, p)| if j == 0 { 1.0 } else { (p * rng.gen_range(0.8..1.2)).clamp(1e-3, 0.999) })
        .collect();
    pts[1..].sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    pts
}

enum Attempt {
    Found(Box<(SketchSolution<f64>, f64, usize)>),
    Strict(String, Box<SketchSolution<f64>>),
    Diverged(f64),
}

/// Searches for boundary points realizing `shape` as an equilibrium of `net`.
pub fn solve_free_boundaries(
    net: &Network<Rational>,
    shape: &SketchShape,
    opts: &SearchOptions,
) -> Result<SearchReport, SearchError> {
    shape.check_network(net)?;
    let k = shape.k();
    let seed = match &opts.seed {
        Some(s) => {
            let ok = s.len() == k && (s[0] - 1.0).abs() < 1e-12 && s.windows(2).all(|w| w[1] < w[0]) && s[k - 1] > 0.0;
            if !ok {
                return Err(SearchError::BadSeed { expected: k });
            }
            s.clone()
        }
        None => default_seed(k),
    };
    let fnet = net.map(|v| v.to_f64());
    let sys = System::new(&fnet, shape);
    let verify_tol = Tolerance::new(opts.verify_tol);
    let attempt = |a: usize| -> Attempt {
        let pts = perturb(&seed, opts.rng_seed, a);
        let (z, res, iters) = sys.solve(&pts, opts);
        if !(res < opts.residual_tol) {
            return Attempt::Diverged(res);
        }
        let (points, fbar, u) = sys.to_solution(&z);
        let uniqueness = if check_full_rank(&fnet, shape) { Uniqueness::Unique } else { Uniqueness::Undetermined };
        let strict = sys.check_strict(&points, &fbar, &u, opts.strict_tol);
        let ss = SketchSolution { sketch: Sketch { shape: shape.clone(), points }, fbar, utilities: u, uniqueness };
        if let Err(e) = strict {
            return Attempt::Strict(e, Box::new(ss));
        }
        let ok = sketch_solution_to_profile(&ss, fnet.labels(), Tolerance::DEFAULT)
            .ok()
            .and_then(|p| verify_profile(&fnet, &p, verify_tol).ok())
            .is_some_and(|r| r.verdict == Verdict::Equilibrium);
        if !ok {
            return Attempt::Strict("float verification failed".into(), Box::new(ss));
        }
        Attempt::Found(Box::new((ss, res, iters)))
    };
    let outcomes: Vec<(usize, Attempt)> = {
        let found = (0..=opts.restarts).into_par_iter().find_map_first(|a| match attempt(a) {
            Attempt::Found(f) => Some((a, f)),
            _ => None,
        });
        match found {
            Some((a, f)) => vec![(a, Attempt::Found(f))],
            None => (0..=opts.restarts).into_par_iter().map(|a| (a, attempt(a))).collect(),
        }
    };
    let mut strict = None;
    let mut best = f64::INFINITY;
    for (a, o) in outcomes {
        match o {
            Attempt::Found(f) => {
                let (ss, residual, iterations) = *f;
                let solution = snap_exact(net, &ss, opts)
                    .map(BoundarySolution::Exact)
                    .unwrap_or_else(|| BoundarySolution::Approximate(ss.clone()));
                return Ok(SearchReport {
                    solution,
                    float_solution: ss,
                    residual,
                    iterations,
                    restart: a,
                    equations: sys.rows.len(),
                    unknowns: sys.unknowns(),
                });
            }
            Attempt::Strict(e, p) => {
                strict.get_or_insert((e, p));
            }
            Attempt::Diverged(r) => best = best.min(r),
        }
    }
    match strict {
        Some((reason, candidate)) => Err(SearchError::StrictViolated { reason, candidate }),
        None => Err(SearchError::NoConvergence { best_residual: best }),
    }
}

/// Tries to lift a float solution to an exact one: snap the points, re-solve the sketch
/// program over the rationals and verify exactly.
fn snap_exact(net: &Network<Rational>, ss: &SketchSolution<f64>, opts: &SearchOptions) -> Option<SketchSolution<Rational>> {
    let points: Option<Vec<Rational>> = ss
        .sketch
        .points
        .iter()
        .map(|p| Rational::approximate(*p, opts.snap_denominator, 1e-9))
        .collect();
    let sketch = Sketch::new(ss.sketch.shape.clone(), points?, Tolerance::exact()).ok()?;
    let exact = solve_lp1(net, &sketch).ok()?;
    let profile = sketch_solution_to_profile(&exact, net.labels(), Tolerance::exact()).ok()?;
    let report = verify_profile(net, &profile, Tolerance::exact()).ok()?;
    (report.verdict == Verdict::Equilibrium).then_some(exact)
}

/// Equation and unknown counts of the search system.
pub fn system_size(net: &Network<Rational>, shape: &SketchShape) -> (usize, usize) {
    let fnet = net.map(|v| v.to_f64());
    let sys = System::new(&fnet, shape);
    (sys.rows.len(), sys.unknowns())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::frac(n, d)
    }

    #[test]
    fn recovers_three_line_exactly() {
        let net = Network::line(vec![q(1, 1), q(0, 1), q(0, 1)], vec![q(1, 1), q(1, 1)]).unwrap();
        let shape = SketchShape::from_index_ranges(3, &[vec![(1, 2)], vec![(1, 3)], vec![(2, 3)]], vec![true, false, false]).unwrap();
        let rep = solve_free_boundaries(&net, &shape, &SearchOptions::default()).unwrap();
        match rep.solution {
            BoundarySolution::Exact(s) => assert_eq!(s.sketch.points, vec![q(1, 1), q(2, 3), q(1, 3)]),
            other => panic!("expected exact solution, got {other:?}"),
        }
    }

    #[test]
    fn bad_seed_rejected() {
        let net = Network::line(vec![q(1, 1), q(0, 1)], vec![q(1, 1)]).unwrap();
        let shape = SketchShape::from_index_ranges(2, &[vec![(1, 2)], vec![(1, 2)]], vec![true, false]).unwrap();
        let opts = SearchOptions { seed: Some(vec![0.5, 0.2]), ..Default::default() };
        assert_eq!(solve_free_boundaries(&net, &shape, &opts), Err(SearchError::BadSeed { expected: 2 }));
    }
}
