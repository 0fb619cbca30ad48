//! Dense two-phase simplex over exact rationals with Bland's anti-cycling rule.

use crate::numerics::Rational;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<(usize, Rational)>,
    pub rel: Relation,
    pub rhs: Rational,
}

/// `maximize objective . x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinearProgram {
    pub num_vars: usize,
    pub objective: Vec<(usize, Rational)>,
    pub constraints: Vec<LinearConstraint>,
}

/// Order in which Bland's rule scans columns. Both orders terminate; they may land on
/// different optimal vertices when the optimum is not unique.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotOrder {
    #[default]
    Forward,
    Reverse,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rational>, value: Rational },
    /// Indices of constraints still carrying artificial weight at the phase-one optimum.
    Infeasible { conflicting: Vec<usize> },
    Unbounded,
}

struct Tableau {
    rows: Vec<Vec<Rational>>,
    rhs: Vec<Rational>,
    basis: Vec<usize>,
    obj: Vec<Rational>,
    obj_rhs: Rational,
    /// Column scan order; position in this vector is the Bland priority.
    order: Vec<usize>,
    rank: Vec<usize>,
    blocked: Vec<bool>,
}

impl Tableau {
    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e].clone();
        if p != Rational::one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v = &*v / &p;
                }
            }
            self.rhs[r] = &self.rhs[r] / &p;
        }
        let prow = self.rows[r].clone();
        let nz: Vec<usize> = (0..prow.len()).filter(|&j| !prow[j].is_zero()).collect();
        let prhs = self.rhs[r].clone();
        for i in 0..self.rows.len() {
            if i == r || self.rows[i][e].is_zero() {
                continue;
            }
            let f = self.rows[i][e].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                self.rows[i][j] -= d;
            }
            self.rhs[i] -= &f * &prhs;
        }
        if !self.obj[e].is_zero() {
            let f = self.obj[e].clone();
            for &j in &nz {
                let d = &f * &prow[j];
                self.obj[j] -= d;
            }
            self.obj_rhs -= &f * &prhs;
        }
        self.basis[r] = e;
    }

    /// Runs simplex iterations on the current objective row. Returns false if unbounded.
    fn run(&mut self) -> bool {
        loop {
            let entering = self
                .order
                .iter()
                .copied()
                .find(|&j| !self.blocked[j] && self.obj[j].is_positive());
            let Some(e) = entering else { return true };
            let mut best: Option<(usize, Rational)> = None;
            for i in 0..self.rows.len() {
                let a = &self.rows[i][e];
                if !a.is_positive() {
                    continue;
                }
                let ratio = &self.rhs[i] / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        if ratio < br || (ratio == br && self.rank[self.basis[i]] < self.rank[self.basis[bi]]) {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
            let Some((r, _)) = best else { return false };
            self.pivot(r, e);
        }
    }

    fn set_objective(&mut self, c: &[Rational]) {
        let ncols = self.obj.len();
        self.obj = c.to_vec();
        self.obj.resize(ncols, Rational::zero());
        self.obj_rhs = Rational::zero();
        for i in 0..self.rows.len() {
            let cb = self.obj_value_of(c, self.basis[i]);
            if cb.is_zero() {
                continue;
            }
            for j in 0..ncols {
                if !self.rows[i][j].is_zero() {
                    let d = &cb * &self.rows[i][j];
                    self.obj[j] -= d;
                }
            }
            self.obj_rhs -= &cb * &self.rhs[i];
        }
    }

    fn obj_value_of(&self, c: &[Rational], j: usize) -> Rational {
        c.get(j).cloned().unwrap_or_else(Rational::zero)
    }
}

pub fn solve_lp_rational(lp: &LinearProgram, order: PivotOrder) -> LpOutcome {
    let n = lp.num_vars;
    let m = lp.constraints.len();
    // one slack or surplus column per inequality, one artificial per >= or = row
    let mut slack_of = vec![None; m];
    let mut art_of = vec![None; m];
    let mut ncols = n;
    let mut normalized = Vec::with_capacity(m);
    for (i, c) in lp.constraints.iter().enumerate() {
        let flip = c.rhs.is_negative();
        let rel = match (c.rel, flip) {
            (Relation::Le, true) => Relation::Ge,
            (Relation::Ge, true) => Relation::Le,
            (r, _) => r,
        };
        normalized.push((flip, rel));
        if rel != Relation::Eq {
            slack_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    for (i, (_, rel)) in normalized.iter().enumerate() {
        if *rel != Relation::Le {
            art_of[i] = Some(ncols);
            ncols += 1;
        }
    }
    let mut rows = vec![vec![Rational::zero(); ncols]; m];
    let mut rhs = Vec::with_capacity(m);
    let mut basis = vec![0; m];
    for (i, c) in lp.constraints.iter().enumerate() {
        let (flip, rel) = normalized[i];
        for (j, v) in &c.coeffs {
            let v = if flip { -v } else { v.clone() };
            rows[i][*j] += v;
        }
        rhs.push(if flip { -&c.rhs } else { c.rhs.clone() });
        if let Some(s) = slack_of[i] {
            rows[i][s] = if rel == Relation::Le { Rational::one() } else { -Rational::one() };
        }
        basis[i] = match (rel, art_of[i]) {
            (Relation::Le, _) => slack_of[i].expect("slack for <= row"),
            (_, Some(a)) => {
                rows[i][a] = Rational::one();
                a
            }
            _ => unreachable!("artificial for >= and = rows"),
        };
    }
    let mut col_order: Vec<usize> = match order {
        PivotOrder::Forward => (0..n).collect(),
        PivotOrder::Reverse => (0..n).rev().collect(),
    };
    col_order.extend(n..ncols);
    let mut rank = vec![0; ncols];
    for (pos, &j) in col_order.iter().enumerate() {
        rank[j] = pos;
    }
    let mut t = Tableau {
        rows,
        rhs,
        basis,
        obj: vec![Rational::zero(); ncols],
        obj_rhs: Rational::zero(),
        order: col_order,
        rank,
        blocked: vec![false; ncols],
    };

    let is_art = |j: usize| art_of.contains(&Some(j));
    let mut phase1 = vec![Rational::zero(); ncols];
    for a in art_of.iter().flatten() {
        phase1[*a] = -Rational::one();
    }
    t.set_objective(&phase1);
    t.run();
    if t.obj_rhs.is_positive() {
        let conflicting = (0..m)
            .filter(|&i| {
                art_of[i].is_some_and(|a| {
                    t.basis.iter().zip(&t.rhs).any(|(&b, v)| b == a && v.is_positive())
                })
            })
            .collect();
        return LpOutcome::Infeasible { conflicting };
    }
    // drive zero-level artificials out of the basis; drop redundant rows
    let mut r = 0;
    while r < t.rows.len() {
        if is_art(t.basis[r]) {
            let col = (0..ncols).find(|&j| !is_art(j) && !t.rows[r][j].is_zero());
            match col {
                Some(j) => t.pivot(r, j),
                None => {
                    t.rows.remove(r);
                    t.rhs.remove(r);
                    t.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }
    for a in art_of.iter().flatten() {
        t.blocked[*a] = true;
    }
    let mut c = vec![Rational::zero(); ncols];
    for (j, v) in &lp.objective {
        c[*j] += v.clone();
    }
    t.set_objective(&c);
    if !t.run() {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &b) in t.basis.iter().enumerate() {
        if b < n {
            x[b] = t.rhs[i].clone();
        }
    }
    let value = lp.objective.iter().map(|(j, v)| v * &x[*j]).sum();
    LpOutcome::Optimal { x, value }
}
