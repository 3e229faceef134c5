//! Dense two-phase simplex for the tiny polytopes that show up in PM analysis.
//!
//! Problems here have at most a handful of variables (one per outcome) and a few
//! dozen rows, so the solver favours exactness over speed: a full tableau, Bland's
//! anti-cycling rule, and free variables split as `p = u - w` so callers can state
//! the simplex rows explicitly.

use log::warn;

use crate::error::{Error, Result};

/// Slack used to close strict inequalities: `a.p < b` becomes `a.p <= b - slack`.
pub const DEFAULT_STRICT_SLACK: f64 = 1e-7;

const PIVOT_EPS: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const DIRECTION_TOL: f64 = 1e-7;

/// `coef . p <= bound` (or `<` when `strict`).
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub coef: Vec<f64>,
    pub bound: f64,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSet {
    dim: usize,
    le: Vec<Halfspace>,
    eq: Vec<(Vec<f64>, f64)>,
    strict_slack: f64,
}

impl ConstraintSet {
    /// Unconstrained `R^dim`.
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            le: Vec::new(),
            eq: Vec::new(),
            strict_slack: DEFAULT_STRICT_SLACK,
        }
    }

    /// The probability simplex: `sum p = 1`, `p >= 0`.
    pub fn simplex(dim: usize) -> Self {
        let mut cs = Self::new(dim);
        cs.push_eq(vec![1.0; dim], 1.0);
        for k in 0..dim {
            let mut a = vec![0.0; dim];
            a[k] = -1.0;
            cs.push_le(a, 0.0);
        }
        cs
    }

    pub fn with_strict_slack(mut self, slack: f64) -> Self {
        assert!(slack > 0.0, "strict slack must be positive");
        self.strict_slack = slack;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn strict_slack(&self) -> f64 {
        self.strict_slack
    }

    pub fn le_rows(&self) -> &[Halfspace] {
        &self.le
    }

    pub fn eq_rows(&self) -> &[(Vec<f64>, f64)] {
        &self.eq
    }

    fn check_len(&self, coef: &[f64]) {
        assert_eq!(coef.len(), self.dim, "constraint length must equal dim");
    }

    pub fn push_le(&mut self, coef: Vec<f64>, bound: f64) {
        self.check_len(&coef);
        self.le.push(Halfspace {
            coef,
            bound,
            strict: false,
        });
    }

    /// `coef . p < bound`.
    pub fn push_strict(&mut self, coef: Vec<f64>, bound: f64) {
        self.check_len(&coef);
        self.le.push(Halfspace {
            coef,
            bound,
            strict: true,
        });
    }

    pub fn push_eq(&mut self, coef: Vec<f64>, bound: f64) {
        self.check_len(&coef);
        self.eq.push((coef, bound));
    }

    /// Intersection with another set over the same space.
    pub fn intersect(&self, other: &ConstraintSet) -> ConstraintSet {
        assert_eq!(
            self.dim, other.dim,
            "intersecting sets of different dimension"
        );
        let mut out = self.clone();
        out.le.extend(other.le.iter().cloned());
        out.eq.extend(other.eq.iter().cloned());
        out.strict_slack = self.strict_slack.max(other.strict_slack);
        out
    }

    fn effective_bound(&self, h: &Halfspace) -> f64 {
        if h.strict {
            h.bound - self.strict_slack
        } else {
            h.bound
        }
    }

    /// Whether `p` satisfies every row (strict rows with slack) within `tol`.
    pub fn contains(&self, p: &[f64], tol: f64) -> bool {
        let dot = |a: &[f64]| a.iter().zip(p).map(|(x, y)| x * y).sum::<f64>();
        self.le
            .iter()
            .all(|h| dot(&h.coef) <= self.effective_bound(h) + tol)
            && self.eq.iter().all(|(a, b)| (dot(a) - b).abs() <= tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub witness: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Max,
    Min,
}

enum Outcome {
    Optimal(Vec<f64>),
    Infeasible,
    Unbounded,
    /// Iteration cap hit or numerically broken basis.
    Degenerate,
}

struct Tableau {
    rows: usize,
    cols: usize,
    /// `(rows + 1) x (cols + 1)`; last row holds reduced costs, last column the rhs.
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    #[inline]
    fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.cols + 1;
        let piv = self.at(pr, pc);
        for c in 0..w {
            *self.at_mut(pr, c) /= piv;
        }
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f != 0.0 {
                for c in 0..w {
                    let v = self.at(pr, c);
                    *self.at_mut(r, c) -= f * v;
                }
            }
        }
        self.basis[pr] = pc;
    }

    /// Runs simplex iterations with Bland's rule over columns in `allowed`.
    fn optimize(&mut self, allowed: usize) -> std::result::Result<(), Outcome> {
        let cap = 64 * (self.rows + self.cols) + 1000;
        for _ in 0..cap {
            let obj = self.rows;
            let Some(enter) = (0..allowed).find(|&c| self.at(obj, c) < -PIVOT_EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, enter);
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            if ratio < lratio - 1e-12
                                || (ratio <= lratio + 1e-12 && self.basis[r] < self.basis[lr])
                            {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                Some((r, _)) => self.pivot(r, enter),
                None => return Err(Outcome::Unbounded),
            }
        }
        Err(Outcome::Degenerate)
    }
}

/// Minimizes `cost . p` over `cs` (or only finds a feasible point if `cost` is `None`).
fn solve(cs: &ConstraintSet, cost: Option<&[f64]>) -> Outcome {
    let dim = cs.dim;
    let n_le = cs.le.len();
    let rows = n_le + cs.eq.len();
    let n_struct = 2 * dim + n_le;
    let cols = n_struct + rows;
    let w = cols + 1;
    let mut tab = Tableau {
        rows,
        cols,
        t: vec![0.0; (rows + 1) * w],
        basis: (n_struct..cols).collect(),
    };

    let mut fill = |r: usize, coef: &[f64], slack: Option<usize>, b: f64| {
        let sign = if b < 0.0 { -1.0 } else { 1.0 };
        for (k, &a) in coef.iter().enumerate() {
            tab.t[r * w + k] = sign * a;
            tab.t[r * w + dim + k] = -sign * a;
        }
        if let Some(s) = slack {
            tab.t[r * w + 2 * dim + s] = sign;
        }
        tab.t[r * w + n_struct + r] = 1.0;
        tab.t[r * w + cols] = sign * b;
    };
    for (i, h) in cs.le.iter().enumerate() {
        fill(i, &h.coef, Some(i), cs.effective_bound(h));
    }
    for (i, (a, b)) in cs.eq.iter().enumerate() {
        fill(n_le + i, a, None, *b);
    }

    // phase 1: minimize the sum of artificials
    for c in 0..=cols {
        if (n_struct..cols).contains(&c) {
            continue;
        }
        let s: f64 = (0..rows).map(|r| tab.at(r, c)).sum();
        *tab.at_mut(rows, c) = -s;
    }
    let scale = 1.0 + (0..rows).map(|r| tab.rhs(r).abs()).fold(0.0, f64::max);
    if let Err(e) = tab.optimize(cols) {
        return match e {
            Outcome::Unbounded => Outcome::Degenerate,
            other => other,
        };
    }
    if -tab.rhs(rows) > FEAS_TOL * scale {
        return Outcome::Infeasible;
    }

    // drive remaining artificials out of the basis; rows that cannot be pivoted are redundant
    let mut r = 0;
    while r < tab.rows {
        if tab.basis[r] >= n_struct {
            if let Some(c) = (0..n_struct).find(|&c| tab.at(r, c).abs() > 1e-9) {
                tab.pivot(r, c);
            } else {
                let start = r * w;
                tab.t.drain(start..start + w);
                tab.basis.remove(r);
                tab.rows -= 1;
                continue;
            }
        }
        r += 1;
    }

    // phase 2 over structural columns only
    let mut c_full = vec![0.0; cols];
    if let Some(cost) = cost {
        for k in 0..dim {
            c_full[k] = cost[k];
            c_full[dim + k] = -cost[k];
        }
    }
    let obj = tab.rows;
    for c in 0..=cols {
        let base = if c < cols { c_full[c] } else { 0.0 };
        let s: f64 = (0..tab.rows)
            .map(|r| c_full[tab.basis[r]] * tab.at(r, c))
            .sum();
        *tab.at_mut(obj, c) = base - s;
    }
    if cost.is_some() {
        if let Err(e) = tab.optimize(n_struct) {
            return e;
        }
    }

    let mut y = vec![0.0; cols];
    for r in 0..tab.rows {
        y[tab.basis[r]] = tab.rhs(r);
    }
    Outcome::Optimal((0..dim).map(|k| y[k] - y[dim + k]).collect())
}

/// Feasibility of `cs`, with a witness point when feasible.
pub fn lp_feasible(cs: &ConstraintSet) -> Feasibility {
    match solve(cs, None) {
        Outcome::Optimal(p) => {
            if !cs.contains(&p, FEAS_TOL * 10.0) {
                warn!("lp_feasible: witness misses constraints beyond tolerance");
            }
            Feasibility {
                feasible: true,
                witness: Some(p),
            }
        }
        Outcome::Infeasible => Feasibility {
            feasible: false,
            witness: None,
        },
        Outcome::Unbounded | Outcome::Degenerate => {
            warn!("lp_feasible: numerically degenerate problem, reporting infeasible");
            Feasibility {
                feasible: false,
                witness: None,
            }
        }
    }
}

/// Optimal value and argument of `objective . p` over `cs`.
pub fn lp_extremize(
    objective: &[f64],
    cs: &ConstraintSet,
    sense: Sense,
) -> Result<(f64, Vec<f64>)> {
    if objective.len() != cs.dim {
        return Err(Error::Dimension(format!(
            "objective has length {}, constraint set dim {}",
            objective.len(),
            cs.dim
        )));
    }
    let cost: Vec<f64> = match sense {
        Sense::Min => objective.to_vec(),
        Sense::Max => objective.iter().map(|v| -v).collect(),
    };
    match solve(cs, Some(&cost)) {
        Outcome::Optimal(p) => {
            let value = objective.iter().zip(&p).map(|(a, b)| a * b).sum();
            Ok((value, p))
        }
        Outcome::Infeasible => Err(Error::Infeasible),
        Outcome::Unbounded => Err(Error::Unbounded),
        Outcome::Degenerate => {
            warn!("lp_extremize: numerically degenerate problem");
            Err(Error::Infeasible)
        }
    }
}

/// Dimension of the affine hull of `cs`, or `-1` when it is empty.
///
/// Probes directions orthogonal to everything found so far: a direction along which
/// the set has positive width contributes the displacement between its two extreme
/// points, one with zero width is an implicit equality. Each probe settles one
/// dimension, so at most `2 * dim` LPs run.
pub fn affine_dimension(cs: &ConstraintSet) -> Result<i64> {
    let feas = lp_feasible(cs);
    if !feas.feasible {
        return Ok(-1);
    }
    let dim = cs.dim;
    // orthonormal basis of span(displacements) + span(flat directions)
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut rank = 0i64;
    while q.len() < dim {
        let dir = next_orthogonal(&q, dim);
        let (hi, p_hi) = lp_extremize(&dir, cs, Sense::Max)?;
        let (lo, p_lo) = lp_extremize(&dir, cs, Sense::Min)?;
        if hi - lo > DIRECTION_TOL {
            rank += 1;
            let disp: Vec<f64> = p_hi.iter().zip(&p_lo).map(|(a, b)| a - b).collect();
            q.push(orthonormalize(disp, &q).unwrap_or(dir));
        } else {
            q.push(dir);
        }
    }
    Ok(rank)
}

fn orthonormalize(mut v: Vec<f64>, q: &[Vec<f64>]) -> Option<Vec<f64>> {
    for _ in 0..2 {
        for b in q {
            let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
        }
    }
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    (n > 1e-9).then(|| v.into_iter().map(|x| x / n).collect())
}

/// First standard basis vector with a non-trivial component outside `span(q)`,
/// orthogonalized and normalized.
fn next_orthogonal(q: &[Vec<f64>], dim: usize) -> Vec<f64> {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for k in 0..dim {
        let mut v = vec![0.0; dim];
        v[k] = 1.0;
        for _ in 0..2 {
            for b in q {
                let d: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= d * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.5 {
            return v.into_iter().map(|x| x / n).collect();
        }
        if best.as_ref().is_none_or(|(bn, _)| n > *bn) {
            best = Some((n, v));
        }
    }
    let (n, v) = best.expect("dim > q.len() so some direction remains");
    v.into_iter().map(|x| x / n).collect()
}
