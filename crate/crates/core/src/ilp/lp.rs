//! Dense linear programming: `min cᵀx` subject to `A_eq x = b_eq`,
//! `A_le x ≤ b_le` and `l ≤ x ≤ u`, with infinite bounds allowed.
//!
//! Fixed variables are substituted and free variables are eliminated through
//! the equality rows before a bounded-variable primal simplex (phase one with
//! artificials, phase two on the true cost) solves what is left.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const ZERO_ROW_TOL: f64 = 1e-11;
const FEAS_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
const BLAND_AFTER: usize = 50;

#[derive(Clone, Debug, PartialEq)]
pub struct LinRow {
    pub coefs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LpProblem {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub eq: Vec<LinRow>,
    pub le: Vec<LinRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

impl LpProblem {
    pub fn new() -> LpProblem {
        LpProblem::default()
    }

    pub fn n(&self) -> usize {
        self.cost.len()
    }

    /// Adds a variable and returns its index.
    pub fn add_var(&mut self, lower: f64, upper: f64, cost: f64) -> usize {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.cost.len() - 1
    }

    pub fn add_eq(&mut self, coefs: Vec<(usize, f64)>, rhs: f64) {
        self.eq.push(LinRow { coefs, rhs });
    }

    pub fn add_le(&mut self, coefs: Vec<(usize, f64)>, rhs: f64) {
        self.le.push(LinRow { coefs, rhs });
    }

    pub fn add_ge(&mut self, coefs: Vec<(usize, f64)>, rhs: f64) {
        self.le.push(LinRow { coefs: coefs.into_iter().map(|(j, v)| (j, -v)).collect(), rhs: -rhs });
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any bound or row at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for j in 0..self.n() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        let dot = |r: &LinRow| r.coefs.iter().map(|&(j, v)| v * x[j]).sum::<f64>();
        for r in &self.eq {
            worst = worst.max((dot(r) - r.rhs).abs());
        }
        for r in &self.le {
            worst = worst.max(dot(r) - r.rhs);
        }
        worst
    }
}

/// Record of one free-variable elimination: `x_j = (rhs − Σ a_k x_k) / a_j`.
struct Elimination {
    var: usize,
    row: Vec<f64>,
    rhs: f64,
}

pub fn lp_solve(p: &LpProblem) -> Result<LpSolution> {
    let n = p.n();
    if p.lower.len() != n || p.upper.len() != n {
        return Err(Error::Dimension("bound vectors do not match the variable count".into()));
    }
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j]);
        if l.is_nan() || u.is_nan() || !p.cost[j].is_finite() || l == f64::INFINITY || u == f64::NEG_INFINITY {
            return Err(Error::Validation(format!("variable {j} has invalid bounds or cost")));
        }
        if l > u {
            return Err(Error::LpInfeasible);
        }
    }
    let dense = |rows: &[LinRow]| -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
        let mut a = vec![vec![0.0; n]; rows.len()];
        let mut b = vec![0.0; rows.len()];
        for (i, r) in rows.iter().enumerate() {
            for &(j, v) in &r.coefs {
                if j >= n || !v.is_finite() {
                    return Err(Error::Validation(format!("row {i} has an invalid coefficient")));
                }
                a[i][j] += v;
            }
            if !r.rhs.is_finite() {
                return Err(Error::Validation(format!("row {i} has an invalid right-hand side")));
            }
            b[i] = r.rhs;
        }
        Ok((a, b))
    };
    let (mut ae, mut be) = dense(&p.eq)?;
    let (mut au, mut bu) = dense(&p.le)?;
    let mut cost = p.cost.clone();

    // Row equilibration.
    for (row, b) in ae.iter_mut().zip(be.iter_mut()).chain(au.iter_mut().zip(bu.iter_mut())) {
        let s = row.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
            *b /= s;
        }
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Role {
        Active,
        Fixed(f64),
        Eliminated,
    }
    let mut role = vec![Role::Active; n];
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j]);
        if l.is_finite() && u.is_finite() && u - l <= 1e-13 * l.abs().max(1.0) {
            role[j] = Role::Fixed(l);
            for (row, b) in ae.iter_mut().zip(be.iter_mut()).chain(au.iter_mut().zip(bu.iter_mut())) {
                *b -= row[j] * l;
                row[j] = 0.0;
            }
            cost[j] = 0.0;
        }
    }

    // Free-variable elimination with complete pivoting.
    let free: Vec<usize> =
        (0..n).filter(|&j| role[j] == Role::Active && p.lower[j] == f64::NEG_INFINITY && p.upper[j] == f64::INFINITY).collect();
    let mut row_used = vec![false; ae.len()];
    let mut elims = Vec::new();
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        for (i, row) in ae.iter().enumerate() {
            if row_used[i] {
                continue;
            }
            for &j in &free {
                if role[j] != Role::Active {
                    continue;
                }
                let a = row[j].abs();
                if a > PIVOT_TOL && best.is_none_or(|(_, _, b)| a > b) {
                    best = Some((i, j, a));
                }
            }
        }
        let Some((r, j, _)) = best else { break };
        row_used[r] = true;
        role[j] = Role::Eliminated;
        let prow = ae[r].clone();
        let pb = be[r];
        let piv = prow[j];
        let apply = |row: &mut Vec<f64>, b: &mut f64| {
            let f = row[j] / piv;
            if f != 0.0 {
                for (k, v) in row.iter_mut().enumerate() {
                    *v -= f * prow[k];
                }
                row[j] = 0.0;
                *b -= f * pb;
            }
        };
        for i in 0..ae.len() {
            if !row_used[i] {
                let (row, b) = (&mut ae[i], &mut be[i]);
                apply(row, b);
            }
        }
        for i in 0..au.len() {
            let (row, b) = (&mut au[i], &mut bu[i]);
            apply(row, b);
        }
        let mut unused = 0.0;
        apply(&mut cost, &mut unused);
        elims.push(Elimination { var: j, row: prow, rhs: pb });
    }

    // Remaining structure over the active variables.
    let vars: Vec<usize> = (0..n).filter(|&j| role[j] == Role::Active).collect();
    let mut rows_eq: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..ae.len() {
        if row_used[i] {
            continue;
        }
        let coefs: Vec<f64> = vars.iter().map(|&j| ae[i][j]).collect();
        if coefs.iter().all(|v| v.abs() <= ZERO_ROW_TOL) {
            if be[i].abs() > 1e-8 {
                return Err(Error::LpInfeasible);
            }
            continue;
        }
        rows_eq.push((coefs, be[i]));
    }
    let mut rows_le: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..au.len() {
        let coefs: Vec<f64> = vars.iter().map(|&j| au[i][j]).collect();
        if coefs.iter().all(|v| v.abs() <= ZERO_ROW_TOL) {
            if bu[i] < -1e-8 {
                return Err(Error::LpInfeasible);
            }
            continue;
        }
        rows_le.push((coefs, bu[i]));
    }
    let red_cost: Vec<f64> = vars.iter().map(|&j| cost[j]).collect();
    let lo: Vec<f64> = vars.iter().map(|&j| p.lower[j]).collect();
    let up: Vec<f64> = vars.iter().map(|&j| p.upper[j]).collect();

    let (xr, iterations) = bounded_simplex(&red_cost, &lo, &up, &rows_eq, &rows_le)?;

    let mut x = vec![0.0; n];
    for j in 0..n {
        if let Role::Fixed(v) = role[j] {
            x[j] = v;
        }
    }
    for (k, &j) in vars.iter().enumerate() {
        x[j] = xr[k];
    }
    for e in elims.iter().rev() {
        let mut s = e.rhs;
        for (k, &a) in e.row.iter().enumerate() {
            if k != e.var && a != 0.0 {
                s -= a * x[k];
            }
        }
        x[e.var] = s / e.row[e.var];
    }
    let objective = p.objective(&x);
    Ok(LpSolution { x, objective, iterations })
}

#[derive(Clone, Copy, PartialEq, Debug)]
enum Status {
    Basic,
    Lower,
    Upper,
    /// Free nonbasic variable resting at zero.
    Zero,
}

struct Tableau {
    m: usize,
    ncol: usize,
    t: Vec<f64>,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    basis: Vec<usize>,
    iterations: usize,
}

impl Tableau {
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncol + j]
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let nc = self.ncol;
        let piv = self.t[r * nc + j];
        for k in 0..nc {
            self.t[r * nc + k] /= piv;
        }
        let (before, rest) = self.t.split_at_mut(r * nc);
        let (prow, after) = rest.split_at_mut(nc);
        for row in before.chunks_mut(nc).chain(after.chunks_mut(nc)) {
            let f = row[j];
            if f != 0.0 {
                for (v, p) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * p;
                }
                row[j] = 0.0;
            }
        }
        prow[j] = 1.0;
        self.basis[r] = j;
        self.status[j] = Status::Basic;
    }

    /// Runs primal simplex iterations for `cost`. Returns false when unbounded.
    fn optimize(&mut self, cost: &[f64], max_iter: usize) -> Result<bool> {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= max_iter {
                return Err(Error::Validation("simplex iteration limit reached".into()));
            }
            let mut d = cost.to_vec();
            for i in 0..self.m {
                let cb = cost[self.basis[i]];
                if cb != 0.0 {
                    let row = &self.t[i * self.ncol..(i + 1) * self.ncol];
                    for (dj, &tij) in d.iter_mut().zip(row) {
                        *dj -= cb * tij;
                    }
                }
            }
            let bland = degenerate > BLAND_AFTER;
            let mut enter: Option<(usize, f64, f64)> = None;
            for j in 0..self.ncol {
                if self.lo[j] == self.up[j] {
                    continue;
                }
                let dir = match self.status[j] {
                    Status::Basic => continue,
                    Status::Lower if d[j] < -OPT_TOL => 1.0,
                    Status::Upper if d[j] > OPT_TOL => -1.0,
                    Status::Zero if d[j].abs() > OPT_TOL => -d[j].signum(),
                    _ => continue,
                };
                let score = d[j].abs();
                if bland {
                    enter = Some((j, dir, score));
                    break;
                }
                if enter.is_none_or(|(_, _, s)| score > s) {
                    enter = Some((j, dir, score));
                }
            }
            let Some((j, dir, _)) = enter else { return Ok(true) };

            let mut step = f64::INFINITY;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let coef = dir * self.at(i, j);
                let b = self.basis[i];
                let lim = if coef > PIVOT_TOL && self.lo[b].is_finite() {
                    (self.x[b] - self.lo[b]).max(0.0) / coef
                } else if coef < -PIVOT_TOL && self.up[b].is_finite() {
                    (self.up[b] - self.x[b]).max(0.0) / -coef
                } else {
                    continue;
                };
                // Among near-ties prefer the largest pivot.
                let take = match leave {
                    None => true,
                    Some((_, c)) => lim < step - 1e-12 || (lim <= step + 1e-12 && coef.abs() > c.abs()),
                };
                if take {
                    step = step.min(lim);
                    leave = Some((i, coef));
                }
            }
            let range = self.up[j] - self.lo[j];
            let flip = range.is_finite() && range <= step;
            if flip {
                step = range;
            }
            if !step.is_finite() {
                return Ok(false);
            }
            degenerate = if step <= 1e-12 { degenerate + 1 } else { 0 };

            self.x[j] += dir * step;
            for i in 0..self.m {
                let tij = self.at(i, j);
                if tij != 0.0 {
                    let b = self.basis[i];
                    self.x[b] -= dir * step * tij;
                }
            }
            self.iterations += 1;
            if flip {
                self.status[j] = if dir > 0.0 { Status::Upper } else { Status::Lower };
                self.x[j] = if dir > 0.0 { self.up[j] } else { self.lo[j] };
                continue;
            }
            let (r, coef) = leave.expect("bounded step has a leaving row");
            let b = self.basis[r];
            if coef > 0.0 {
                self.x[b] = self.lo[b];
                self.status[b] = Status::Lower;
            } else {
                self.x[b] = self.up[b];
                self.status[b] = Status::Upper;
            }
            self.pivot(r, j);
        }
    }
}

/// Bounded-variable two-phase primal simplex on dense rows.
fn bounded_simplex(
    cost: &[f64],
    lo: &[f64],
    up: &[f64],
    eq: &[(Vec<f64>, f64)],
    le: &[(Vec<f64>, f64)],
) -> Result<(Vec<f64>, usize)> {
    let nv = cost.len();
    let m = eq.len() + le.len();
    let ns = le.len();
    let ncol = nv + ns + m;
    let mut tab = Tableau {
        m,
        ncol,
        t: vec![0.0; m * ncol],
        lo: vec![0.0; ncol],
        up: vec![f64::INFINITY; ncol],
        x: vec![0.0; ncol],
        status: vec![Status::Lower; ncol],
        basis: vec![0; m],
        iterations: 0,
    };
    for j in 0..nv {
        tab.lo[j] = lo[j];
        tab.up[j] = up[j];
        let (l, u) = (lo[j], up[j]);
        let (val, st) = match (l.is_finite(), u.is_finite()) {
            (true, true) => {
                if l.abs() <= u.abs() {
                    (l, Status::Lower)
                } else {
                    (u, Status::Upper)
                }
            }
            (true, false) => (l, Status::Lower),
            (false, true) => (u, Status::Upper),
            (false, false) => (0.0, Status::Zero),
        };
        tab.x[j] = val;
        tab.status[j] = st;
    }

    let rows: Vec<(&Vec<f64>, f64, bool)> =
        eq.iter().map(|(a, b)| (a, *b, false)).chain(le.iter().map(|(a, b)| (a, *b, true))).collect();
    let mut phase1 = vec![0.0; ncol];
    let mut slack_k = 0;
    let mut slack_row = Vec::with_capacity(ns);
    let mut art_sign = vec![1.0; m];
    for (i, (a, b, is_le)) in rows.iter().enumerate() {
        let resid = b - a.iter().zip(&tab.x[..nv]).map(|(c, v)| c * v).sum::<f64>();
        let slack = if *is_le {
            let s = nv + slack_k;
            slack_k += 1;
            slack_row.push(i);
            Some(s)
        } else {
            None
        };
        let art = nv + ns + i;
        let row = &mut tab.t[i * ncol..(i + 1) * ncol];
        row[..nv].copy_from_slice(a);
        if let Some(s) = slack {
            row[s] = 1.0;
        }
        if let (Some(s), true) = (slack, resid >= 0.0) {
            tab.basis[i] = s;
            tab.status[s] = Status::Basic;
            tab.x[s] = resid;
            // Artificial column unused: pin it at zero.
            tab.up[art] = 0.0;
        } else {
            let sign = if resid >= 0.0 { 1.0 } else { -1.0 };
            row[art] = sign;
            art_sign[i] = sign;
            // Make the basic column +1 by scaling the row.
            if sign < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            tab.basis[i] = art;
            tab.status[art] = Status::Basic;
            tab.x[art] = resid.abs();
            phase1[art] = 1.0;
        }
    }

    let max_iter = 50 * (m + ncol) + 1000;
    if phase1.iter().any(|&c| c != 0.0) {
        if !tab.optimize(&phase1, max_iter)? {
            return Err(Error::LpInfeasible);
        }
        let infeas: f64 = (nv + ns..ncol).map(|j| tab.x[j].abs()).sum();
        if infeas > FEAS_TOL * (1.0 + rows.iter().map(|r| r.1.abs()).fold(0.0, f64::max)) {
            return Err(Error::LpInfeasible);
        }
    }
    for j in nv + ns..ncol {
        tab.up[j] = 0.0;
        tab.lo[j] = 0.0;
        if tab.status[j] != Status::Basic {
            tab.x[j] = 0.0;
            tab.status[j] = Status::Lower;
        }
    }
    let mut full_cost = vec![0.0; ncol];
    full_cost[..nv].copy_from_slice(cost);
    if !tab.optimize(&full_cost, max_iter)? {
        return Err(Error::LpUnbounded);
    }

    refine_basic(&mut tab, &rows, nv, &slack_row, &art_sign);
    Ok((tab.x[..nv].to_vec(), tab.iterations))
}

/// Recomputes basic values from the original rows with a fresh factorization.
fn refine_basic(tab: &mut Tableau, rows: &[(&Vec<f64>, f64, bool)], nv: usize, slack_row: &[usize], art_sign: &[f64]) {
    let m = tab.m;
    if m == 0 {
        return;
    }
    let ns = slack_row.len();
    let col = |i: usize, j: usize| -> f64 {
        if j < nv {
            rows[i].0[j]
        } else if j < nv + ns {
            if slack_row[j - nv] == i {
                1.0
            } else {
                0.0
            }
        } else if j - nv - ns == i {
            art_sign[i]
        } else {
            0.0
        }
    };
    let bmat = DMatrix::from_fn(m, m, |i, k| col(i, tab.basis[k]));
    let mut rhs = DVector::from_fn(m, |i, _| rows[i].1);
    for j in 0..tab.ncol {
        if tab.status[j] != Status::Basic && tab.x[j] != 0.0 {
            for i in 0..m {
                rhs[i] -= col(i, j) * tab.x[j];
            }
        }
    }
    if let Some(sol) = bmat.lu().solve(&rhs) {
        let ok = (0..m).all(|k| {
            let b = tab.basis[k];
            sol[k] >= tab.lo[b] - 1e-7 && sol[k] <= tab.up[b] + 1e-7 && (sol[k] - tab.x[b]).abs() <= 1e-6 * (1.0 + tab.x[b].abs())
        });
        if ok {
            for k in 0..m {
                let b = tab.basis[k];
                tab.x[b] = sol[k].clamp(tab.lo[b], tab.up[b]);
            }
        }
    }
}
