//! Independent simplex oracle and random test problems.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ssdr::ilp::LpProblem;

#[derive(Debug, PartialEq)]
pub enum Outcome {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Textbook two-phase tableau simplex with Bland's rule on
/// `min cᵀx, Ax = b, x ≥ 0`, `b ≥ 0`.
pub fn tableau_simplex(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Outcome {
    let (m, n) = (a.len(), c.len());
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let mut row = a[i].clone();
            row.extend((0..m).map(|k| if k == i { 1.0 } else { 0.0 }));
            row.push(b[i]);
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let pivot = |t: &mut Vec<Vec<f64>>, obj: &mut Vec<f64>, r: usize, col: usize| {
        let p = t[r][col];
        t[r].iter_mut().for_each(|v| *v /= p);
        let pr = t[r].clone();
        for (i, row) in t.iter_mut().enumerate() {
            if i != r && row[col] != 0.0 {
                let f = row[col];
                row.iter_mut().zip(&pr).for_each(|(v, q)| *v -= f * q);
            }
        }
        let f = obj[col];
        obj.iter_mut().zip(&pr).for_each(|(v, q)| *v -= f * q);
    };
    // Reduced-cost row `obj[j]` for each column, with the negated objective in the last slot.
    let run = |t: &mut Vec<Vec<f64>>, obj: &mut Vec<f64>, basis: &mut Vec<usize>, allowed: usize| -> bool {
        loop {
            let Some(col) = (0..allowed).find(|&j| obj[j] < -1e-10) else { return true };
            let mut best: Option<(f64, usize)> = None;
            for i in 0..m {
                if t[i][col] > 1e-10 {
                    let ratio = t[i][width - 1] / t[i][col];
                    let better = match best {
                        None => true,
                        Some((r, bi)) => ratio < r - 1e-12 || (ratio <= r + 1e-12 && basis[i] < basis[bi]),
                    };
                    if better {
                        best = Some((ratio, i));
                    }
                }
            }
            let Some((_, r)) = best else { return false };
            pivot(t, obj, r, col);
            basis[r] = col;
        }
    };

    let mut obj = vec![0.0; width];
    for j in n..n + m {
        obj[j] = 1.0;
    }
    for row in &t {
        obj.iter_mut().zip(row).for_each(|(v, q)| *v -= q);
    }
    run(&mut t, &mut obj, &mut basis, n + m);
    if -obj[width - 1] > 1e-7 {
        return Outcome::Infeasible;
    }
    // Drive artificials out of the basis where possible.
    for r in 0..m {
        if basis[r] >= n {
            if let Some(col) = (0..n).find(|&j| t[r][j].abs() > 1e-9) {
                let mut dummy = vec![0.0; width];
                pivot(&mut t, &mut dummy, r, col);
                basis[r] = col;
            }
        }
    }
    let mut obj = vec![0.0; width];
    obj[..n].copy_from_slice(c);
    for (r, &bj) in basis.iter().enumerate() {
        if bj < n && obj[bj] != 0.0 {
            let f = obj[bj];
            obj.iter_mut().zip(&t[r]).for_each(|(v, q)| *v -= f * q);
        }
    }
    // Artificials stuck in the basis sit on zero rows and are never re-entered.
    if !run(&mut t, &mut obj, &mut basis, n) {
        return Outcome::Unbounded;
    }
    Outcome::Optimal(-obj[width - 1])
}

/// Rewrites a bounded-variable problem in standard form and solves it.
pub fn oracle(p: &LpProblem) -> Outcome {
    let n = p.n();
    if (0..n).any(|j| p.lower[j] > p.upper[j]) {
        return Outcome::Infeasible;
    }
    // Each original variable becomes `offset + Σ sign·x'` over its columns.
    let mut cols: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut offset = vec![0.0; n];
    let mut extra_rows: Vec<(Vec<(usize, f64)>, f64)> = Vec::new();
    let mut nv = 0;
    for j in 0..n {
        let (l, u) = (p.lower[j], p.upper[j]);
        if l.is_finite() {
            offset[j] = l;
            cols.push(vec![(nv, 1.0)]);
            if u.is_finite() {
                extra_rows.push((vec![(nv, 1.0)], u - l));
            }
            nv += 1;
        } else if u.is_finite() {
            offset[j] = u;
            cols.push(vec![(nv, -1.0)]);
            nv += 1;
        } else {
            cols.push(vec![(nv, 1.0), (nv + 1, -1.0)]);
            nv += 2;
        }
    }
    let expand = |coefs: &[(usize, f64)]| -> (Vec<f64>, f64) {
        let mut row = vec![0.0; nv];
        let mut shift = 0.0;
        for &(j, v) in coefs {
            shift += v * offset[j];
            for &(k, s) in &cols[j] {
                row[k] += v * s;
            }
        }
        (row, shift)
    };
    let n_slack = p.le.len() + extra_rows.len();
    let total = nv + n_slack;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for r in &p.eq {
        let (mut row, shift) = expand(&r.coefs);
        row.resize(total, 0.0);
        a.push(row);
        b.push(r.rhs - shift);
    }
    let mut s = nv;
    for r in &p.le {
        let (mut row, shift) = expand(&r.coefs);
        row.resize(total, 0.0);
        row[s] = 1.0;
        s += 1;
        a.push(row);
        b.push(r.rhs - shift);
    }
    for (coefs, rhs) in &extra_rows {
        let mut row = vec![0.0; total];
        for &(k, v) in coefs {
            row[k] = v;
        }
        row[s] = 1.0;
        s += 1;
        a.push(row);
        b.push(*rhs);
    }
    for i in 0..a.len() {
        if b[i] < 0.0 {
            a[i].iter_mut().for_each(|v| *v = -*v);
            b[i] = -b[i];
        }
    }
    let (cost_row, shift) = expand(&p.cost.iter().copied().enumerate().collect::<Vec<_>>());
    let mut c = cost_row;
    c.resize(total, 0.0);
    match tableau_simplex(&a, &b, &c) {
        Outcome::Optimal(v) => Outcome::Optimal(v + shift),
        other => other,
    }
}

pub fn random_lp(rng: &mut ChaCha8Rng) -> LpProblem {
    let n = rng.random_range(3..=20);
    let mut p = LpProblem::new();
    let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
    let feasible = rng.random_bool(0.85);
    for &x in &x0 {
        let (lo, hi) = match rng.random_range(0..5) {
            0 => (f64::NEG_INFINITY, f64::INFINITY),
            1 => (x - rng.random_range(0.0..3.0), f64::INFINITY),
            2 => (f64::NEG_INFINITY, x + rng.random_range(0.0..3.0)),
            3 => (x, x),
            _ => (x - rng.random_range(0.0..3.0), x + rng.random_range(0.0..3.0)),
        };
        p.add_var(lo, hi, rng.random_range(-2.0..2.0));
    }
    let sparse_row = |rng: &mut ChaCha8Rng| -> Vec<(usize, f64)> {
        let mut row = Vec::new();
        for j in 0..n {
            if rng.random_bool(0.5) {
                row.push((j, rng.random_range(-3.0..3.0)));
            }
        }
        row
    };
    let dot = |row: &[(usize, f64)]| row.iter().map(|&(j, v)| v * x0[j]).sum::<f64>();
    for _ in 0..rng.random_range(0..=n / 3) {
        let row = sparse_row(rng);
        let rhs = dot(&row) + if feasible { 0.0 } else { rng.random_range(-1.0..1.0) };
        p.add_eq(row, rhs);
    }
    for _ in 0..rng.random_range(1..=n) {
        let row = sparse_row(rng);
        let rhs = dot(&row) + rng.random_range(if feasible { 0.0 } else { -2.0 }..2.0);
        p.add_le(row, rhs);
    }
    // A box around x0 in most problems keeps them bounded.
    if rng.random_bool(0.8) {
        for j in 0..n {
            let w = rng.random_range(1.0..10.0);
            p.add_le(vec![(j, 1.0)], x0[j] + w);
            p.add_ge(vec![(j, 1.0)], x0[j] - w);
        }
    }
    p
}
