//! Newton-Raphson solution of the polar AC power-flow equations.
//!
//! Unknowns are the angles of every non-slack bus and the magnitudes of PQ
//! buses. Generator reactive limits are not enforced here; the optimizer
//! carries them as constraints instead.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::netcase::{admittance, BusKind, SystemCase};

/// Per-bus demand in per-unit.
#[derive(Clone, Debug, PartialEq)]
pub struct Demand {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

impl Demand {
    pub fn nominal(case: &SystemCase) -> Demand {
        Demand {
            p: case.buses.iter().map(|b| case.to_pu(b.p_d0)).collect(),
            q: case.buses.iter().map(|b| case.to_pu(b.q_d0)).collect(),
        }
    }

    pub fn zero(n: usize) -> Demand {
        Demand { p: vec![0.0; n], q: vec![0.0; n] }
    }
}

/// Scheduled real power of every machine at its nominal value, per-unit.
pub fn nominal_generation(case: &SystemCase) -> Vec<f64> {
    case.machines.iter().map(|m| case.to_pu(m.p_g0)).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct PowerFlowOptions {
    /// Infinity-norm mismatch tolerance, pu.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerFlowOptions {
    fn default() -> Self {
        PowerFlowOptions { tol: 1e-8, max_iter: 30 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerFlowState {
    pub v: Vec<f64>,
    pub theta: Vec<f64>,
    /// Real power of each machine, pu.
    pub p_g: Vec<f64>,
    /// Reactive power of each machine, pu.
    pub q_g: Vec<f64>,
    pub iterations: usize,
    pub mismatch: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// Power leaving the branch's `from` end.
    FromTo,
    /// Power leaving the branch's `to` end.
    ToFrom,
}

pub fn solve_power_flow(
    case: &SystemCase,
    demand: &Demand,
    generation: &[f64],
    initial: Option<&PowerFlowState>,
) -> Result<PowerFlowState> {
    solve_power_flow_with(case, demand, generation, initial, PowerFlowOptions::default())
}

pub fn solve_power_flow_with(
    case: &SystemCase,
    demand: &Demand,
    generation: &[f64],
    initial: Option<&PowerFlowState>,
    opts: PowerFlowOptions,
) -> Result<PowerFlowState> {
    let n = case.n_bus();
    if demand.p.len() != n || demand.q.len() != n {
        return Err(Error::Dimension(format!("demand has {} entries, case has {n} buses", demand.p.len())));
    }
    if generation.len() != case.machines.len() {
        return Err(Error::Dimension(format!(
            "generation has {} entries, case has {} machines",
            generation.len(),
            case.machines.len()
        )));
    }
    let ybus = admittance(case)?;
    let (g, b) = split(&ybus);

    // Net scheduled injection at every bus (slack entry unused).
    let mut p_sched: Vec<f64> = demand.p.iter().map(|p| -p).collect();
    let q_sched: Vec<f64> = demand.q.iter().map(|q| -q).collect();
    for (k, m) in case.machines.iter().enumerate() {
        let i = case.bus_index(m.bus).unwrap();
        p_sched[i] += generation[k];
    }

    let slack = case.slack_index();
    let ang: Vec<usize> = (0..n).filter(|&i| i != slack).collect();
    let mag: Vec<usize> = (0..n).filter(|&i| case.buses[i].kind == BusKind::Pq).collect();

    let (mut v, mut theta) = match initial {
        Some(s) if s.v.len() == n => (s.v.clone(), s.theta.clone()),
        _ => (case.buses.iter().map(|b| b.v0).collect::<Vec<_>>(), vec![0.0; n]),
    };
    for (i, bus) in case.buses.iter().enumerate() {
        if bus.kind != BusKind::Pq {
            v[i] = bus.v0;
        }
    }
    theta[slack] = 0.0;

    let nu = ang.len() + mag.len();
    let mut iterations = 0;
    let mut converged_at = None;
    loop {
        let (p, q) = injections(&g, &b, &v, &theta);
        let mut f = DVector::zeros(nu);
        for (r, &i) in ang.iter().enumerate() {
            f[r] = p[i] - p_sched[i];
        }
        for (r, &i) in mag.iter().enumerate() {
            f[ang.len() + r] = q[i] - q_sched[i];
        }
        let norm = f.amax();
        if !norm.is_finite() {
            return Err(Error::PowerFlowDiverged { iterations, mismatch: norm });
        }
        if norm <= opts.tol {
            // One extra Newton step once inside the tolerance leaves the
            // residual near round-off, which equilibrium initialization needs.
            match converged_at {
                Some(_) => break,
                None => converged_at = Some(iterations),
            }
            if norm < 1e-13 {
                break;
            }
        }
        if iterations >= opts.max_iter {
            if converged_at.is_some() {
                break;
            }
            return Err(Error::PowerFlowDiverged { iterations, mismatch: norm });
        }
        let jac = newton_jacobian(&g, &b, &v, &theta, &p, &q, &ang, &mag);
        let lu = jac.lu();
        let dx = lu.solve(&(-f)).ok_or(Error::Singular("power-flow Jacobian"))?;
        for (r, &i) in ang.iter().enumerate() {
            theta[i] += dx[r];
        }
        for (r, &i) in mag.iter().enumerate() {
            v[i] += dx[ang.len() + r];
        }
        iterations += 1;
    }

    let (p, q) = injections(&g, &b, &v, &theta);
    let mut p_g = generation.to_vec();
    let mut q_g = vec![0.0; case.machines.len()];
    for (k, m) in case.machines.iter().enumerate() {
        let i = case.bus_index(m.bus).unwrap();
        if i == slack {
            p_g[k] = p[i] + demand.p[i];
        }
        q_g[k] = q[i] + demand.q[i];
    }
    let state = PowerFlowState { v, theta, p_g, q_g, iterations, mismatch: 0.0 };
    let mismatch = bus_mismatch(case, &state, demand)?.into_iter().fold(0.0, |a: f64, r| a.max(r.abs()));
    Ok(PowerFlowState { mismatch, ..state })
}

/// Residual of both power-balance equations at every bus, interleaved as
/// `[P_1, Q_1, P_2, Q_2, ...]`.
pub fn bus_mismatch(case: &SystemCase, state: &PowerFlowState, demand: &Demand) -> Result<Vec<f64>> {
    let ybus = admittance(case)?;
    let (g, b) = split(&ybus);
    let (p, q) = injections(&g, &b, &state.v, &state.theta);
    let mut out = Vec::with_capacity(2 * p.len());
    let mut pg = vec![0.0; p.len()];
    let mut qg = vec![0.0; p.len()];
    for (k, m) in case.machines.iter().enumerate() {
        let i = case.bus_index(m.bus).unwrap();
        pg[i] += state.p_g[k];
        qg[i] += state.q_g[k];
    }
    for i in 0..p.len() {
        out.push(p[i] - pg[i] + demand.p[i]);
        out.push(q[i] - qg[i] + demand.q[i]);
    }
    Ok(out)
}

pub(crate) fn split(y: &DMatrix<Complex64>) -> (DMatrix<f64>, DMatrix<f64>) {
    (y.map(|c| c.re), y.map(|c| c.im))
}

/// Real and reactive injections `V_i sum_j V_j (G cos + B sin)` and
/// `V_i sum_j V_j (G sin - B cos)`.
pub(crate) fn injections(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &[f64],
    theta: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            let (gij, bij) = (g[(i, j)], b[(i, j)]);
            if gij == 0.0 && bij == 0.0 {
                continue;
            }
            let (s, c) = (theta[i] - theta[j]).sin_cos();
            p[i] += v[i] * v[j] * (gij * c + bij * s);
            q[i] += v[i] * v[j] * (gij * s - bij * c);
        }
    }
    (p, q)
}

#[allow(clippy::too_many_arguments)]
fn newton_jacobian(
    g: &DMatrix<f64>,
    b: &DMatrix<f64>,
    v: &[f64],
    theta: &[f64],
    p: &[f64],
    q: &[f64],
    ang: &[usize],
    mag: &[usize],
) -> DMatrix<f64> {
    let n = v.len();
    // Full partials, then pick rows/columns.
    let mut dp_dth = DMatrix::zeros(n, n);
    let mut dp_dv = DMatrix::zeros(n, n);
    let mut dq_dth = DMatrix::zeros(n, n);
    let mut dq_dv = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let (gij, bij) = (g[(i, j)], b[(i, j)]);
            if i == j {
                dp_dth[(i, i)] = -q[i] - v[i] * v[i] * bij;
                dp_dv[(i, i)] = p[i] / v[i] + v[i] * gij;
                dq_dth[(i, i)] = p[i] - v[i] * v[i] * gij;
                dq_dv[(i, i)] = q[i] / v[i] - v[i] * bij;
            } else {
                if gij == 0.0 && bij == 0.0 {
                    continue;
                }
                let (s, c) = (theta[i] - theta[j]).sin_cos();
                dp_dth[(i, j)] = v[i] * v[j] * (gij * s - bij * c);
                dp_dv[(i, j)] = v[i] * (gij * c + bij * s);
                dq_dth[(i, j)] = -v[i] * v[j] * (gij * c + bij * s);
                dq_dv[(i, j)] = v[i] * (gij * s - bij * c);
            }
        }
    }
    let na = ang.len();
    let nu = na + mag.len();
    let mut jac = DMatrix::zeros(nu, nu);
    for (r, &i) in ang.iter().enumerate() {
        for (c, &j) in ang.iter().enumerate() {
            jac[(r, c)] = dp_dth[(i, j)];
        }
        for (c, &j) in mag.iter().enumerate() {
            jac[(r, na + c)] = dp_dv[(i, j)];
        }
    }
    for (r, &i) in mag.iter().enumerate() {
        for (c, &j) in ang.iter().enumerate() {
            jac[(na + r, c)] = dq_dth[(i, j)];
        }
        for (c, &j) in mag.iter().enumerate() {
            jac[(na + r, na + c)] = dq_dv[(i, j)];
        }
    }
    jac
}

/// Series admittance `g + jb` of a branch.
fn series_admittance(case: &SystemCase, branch: usize) -> Result<(usize, usize, Complex64)> {
    let br = case.branches.get(branch).ok_or(Error::UnknownBranch(branch))?;
    let z = Complex64::new(br.r, br.x);
    if z.norm() == 0.0 {
        return Err(Error::ZeroImpedance { from: br.from, to: br.to });
    }
    Ok((case.bus_index(br.from).unwrap(), case.bus_index(br.to).unwrap(), z.inv()))
}

/// Sending-end real power on a branch in the given direction, MW.
pub fn branch_flow(case: &SystemCase, state: &PowerFlowState, branch: usize, dir: Direction) -> Result<f64> {
    let (f, t, y) = series_admittance(case, branch)?;
    let (i, j) = match dir {
        Direction::FromTo => (f, t),
        Direction::ToFrom => (t, f),
    };
    Ok(case.to_mw(sending_power(y, state.v[i], state.v[j], state.theta[i] - state.theta[j])))
}

/// `g V_i^2 - V_i V_j (g cos(th) + b sin(th))`. Charging susceptance carries
/// no real power.
pub(crate) fn sending_power(y: Complex64, vi: f64, vj: f64, th: f64) -> f64 {
    let (s, c) = th.sin_cos();
    y.re * vi * vi - vi * vj * (y.re * c + y.im * s)
}

/// Gradient of [`branch_flow`] (in pu) with respect to `(V_i, V_j, th_i, th_j)`
/// of the sending and receiving buses.
pub(crate) fn branch_flow_gradient(
    case: &SystemCase,
    state: &PowerFlowState,
    branch: usize,
    dir: Direction,
) -> Result<(usize, usize, [f64; 4])> {
    let (f, t, y) = series_admittance(case, branch)?;
    let (i, j) = match dir {
        Direction::FromTo => (f, t),
        Direction::ToFrom => (t, f),
    };
    let (vi, vj) = (state.v[i], state.v[j]);
    let (s, c) = (state.theta[i] - state.theta[j]).sin_cos();
    let a = y.re * c + y.im * s;
    let da_dth = -y.re * s + y.im * c;
    Ok((i, j, [2.0 * y.re * vi - vj * a, -vi * a, -vi * vj * da_dth, vi * vj * da_dth]))
}

/// Total series and shunt real losses, pu.
pub fn total_losses(case: &SystemCase, state: &PowerFlowState) -> Result<f64> {
    let mut loss = 0.0;
    for k in 0..case.branches.len() {
        loss += branch_flow(case, state, k, Direction::FromTo)? + branch_flow(case, state, k, Direction::ToFrom)?;
    }
    let mut total = case.to_pu(loss);
    for (i, bus) in case.buses.iter().enumerate() {
        total += case.to_pu(bus.g_sh) * state.v[i] * state.v[i];
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcase::parse_case;

    fn two_bus(r: f64, load: f64) -> SystemCase {
        parse_case(&format!(
            "[BUS]\n1 slack 1.0 0 0 0.9 1.1\n2 pv 1.0 {load} 0 0.9 1.1\n[BRANCH]\n1 2 {r} 0.1 0 inf\n\
             [MACHINE]\n1 5 1 0 0.3 0.3 0 0 0 -inf inf -inf inf\n2 5 1 0 0.3 0.3 0 0 0 -inf inf -inf inf\n"
        ))
        .unwrap()
    }

    #[test]
    fn zero_load_flat_start_is_fixed_point() {
        let case = two_bus(0.0, 0.0);
        let pf = solve_power_flow(&case, &Demand::nominal(&case), &[0.0, 0.0], None).unwrap();
        assert_eq!(pf.theta, vec![0.0, 0.0]);
        assert_eq!(pf.v, vec![1.0, 1.0]);
        assert!(pf.p_g[0].abs() < 1e-15);
        for k in 0..2 {
            assert_eq!(branch_flow(&case, &pf, 0, if k == 0 { Direction::FromTo } else { Direction::ToFrom }).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_bus_lossless_closed_form() {
        // P = V1 V2 sin(th1 - th2) / x with both magnitudes held at 1.
        let case = two_bus(0.0, 10.0);
        let pf = solve_power_flow(&case, &Demand::nominal(&case), &[0.0, 0.0], None).unwrap();
        let expected = -(0.01f64).asin();
        assert!((pf.theta[1] - expected).abs() < 1e-9);
        assert!((pf.p_g[0] - 0.1).abs() < 1e-9);
        let fwd = branch_flow(&case, &pf, 0, Direction::FromTo).unwrap();
        let rev = branch_flow(&case, &pf, 0, Direction::ToFrom).unwrap();
        assert!((fwd + rev).abs() < 1e-9);
    }

    #[test]
    fn lossy_branch_loss_matches_i2r() {
        let case = two_bus(0.02, 30.0);
        let pf = solve_power_flow(&case, &Demand::nominal(&case), &[0.0, 0.0], None).unwrap();
        let fwd = branch_flow(&case, &pf, 0, Direction::FromTo).unwrap();
        let rev = branch_flow(&case, &pf, 0, Direction::ToFrom).unwrap();
        let v1 = Complex64::from_polar(pf.v[0], pf.theta[0]);
        let v2 = Complex64::from_polar(pf.v[1], pf.theta[1]);
        let i = (v1 - v2) / Complex64::new(0.02, 0.1);
        let i2r = case.to_mw(i.norm_sqr() * 0.02);
        assert!(fwd + rev > 0.0);
        assert!((fwd + rev - i2r).abs() < 1e-9);
    }

    #[test]
    fn rejects_wrong_dimensions() {
        let case = two_bus(0.0, 0.0);
        let err = solve_power_flow(&case, &Demand::zero(3), &[0.0, 0.0], None).unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn gradient_matches_finite_difference() {
        let case = two_bus(0.03, 40.0);
        let pf = solve_power_flow(&case, &Demand::nominal(&case), &[0.0, 0.0], None).unwrap();
        let (i, j, grad) = branch_flow_gradient(&case, &pf, 0, Direction::ToFrom).unwrap();
        let h = 1e-6;
        let eval = |dv: [f64; 4]| {
            let mut s = pf.clone();
            s.v[i] += dv[0];
            s.v[j] += dv[1];
            s.theta[i] += dv[2];
            s.theta[j] += dv[3];
            case.to_pu(branch_flow(&case, &s, 0, Direction::ToFrom).unwrap())
        };
        for k in 0..4 {
            let mut e = [0.0; 4];
            e[k] = h;
            let plus = eval(e);
            e[k] = -h;
            let minus = eval(e);
            assert!(((plus - minus) / (2.0 * h) - grad[k]).abs() < 1e-7);
        }
    }
}
