#![allow(dead_code)]

pub mod checks;
pub mod simplex;

use num_complex::Complex64;
use ssdr::netcase::{admittance, load_case, SystemCase};
use ssdr::powerflow::{Demand, PowerFlowState};

pub fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

pub fn smib() -> SystemCase {
    load_case(data("smib.case")).unwrap()
}

pub fn three_bus() -> SystemCase {
    load_case(data("three_bus.case")).unwrap()
}

pub fn ieee14() -> SystemCase {
    ssdr::netcase::ieee14()
}

pub fn rel_err(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / b.abs().max(floor)
}

/// Complex power balance `V_i conj(Σ_j Y_ij V_j) - S_g + S_d` at every bus.
pub fn pf_residual(case: &SystemCase, pf: &PowerFlowState, demand: &Demand) -> f64 {
    let y = admittance(case).unwrap();
    let n = case.buses.len();
    let v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(pf.v[i], pf.theta[i])).collect();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let current: Complex64 = (0..n).map(|j| y[(i, j)] * v[j]).sum();
        let mut s = v[i] * current.conj() + Complex64::new(demand.p[i], demand.q[i]);
        if let Some(k) = case.machine_at(case.buses[i].id) {
            s -= Complex64::new(pf.p_g[k], pf.q_g[k]);
        }
        worst = worst.max(s.re.abs()).max(s.im.abs());
    }
    worst
}

/// Excess over every operating limit, in pu: PQ-bus voltages, machine real
/// and reactive power, branch ratings and, when `dr_bounds` is set, the
/// demand-response windows.
pub fn limit_excess(case: &SystemCase, op: &ssdr::dae::OperatingPoint, dr_bounds: bool) -> Vec<(String, f64)> {
    use ssdr::netcase::BusKind;
    use ssdr::powerflow::{branch_flow, Direction};
    let over = |v: f64, lo: f64, hi: f64| (lo - v).max(v - hi);
    let mut out = Vec::new();
    for (i, b) in case.buses.iter().enumerate() {
        if b.kind == BusKind::Pq {
            out.push((format!("V {}", b.id), over(op.pf.v[i], b.v_min, b.v_max)));
        }
    }
    for (k, m) in case.machines.iter().enumerate() {
        out.push((format!("P_g {}", m.bus), over(case.to_mw(op.pf.p_g[k]), m.p_min, m.p_max) / case.base_mva));
        out.push((format!("Q_g {}", m.bus), over(case.to_mw(op.pf.q_g[k]), m.q_min, m.q_max) / case.base_mva));
    }
    for (n, br) in case.branches.iter().enumerate() {
        for dir in [Direction::FromTo, Direction::ToFrom] {
            let f = branch_flow(case, &op.pf, n, dir).unwrap();
            out.push((format!("flow {}-{}", br.from, br.to), (f - br.rate) / case.base_mva));
        }
    }
    if dr_bounds {
        for e in &case.dr.entries {
            let i = case.bus_index(e.bus).unwrap();
            let p = case.to_mw(op.inputs.demand.p[i]);
            out.push((format!("P_d {}", e.bus), over(p, e.p_min, e.p_max) / case.base_mva));
        }
    }
    out
}

/// Limits satisfied at `start` that `end` exceeds by more than `tol` pu.
pub fn broken_limits(
    case: &SystemCase,
    start: &ssdr::dae::OperatingPoint,
    end: &ssdr::dae::OperatingPoint,
    dr_bounds: bool,
    tol: f64,
) -> Vec<String> {
    limit_excess(case, start, dr_bounds)
        .into_iter()
        .zip(limit_excess(case, end, dr_bounds))
        .filter(|((_, a), (_, b))| *a <= 0.0 && *b > tol)
        .map(|((name, _), (_, b))| format!("{name}: {b:.3e}"))
        .collect()
}
