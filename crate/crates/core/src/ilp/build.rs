use num_complex::Complex64;

use super::{IlpConfig, LpProblem, ScenarioKind};
use crate::dae::{DaeSystem, Inputs, OperatingPoint, Param};
use crate::error::{Error, Result};
use crate::netcase::SystemCase;
use crate::powerflow::{branch_flow, branch_flow_gradient, Direction};
use crate::smallsignal::{damping_gradient, generalized_sensitivities, LinearizedSystem, SensitivityRow, Spectrum};

/// Variable offsets of the LP built for one iteration, together with the
/// sensitivity rows its eigenvalue constraints came from.
#[derive(Clone, Debug)]
pub struct LpLayout {
    /// `Δx, Δy` occupy `0..n_state`.
    pub n_state: usize,
    pub tau: usize,
    /// Exciter reference for machines with an active exciter, field voltage
    /// otherwise.
    pub set: usize,
    pub dp: usize,
    pub dq: usize,
    pub kw: usize,
    /// Improvement of the smallest critical damping ratio, percentage points.
    pub gain: usize,
    /// Unmet damping target of the shedding problem, percentage points.
    pub shortfall: Option<usize>,
    /// Bus positions whose demand is a decision variable, aligned with `dp`
    /// and `dq`.
    pub buses: Vec<usize>,
    pub n_machine: usize,
    pub n_pss: usize,
    pub rows: Vec<SensitivityRow>,
    /// Damping ratio of each critical mode at the linearization point.
    pub damping: Vec<f64>,
    pub n_var: usize,
}

impl LpLayout {
    /// First-order change of every critical eigenvalue under an LP assignment.
    pub fn predicted_shift(&self, x: &[f64]) -> Vec<Complex64> {
        let kw: Vec<f64> = self.rows.first().map_or(Vec::new(), |r| {
            r.params
                .iter()
                .map(|(p, _)| match p {
                    Param::Kw(s) => x[self.kw + s],
                    _ => 0.0,
                })
                .collect()
        });
        self.rows.iter().map(|r| r.predict(&x[..self.n_state], &kw)).collect()
    }

    /// Linearized damping ratio of every critical mode after the step.
    pub fn predicted_damping(&self, x: &[f64]) -> Vec<f64> {
        self.predicted_shift(x)
            .iter()
            .zip(&self.rows)
            .zip(&self.damping)
            .map(|((d, r), eta)| {
                let (ga, gb) = damping_gradient(r.lambda);
                eta + ga * d.re + gb * d.im
            })
            .collect()
    }
}

/// Changes to the inputs taken from one LP solution.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjustment {
    /// Real and reactive demand change per bus position, pu.
    pub dp: Vec<f64>,
    pub dq: Vec<f64>,
    /// Real power change per machine, pu (slack entry unused).
    pub dp_g: Vec<f64>,
    /// Gain change per case PSS record.
    pub dk_w: Vec<f64>,
}

impl Adjustment {
    pub fn zero(case: &SystemCase) -> Adjustment {
        Adjustment {
            dp: vec![0.0; case.n_bus()],
            dq: vec![0.0; case.n_bus()],
            dp_g: vec![0.0; case.machines.len()],
            dk_w: vec![0.0; case.psss.len()],
        }
    }

    /// Reads an LP assignment and projects it so that the scenario's
    /// conservation and coupling constraints hold exactly.
    pub fn from_solution(
        case: &SystemCase,
        op: &OperatingPoint,
        layout: &LpLayout,
        scenario: ScenarioKind,
        x: &[f64],
    ) -> Adjustment {
        let mut adj = Adjustment::zero(case);
        let nx = op.x.len();
        let l = crate::dae::Layout::new(case, op.fidelity);
        for (j, &i) in layout.buses.iter().enumerate() {
            adj.dp[i] = x[layout.dp + j];
            adj.dq[i] = x[layout.dq + j];
        }
        if scenario.conserves_p() {
            project_sum(&mut adj.dp, &layout.buses);
        }
        if scenario.conserves_q() {
            project_sum(&mut adj.dq, &layout.buses);
        }
        if scenario.moves_generation() {
            let slack = case.slack_machine();
            for k in 0..case.machines.len() {
                if k != slack {
                    adj.dp_g[k] = x[nx + l.mach_y(k, 4)];
                }
            }
        }
        if scenario.moves_gain() {
            for s in 0..layout.n_pss {
                adj.dk_w[l.pss_record[s]] = x[layout.kw + s];
            }
        }
        adj
    }

    pub fn scaled(&self, factor: f64) -> Adjustment {
        let s = |v: &Vec<f64>| v.iter().map(|a| a * factor).collect();
        Adjustment { dp: s(&self.dp), dq: s(&self.dq), dp_g: s(&self.dp_g), dk_w: s(&self.dk_w) }
    }

    pub fn is_negligible(&self, tol: f64) -> bool {
        self.dp.iter().chain(&self.dq).chain(&self.dp_g).chain(&self.dk_w).all(|v| v.abs() <= tol)
    }

    /// Inputs after the change. Coupled scenarios recompute reactive demand
    /// from real demand at the nominal ratio instead of accumulating it.
    pub fn apply(&self, case: &SystemCase, scenario: ScenarioKind, inputs: &Inputs) -> Inputs {
        let mut out = inputs.clone();
        for i in 0..case.n_bus() {
            out.demand.p[i] += self.dp[i];
            out.demand.q[i] += self.dq[i];
        }
        if scenario.coupled() {
            for (i, bus) in case.buses.iter().enumerate() {
                if self.dp[i] != 0.0 && bus.p_d0 != 0.0 {
                    out.demand.q[i] = out.demand.p[i] * bus.q_d0 / bus.p_d0;
                }
            }
        }
        for (g, d) in out.generation.iter_mut().zip(&self.dp_g) {
            *g += d;
        }
        for (k, d) in out.k_w.iter_mut().zip(&self.dk_w) {
            *k += d;
        }
        out
    }
}

fn project_sum(v: &mut [f64], buses: &[usize]) {
    if buses.is_empty() {
        return;
    }
    let excess: f64 = buses.iter().map(|&i| v[i]).sum::<f64>() / buses.len() as f64;
    for &i in buses {
        v[i] -= excess;
    }
}

/// Step window `[lo - cur, hi - cur]`, widened to contain zero when the
/// current value already violates a bound.
fn window(cur: f64, lo: f64, hi: f64) -> (f64, f64) {
    ((lo - cur).min(0.0), (hi - cur).max(0.0))
}

/// Distance (pu) the LP keeps from voltage, machine and flow limits, leaving
/// room for the nonlinear restoration to overshoot the linearized step.
const LIMIT_MARGIN: f64 = 1e-3;

/// Step window against limits pulled in by [`LIMIT_MARGIN`]. A value inside
/// the margin may be asked to move back out of it; a value beyond the limit
/// itself only may not move further out.
fn inner_window(cur: f64, lo: f64, hi: f64) -> (f64, f64) {
    let m = LIMIT_MARGIN.min(0.25 * (hi - lo));
    let down = if cur >= lo { lo + m - cur } else { 0.0 };
    let up = if cur <= hi { hi - m - cur } else { 0.0 };
    (down, up)
}

fn capped((lo, hi): (f64, f64), cap: f64) -> (f64, f64) {
    (lo.max(-cap), hi.min(cap))
}

/// Bus positions whose demand the scenario may change.
pub(crate) fn decision_buses(case: &SystemCase, scenario: ScenarioKind) -> Result<Vec<usize>> {
    match scenario {
        ScenarioKind::PairwiseShift { bus_a, bus_b } => {
            let find = |id| {
                case.bus_index(id)
                    .ok_or_else(|| Error::Precondition(format!("bus {id} is not in the case")))
            };
            let (a, b) = (find(bus_a)?, find(bus_b)?);
            if a == b {
                return Err(Error::Precondition("a shifting pair needs two distinct buses".into()));
            }
            Ok(vec![a, b])
        }
        _ if scenario.shifts_p() || scenario.shifts_q() => {
            if case.dr.is_empty() {
                return Err(Error::Precondition(format!(
                    "scenario {} needs demand-responsive buses",
                    scenario.label()
                )));
            }
            Ok(case.dr.entries.iter().map(|e| case.bus_index(e.bus).unwrap()).collect())
        }
        _ => Ok(Vec::new()),
    }
}

/// Builds the LP for one iteration: linearized equilibrium, scenario rows,
/// cumulative bounds, linearized flow limits, eigenvalue step rows and the
/// objective.
#[allow(clippy::too_many_arguments)]
pub fn build_lp(
    case: &SystemCase,
    op: &OperatingPoint,
    sys: &DaeSystem<'_>,
    lin: &LinearizedSystem,
    spec: &Spectrum,
    criticals: &[usize],
    scenario: ScenarioKind,
    config: &IlpConfig,
) -> Result<(LpProblem, LpLayout)> {
    if criticals.is_empty() {
        return Err(Error::Precondition("critical mode set is empty".into()));
    }
    let l = &sys.layout;
    let params: Vec<Param> = if scenario.moves_gain() { (0..l.n_pss()).map(Param::Kw).collect() } else { Vec::new() };
    if scenario.moves_gain() && params.is_empty() {
        return Err(Error::Precondition("gain tuning needs an active stabilizer".into()));
    }
    let rows = generalized_sensitivities(sys, &op.x, &op.y, spec, criticals, &params)?;
    assemble(case, op, sys, lin, spec, rows, scenario, config, 1.0)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn assemble(
    case: &SystemCase,
    op: &OperatingPoint,
    sys: &DaeSystem<'_>,
    lin: &LinearizedSystem,
    spec: &Spectrum,
    rows: Vec<SensitivityRow>,
    scenario: ScenarioKind,
    config: &IlpConfig,
    eps_scale: f64,
) -> Result<(LpProblem, LpLayout)> {
    let l = &sys.layout;
    let nx = l.nx;
    let n = l.n();
    let base = case.base_mva;
    let buses = decision_buses(case, scenario)?;
    let mut lp = LpProblem::new();

    for _ in 0..n {
        lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
    }
    let tau = lp.n();
    for _ in 0..l.n_machine {
        lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
    }
    let set = lp.n();
    for _ in 0..l.n_machine {
        lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
    }

    let step = eps_scale * config.step_cap * case.to_pu(case.total_demand_mw());
    let dr_entry = |i: usize| case.dr.entries.iter().find(|e| case.bus_index(e.bus) == Some(i));
    let shedding = matches!(scenario, ScenarioKind::MinLoadShedding { .. });

    let dp = lp.n();
    for &i in &buses {
        let bus = &case.buses[i];
        let cur = op.inputs.demand.p[i];
        let (lo, hi) = if !scenario.shifts_p() {
            (0.0, 0.0)
        } else {
            let (mut pmin, mut pmax) = match (scenario, dr_entry(i)) {
                (ScenarioKind::PairwiseShift { .. }, _) | (_, None) => (0.0, f64::INFINITY),
                (_, Some(e)) => (case.to_pu(e.p_min), case.to_pu(e.p_max)),
            };
            if shedding {
                pmax = pmax.min(case.to_pu(bus.p_d0));
                pmin = pmin.min(pmax);
            }
            capped(window(cur, pmin, pmax), step)
        };
        lp.add_var(lo, hi, if shedding { -base } else { 0.0 });
    }
    let dq = lp.n();
    for &i in &buses {
        let bus = &case.buses[i];
        let cur = op.inputs.demand.q[i];
        let (lo, hi) = if !scenario.shifts_q() {
            (0.0, 0.0)
        } else if let Some(cap) = scenario.q_cap() {
            capped(window(cur, case.to_pu(bus.q_d0 - cap), case.to_pu(bus.q_d0 + cap)), step)
        } else if scenario.coupled() && bus.p_d0 == 0.0 && bus.q_d0 == 0.0 {
            (0.0, 0.0)
        } else {
            match (scenario, dr_entry(i)) {
                (ScenarioKind::PairwiseShift { .. }, _) | (_, None) => (f64::NEG_INFINITY, f64::INFINITY),
                (_, Some(e)) => window(cur, case.to_pu(e.q_min), case.to_pu(e.q_max)),
            }
        };
        lp.add_var(lo, hi, 0.0);
    }
    let kw = lp.n();
    for s in 0..l.n_pss() {
        let (lo, hi) = if scenario.moves_gain() {
            let rec = &case.psss[l.pss_record[s]];
            window(op.setpoints.k_w[s], rec.k_w_min, rec.k_w_max)
        } else {
            (0.0, 0.0)
        };
        lp.add_var(lo, hi, 0.0);
    }
    let gain = lp.n();
    let shortfall = if let ScenarioKind::MinLoadShedding { .. } = scenario {
        lp.add_var(0.0, 0.0, 0.0);
        Some(lp.add_var(0.0, f64::INFINITY, config.shortfall_penalty))
    } else {
        lp.add_var(f64::NEG_INFINITY, f64::INFINITY, -1.0);
        None
    };

    // Linearized equilibrium.
    let mut extra: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut push = |var: usize, param: Param| {
        for (r, v) in sys.param_column(&op.x, param) {
            extra[r].push((var, v));
        }
    };
    for k in 0..l.n_machine {
        push(tau + k, Param::TauM(k));
        match l.machine_avr[k] {
            Some(a) => push(set + k, Param::Vref0(a)),
            None => push(set + k, Param::Vf0(k)),
        }
    }
    for (j, &i) in buses.iter().enumerate() {
        push(dp + j, Param::Pd(i));
        push(dq + j, Param::Qd(i));
    }
    for s in 0..l.n_pss() {
        push(kw + s, Param::Kw(s));
    }
    for (r, more) in extra.into_iter().enumerate() {
        let mut coefs: Vec<(usize, f64)> = (0..n).filter(|&c| lin.a[(r, c)] != 0.0).map(|c| (c, lin.a[(r, c)])).collect();
        coefs.extend(more);
        lp.add_eq(coefs, 0.0);
    }

    // Scenario rows.
    if scenario.conserves_p() && !buses.is_empty() {
        lp.add_eq((0..buses.len()).map(|j| (dp + j, 1.0)).collect(), 0.0);
    }
    if scenario.conserves_q() && !buses.is_empty() {
        lp.add_eq((0..buses.len()).map(|j| (dq + j, 1.0)).collect(), 0.0);
    }
    if scenario.coupled() {
        for (j, &i) in buses.iter().enumerate() {
            let bus = &case.buses[i];
            let c = match dr_entry(i) {
                Some(e) if !matches!(scenario, ScenarioKind::PairwiseShift { .. }) => case.coupling(e),
                _ => crate::netcase::PowerFactorCoupling { p_coef: bus.q_d0, q_coef: bus.p_d0 },
            };
            if c.p_coef != 0.0 || c.q_coef != 0.0 {
                lp.add_eq(vec![(dp + j, c.p_coef), (dq + j, -c.q_coef)], 0.0);
            }
        }
    }

    // Fixings and cumulative bounds on network and machine variables.
    let slack_bus = case.slack_index();
    let slack_machine = case.slack_machine();
    let fix = |lp: &mut LpProblem, var: usize, (lo, hi): (f64, f64)| {
        lp.lower[var] = lo;
        lp.upper[var] = hi;
    };
    fix(&mut lp, nx + l.theta(slack_bus), (0.0, 0.0));
    for i in 0..case.n_bus() {
        let var = nx + l.v(i);
        if l.machine_bus.contains(&i) {
            fix(&mut lp, var, (0.0, 0.0));
        } else {
            fix(&mut lp, var, inner_window(op.pf.v[i], case.buses[i].v_min, case.buses[i].v_max));
        }
    }
    for (k, m) in case.machines.iter().enumerate() {
        let q = nx + l.mach_y(k, 5);
        fix(&mut lp, q, inner_window(op.pf.q_g[k], case.to_pu(m.q_min), case.to_pu(m.q_max)));
        let p = nx + l.mach_y(k, 4);
        let cur = op.pf.p_g[k];
        let (mut lo, mut hi) = (case.to_pu(m.p_min), case.to_pu(m.p_max));
        if k == slack_machine {
            fix(&mut lp, p, inner_window(cur, lo, hi));
        } else if scenario.moves_generation() {
            if let Some(r) = scenario.ramp_cap() {
                lo = lo.max(case.to_pu(m.p_g0 - r));
                hi = hi.min(case.to_pu(m.p_g0 + r));
            }
            fix(&mut lp, p, capped(window(cur, lo, hi), step));
        } else {
            fix(&mut lp, p, (0.0, 0.0));
        }
    }

    // Linearized sending-end flow limits.
    for (b, br) in case.branches.iter().enumerate() {
        if !br.rate.is_finite() {
            continue;
        }
        for dir in [Direction::FromTo, Direction::ToFrom] {
            let flow = case.to_pu(branch_flow(case, &op.pf, b, dir)?);
            let (i, j, g) = branch_flow_gradient(case, &op.pf, b, dir)?;
            let coefs =
                vec![(nx + l.v(i), g[0]), (nx + l.v(j), g[1]), (nx + l.theta(i), g[2]), (nx + l.theta(j), g[3])];
            lp.add_le(coefs, (case.to_pu(br.rate) - LIMIT_MARGIN - flow).max(0.0));
        }
    }

    // Eigenvalue step rows and the damping objective.
    let sdr = spec.sdr_mode().map(|m| spec.modes[m].damping()).unwrap_or(0.0);
    let (eps_lo, eps_hi) = (config.eps_lower * eps_scale, config.eps_upper * eps_scale);
    let mut damping = Vec::with_capacity(rows.len());
    for row in &rows {
        let eta = spec.modes[row.mode].damping();
        damping.push(eta);
        let split = |f: fn(Complex64) -> f64| -> Vec<(usize, f64)> {
            let mut c: Vec<(usize, f64)> =
                row.states.iter().enumerate().map(|(i, s)| (i, f(*s))).filter(|(_, v)| *v != 0.0).collect();
            for (p, s) in &row.params {
                if let Param::Kw(slot) = p {
                    c.push((kw + slot, f(*s)));
                }
            }
            c
        };
        let re = split(|c| c.re);
        let im = split(|c| c.im);
        for coefs in [&re, &im] {
            lp.add_le(coefs.clone(), eps_hi);
            lp.add_ge(coefs.clone(), eps_lo);
        }
        let (ga, gb) = damping_gradient(row.lambda);
        let mut lin_eta: Vec<(usize, f64)> = re.iter().map(|&(i, v)| (i, 100.0 * ga * v)).collect();
        lin_eta.extend(im.iter().map(|&(i, v)| (i, 100.0 * gb * v)));
        match (scenario, shortfall) {
            (ScenarioKind::MinLoadShedding { target_sdr }, Some(s)) => {
                // 100 (eta + d_eta) + s >= target
                lin_eta.push((s, 1.0));
                lp.add_ge(lin_eta, 100.0 * (target_sdr - eta));
            }
            _ => {
                // t <= 100 (eta - eta_S) + 100 d_eta
                let mut coefs: Vec<(usize, f64)> = lin_eta.into_iter().map(|(i, v)| (i, -v)).collect();
                coefs.push((gain, 1.0));
                lp.add_le(coefs, 100.0 * (eta - sdr));
            }
        }
    }

    // L1 cost on every decision move, splitting d = u - v.
    if shortfall.is_none() && config.move_penalty > 0.0 {
        let mut decisions: Vec<usize> = (dp..gain).collect();
        if scenario.moves_generation() {
            decisions.extend((0..l.n_machine).filter(|&k| k != slack_machine).map(|k| nx + l.mach_y(k, 4)));
        }
        for d in decisions {
            let (lo, hi) = (lp.lower[d], lp.upper[d]);
            if lo == hi {
                continue;
            }
            let u = lp.add_var(0.0, hi, config.move_penalty);
            let v = lp.add_var(0.0, -lo, config.move_penalty);
            lp.add_eq(vec![(d, 1.0), (u, -1.0), (v, 1.0)], 0.0);
        }
    }

    let layout = LpLayout {
        n_state: n,
        tau,
        set,
        dp,
        dq,
        kw,
        gain,
        shortfall,
        buses,
        n_machine: l.n_machine,
        n_pss: l.n_pss(),
        rows,
        damping,
        n_var: lp.n(),
    };
    Ok((lp, layout))
}
