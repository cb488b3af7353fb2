use num_complex::Complex64;

use super::build::{assemble, decision_buses, Adjustment, LpLayout};
use super::{lp_solve, IlpConfig, ScenarioKind};
use crate::dae::{ModelFidelity, OperatingPoint, Param};
use crate::error::{Error, Result};
use crate::netcase::{BusKind, SystemCase};
use crate::powerflow::{branch_flow, Direction};
use crate::smallsignal::{finite_spectrum, generalized_sensitivities, linearize, LinearizedSystem, Spectrum};

/// Largest drop of the smallest damping ratio (fraction) accepted as
/// numerical noise between iterations.
const MONOTONE_SLACK: f64 = 1e-6;

/// Largest excess over the operating limits (pu) accepted at an iterate.
const LIMIT_SLACK: f64 = 1e-6;

/// Entries below this (pu) count as no change at all.
const NEGLIGIBLE_STEP: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IlpStatus {
    Converged,
    MaxIter,
    LpInfeasible,
    PfDiverged,
    /// Every halving of the step bounds failed to produce an acceptable
    /// iterate.
    Stalled,
}

impl IlpStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            IlpStatus::Converged => "converged",
            IlpStatus::MaxIter => "max_iter",
            IlpStatus::LpInfeasible => "lp_infeasible",
            IlpStatus::PfDiverged => "pf_diverged",
            IlpStatus::Stalled => "stalled",
        }
    }
}

/// One accepted iteration.
#[derive(Clone, Debug)]
pub struct IlpIteration {
    pub iteration: usize,
    /// LP objective at full step bounds: damping gain in percentage points,
    /// or shed MW plus shortfall penalty.
    pub objective: f64,
    /// Predicted and realized change of the smallest damping ratio, pp.
    pub predicted: f64,
    pub realized: f64,
    /// Smallest damping ratio after the step, fraction.
    pub sdr: f64,
    pub halvings: usize,
    pub critical: Vec<Complex64>,
    pub step: Adjustment,
    pub point: OperatingPoint,
}

#[derive(Clone, Debug)]
pub struct IlpTrace {
    pub scenario: ScenarioKind,
    pub initial_sdr: f64,
    pub iterations: Vec<IlpIteration>,
    pub status: IlpStatus,
    /// LP objective of the final, unaccepted solve.
    pub final_objective: f64,
    pub final_sdr: f64,
}

impl IlpTrace {
    pub fn improvement_pp(&self) -> f64 {
        100.0 * (self.final_sdr - self.initial_sdr)
    }
}

/// Modes with `β ≥ 0` whose damping ratio lies within `margin` of the
/// smallest, least damped first, at most `cap` of them.
pub fn select_criticals(spec: &Spectrum, config: &IlpConfig) -> Vec<usize> {
    let sdr = match spec.sdr_mode() {
        Some(m) => spec.modes[m].damping(),
        None => return Vec::new(),
    };
    criticals_below(spec, sdr + config.critical_margin, config.critical_cap)
}

fn criticals_below(spec: &Spectrum, level: f64, cap: usize) -> Vec<usize> {
    let mut set: Vec<usize> = spec.representatives().filter(|&m| spec.modes[m].damping() <= level).collect();
    set.sort_by(|&a, &b| spec.modes[a].damping().total_cmp(&spec.modes[b].damping()));
    set.truncate(cap);
    set
}

/// Applies an adjustment and re-solves the power flow (warm-started at `op`)
/// and the equilibrium.
pub fn restore(
    case: &SystemCase,
    fidelity: ModelFidelity,
    op: &OperatingPoint,
    delta: &Adjustment,
    scenario: ScenarioKind,
) -> Result<OperatingPoint> {
    let inputs = delta.apply(case, scenario, &op.inputs);
    OperatingPoint::solve(case, fidelity, inputs, Some(&op.pf))
}

fn analyze(case: &SystemCase, op: &OperatingPoint) -> Result<(LinearizedSystem, Spectrum)> {
    let lin = linearize(case, op)?;
    let spec = finite_spectrum(&lin)?;
    Ok((lin, spec))
}

fn sdr_of(spec: &Spectrum) -> Result<f64> {
    spec.sdr_mode()
        .map(|m| spec.modes[m].damping())
        .ok_or_else(|| Error::Precondition("spectrum has no oscillatory or real modes".into()))
}

pub fn run_ilp(
    case: &SystemCase,
    fidelity: ModelFidelity,
    scenario: ScenarioKind,
    config: &IlpConfig,
) -> Result<(OperatingPoint, IlpTrace)> {
    let op = OperatingPoint::nominal(case, fidelity)?;
    run_ilp_from(case, op, scenario, config)
}

/// Iterates build → solve → restore → re-linearize from `start`.
pub fn run_ilp_from(
    case: &SystemCase,
    start: OperatingPoint,
    scenario: ScenarioKind,
    config: &IlpConfig,
) -> Result<(OperatingPoint, IlpTrace)> {
    config.validate()?;
    decision_buses(case, scenario)?;
    let fidelity = start.fidelity;
    let target = match scenario {
        ScenarioKind::MinLoadShedding { target_sdr } => Some(target_sdr),
        _ => None,
    };
    let limits = HardLimits::at(case, &start)?;
    let mut op = start;
    let (mut lin, mut spec) = analyze(case, &op)?;
    let mut sdr = sdr_of(&spec)?;
    let mut trace = IlpTrace {
        scenario,
        initial_sdr: sdr,
        iterations: Vec::new(),
        status: IlpStatus::MaxIter,
        final_objective: f64::NAN,
        final_sdr: sdr,
    };

    for iteration in 1..=config.max_iter {
        let level = match target {
            Some(t) => sdr.max(t),
            None => sdr,
        };
        let criticals = criticals_below(&spec, level + config.critical_margin, config.critical_cap);
        if criticals.is_empty() {
            return Err(Error::Precondition("no critical modes found".into()));
        }
        let sys = op.system(case)?;
        let params: Vec<Param> =
            if scenario.moves_gain() { (0..sys.layout.n_pss()).map(Param::Kw).collect() } else { Vec::new() };
        let rows = generalized_sensitivities(&sys, &op.x, &op.y, &spec, &criticals, &params)?;

        let mut scale = 1.0;
        let mut halvings = 0;
        let mut objective = f64::NAN;
        let accepted = loop {
            let (lp, layout) = assemble(case, &op, &sys, &lin, &spec, rows.clone(), scenario, config, scale)?;
            let sol = match lp_solve(&lp) {
                Ok(s) => s,
                Err(Error::LpInfeasible) => {
                    trace.status = IlpStatus::LpInfeasible;
                    break None;
                }
                Err(e) => return Err(e),
            };
            let obj = match target {
                Some(_) => sol.objective,
                None => sol.x[layout.gain],
            };
            let step = Adjustment::from_solution(case, &op, &layout, scenario, &sol.x);
            if halvings == 0 {
                objective = obj;
                trace.final_objective = obj;
                let done = match target {
                    None => obj.abs() < config.threshold,
                    Some(t) => {
                        obj.abs() < config.threshold * case.total_demand_mw() && sdr >= t - MONOTONE_SLACK
                            || step.is_negligible(NEGLIGIBLE_STEP) && sdr >= t - MONOTONE_SLACK
                    }
                };
                if done {
                    trace.status = IlpStatus::Converged;
                    break None;
                }
                if target.is_some() && step.is_negligible(NEGLIGIBLE_STEP) {
                    trace.status = IlpStatus::Stalled;
                    break None;
                }
            }
            let predicted_eta = layout.predicted_damping(&sol.x).into_iter().fold(f64::INFINITY, f64::min);
            let predicted = 100.0 * (predicted_eta - sdr);
            let active = eigen_bounds_active(&layout, &sol.x, config, scale);

            let candidate = restore(case, fidelity, &op, &step, scenario)
                .and_then(|p| analyze(case, &p).map(|(l, s)| (p, l, s)))
                .and_then(|(p, l, s)| sdr_of(&s).map(|e| (p, l, s, e)));
            let verdict = match candidate {
                Ok((p, l, s, eta)) => {
                    let realized = 100.0 * (eta - sdr);
                    let monotone = match target {
                        None => eta >= sdr - MONOTONE_SLACK,
                        Some(t) => eta >= sdr.min(t) - MONOTONE_SLACK,
                    } && limits.excess(case, &p)? <= LIMIT_SLACK;
                    let in_band = !active || (realized - predicted).abs() <= config.prediction_band * predicted.abs();
                    Ok((p, l, s, eta, realized, monotone, in_band))
                }
                Err(e @ (Error::PowerFlowDiverged { .. } | Error::Initialization(_) | Error::IllConditioned(_))) => {
                    Err(e)
                }
                Err(e) => return Err(e),
            };
            match verdict {
                Ok((p, l, s, eta, realized, true, true)) => {
                    break Some((p, l, s, eta, realized, predicted, halvings, step, layout));
                }
                Ok((p, l, s, eta, realized, monotone, _)) if halvings >= config.max_halvings => {
                    if monotone && (target.is_some() || realized > 0.0) {
                        break Some((p, l, s, eta, realized, predicted, halvings, step, layout));
                    }
                    trace.status = IlpStatus::Stalled;
                    break None;
                }
                Err(_) if halvings >= config.max_halvings => {
                    trace.status = IlpStatus::PfDiverged;
                    break None;
                }
                _ => {
                    scale *= 0.5;
                    halvings += 1;
                }
            }
        };

        match accepted {
            None => break,
            Some((p, l, s, eta, realized, predicted, halvings, step, layout)) => {
                let critical = layout.rows.iter().map(|r| r.lambda).collect();
                op = p;
                lin = l;
                spec = s;
                sdr = eta;
                trace.iterations.push(IlpIteration {
                    iteration,
                    objective,
                    predicted,
                    realized,
                    sdr,
                    halvings,
                    critical,
                    step,
                    point: op.clone(),
                });
            }
        }
    }
    trace.final_sdr = sdr;
    Ok((op, trace))
}

/// Power-flow limits that hold at the start of a run and must keep holding at
/// every accepted iterate. A side already violated at the start is dropped;
/// the LP window alone keeps it from moving further out to first order.
struct HardLimits {
    v: Vec<(f64, f64)>,
    q_g: Vec<(f64, f64)>,
    p_g: Vec<(f64, f64)>,
    /// Sending-end rating in both directions, pu.
    rate: Vec<[f64; 2]>,
}

impl HardLimits {
    fn at(case: &SystemCase, op: &OperatingPoint) -> Result<HardLimits> {
        let keep = |cur: f64, lo: f64, hi: f64| {
            (if cur < lo { f64::NEG_INFINITY } else { lo }, if cur > hi { f64::INFINITY } else { hi })
        };
        let v = case
            .buses
            .iter()
            .enumerate()
            .map(|(i, b)| if b.kind == BusKind::Pq { keep(op.pf.v[i], b.v_min, b.v_max) } else { (f64::NEG_INFINITY, f64::INFINITY) })
            .collect();
        let q_g = case
            .machines
            .iter()
            .enumerate()
            .map(|(k, m)| keep(op.pf.q_g[k], case.to_pu(m.q_min), case.to_pu(m.q_max)))
            .collect();
        let p_g = case
            .machines
            .iter()
            .enumerate()
            .map(|(k, m)| keep(op.pf.p_g[k], case.to_pu(m.p_min), case.to_pu(m.p_max)))
            .collect();
        let mut rate = Vec::with_capacity(case.branches.len());
        for (b, br) in case.branches.iter().enumerate() {
            let mut r = [f64::INFINITY; 2];
            for (slot, dir) in [Direction::FromTo, Direction::ToFrom].into_iter().enumerate() {
                r[slot] = keep(branch_flow(case, &op.pf, b, dir)?, f64::NEG_INFINITY, br.rate).1;
            }
            rate.push(r.map(|x| case.to_pu(x)));
        }
        Ok(HardLimits { v, q_g, p_g, rate })
    }

    /// Largest excess of `op` over the kept limits, pu.
    fn excess(&self, case: &SystemCase, op: &OperatingPoint) -> Result<f64> {
        let over = |v: f64, (lo, hi): (f64, f64)| (lo - v).max(v - hi);
        let mut worst: f64 = 0.0;
        for (i, &b) in self.v.iter().enumerate() {
            worst = worst.max(over(op.pf.v[i], b));
        }
        for k in 0..self.q_g.len() {
            worst = worst.max(over(op.pf.q_g[k], self.q_g[k])).max(over(op.pf.p_g[k], self.p_g[k]));
        }
        for (b, r) in self.rate.iter().enumerate() {
            for (slot, dir) in [Direction::FromTo, Direction::ToFrom].into_iter().enumerate() {
                if r[slot].is_finite() {
                    worst = worst.max(case.to_pu(branch_flow(case, &op.pf, b, dir)?) - r[slot]);
                }
            }
        }
        Ok(worst)
    }
}

fn eigen_bounds_active(layout: &LpLayout, x: &[f64], config: &IlpConfig, scale: f64) -> bool {
    let (lo, hi) = (config.eps_lower * scale, config.eps_upper * scale);
    let tol = 1e-6 * lo.abs().max(hi.abs()).max(1e-300);
    layout
        .predicted_shift(x)
        .iter()
        .any(|d| [d.re, d.im].iter().any(|v| (v - hi).abs() <= tol || (v - lo).abs() <= tol))
}
