//! Study harness for the 14-bus experiments: the seven-case comparison,
//! pairwise shifting, cross-fidelity evaluation and the redispatch benchmark.

mod report;

pub use report::{StudyReport, StudyRow};

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;

use crate::dae::{ModelFidelity, OperatingPoint};
use crate::error::{Error, Result};
use crate::ilp::{run_ilp_from, IlpConfig, IlpTrace, ScenarioKind};
use crate::netcase::{BusId, SystemCase};
use crate::smallsignal::{
    finite_spectrum, linearize, metrics, numeric_gen_sensitivity, MetricConfig, NumericSensitivity, StabilityMetrics,
};

/// Smallest damping ratio of an operating point, fraction.
pub fn sdr(case: &SystemCase, op: &OperatingPoint) -> Result<f64> {
    let spec = finite_spectrum(&linearize(case, op)?)?;
    Ok(metrics(&spec, &MetricConfig::default())?.sdr)
}

pub fn empty_report(case: &SystemCase, id: &str) -> StudyReport {
    StudyReport {
        id: id.into(),
        load_buses: case.dr.buses().collect(),
        machine_buses: case.machines.iter().map(|m| m.bus).collect(),
        rows: Vec::new(),
    }
}

/// Runs one scenario from `start` and summarizes it as a report row. A failed
/// run gives a row with an error marker.
pub fn run_row(
    case: &SystemCase,
    start: &OperatingPoint,
    label: &str,
    scenario: ScenarioKind,
    config: &IlpConfig,
) -> (StudyRow, Option<(OperatingPoint, IlpTrace)>) {
    match try_run_row(case, start, label, scenario, config) {
        Ok((row, op, trace)) => (row, Some((op, trace))),
        Err(e) => {
            let nominal = sdr(case, start).map(|s| 100.0 * s).unwrap_or(f64::NAN);
            (StudyRow::failed(label, &scenario.label(), start.fidelity.as_str(), nominal, e.to_string()), None)
        }
    }
}

pub fn try_run_row(
    case: &SystemCase,
    start: &OperatingPoint,
    label: &str,
    scenario: ScenarioKind,
    config: &IlpConfig,
) -> Result<(StudyRow, OperatingPoint, IlpTrace)> {
    let t0 = Instant::now();
    let (op, trace) = run_ilp_from(case, start.clone(), scenario, config)?;
    let mut convergence = vec![(0, 100.0 * trace.initial_sdr)];
    convergence.extend(trace.iterations.iter().map(|it| (it.iteration, 100.0 * it.sdr)));
    let loading_mw = case
        .dr
        .buses()
        .map(|b| case.to_mw(op.inputs.demand.p[case.bus_index(b).unwrap()]))
        .collect();
    let row = StudyRow {
        label: label.into(),
        scenario: scenario.label(),
        fidelity: start.fidelity.as_str().into(),
        status: trace.status.as_str().into(),
        iterations: trace.iterations.len(),
        nominal_sdr: 100.0 * trace.initial_sdr,
        optimal_sdr: 100.0 * trace.final_sdr,
        loading_mw,
        generation_mw: op.pf.p_g.iter().map(|&p| case.to_mw(p)).collect(),
        convergence,
        wall_time: t0.elapsed(),
        error: None,
    };
    Ok((row, op, trace))
}

/// The seven comparison cases at the given fidelity, run in parallel.
pub fn study_table2(case: &SystemCase, fidelity: ModelFidelity, config: &IlpConfig) -> Result<StudyReport> {
    if case.dr.is_empty() {
        return Err(Error::Precondition("the comparison study needs demand-responsive buses".into()));
    }
    let start = OperatingPoint::nominal(case, fidelity)?;
    let mut report = empty_report(case, "table2");
    report.rows = (1..=7)
        .into_par_iter()
        .map(|n| {
            let scenario = ScenarioKind::table2_case(n).unwrap();
            run_row(case, &start, &format!("case{n}"), scenario, config).0
        })
        .collect();
    Ok(report)
}

/// Best smallest damping ratio for every unordered pair of DR buses.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseStudy {
    pub buses: Vec<BusId>,
    /// `sdr[i][j]` for `j < i`, percent; `None` where the run failed.
    pub sdr: Vec<Vec<Option<f64>>>,
    pub status: Vec<Vec<String>>,
}

impl PairwiseStudy {
    pub fn pairs(&self) -> usize {
        self.sdr.iter().map(|r| r.len()).sum()
    }

    /// Pair with the largest SDR: `(bus_a, bus_b, sdr %)` with `bus_a` the
    /// earlier DR bus.
    pub fn argmax(&self) -> Option<(BusId, BusId, f64)> {
        let mut best: Option<(BusId, BusId, f64)> = None;
        for (i, row) in self.sdr.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                if let Some(v) = *v {
                    if best.is_none_or(|b| v > b.2) {
                        best = Some((self.buses[j], self.buses[i], v));
                    }
                }
            }
        }
        best
    }

    /// `bus_a, bus_b, status, sdr_pct` in row-major lower-triangular order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bus_a,bus_b,status,sdr_pct\n");
        for (i, row) in self.sdr.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let val = v.map_or(String::new(), |v| format!("{v:.6}"));
                let _ = writeln!(out, "{},{},{},{}", self.buses[j], self.buses[i], self.status[i][j], val);
            }
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        for (i, row) in self.sdr.iter().enumerate().skip(1) {
            let _ = write!(out, "{:>4} |", self.buses[i]);
            for v in row {
                match v {
                    Some(v) => {
                        let _ = write!(out, " {v:>7.4}");
                    }
                    None => out.push_str("       -"),
                }
            }
            out.push('\n');
        }
        out.push_str(" bus |");
        for b in &self.buses[..self.buses.len().saturating_sub(1)] {
            let _ = write!(out, " {b:>7}");
        }
        out.push('\n');
        out
    }
}

/// Shifts load between every pair of DR buses without demand bounds,
/// optionally after giving every DR bus the same nominal load.
pub fn study_pairwise(
    case: &SystemCase,
    fidelity: ModelFidelity,
    equal_loading: Option<(f64, f64)>,
    config: &IlpConfig,
) -> Result<PairwiseStudy> {
    let case = match equal_loading {
        Some((p, q)) => case.with_equal_dr_loading(p, q),
        None => case.clone(),
    };
    let buses: Vec<BusId> = case.dr.buses().collect();
    if buses.len() < 2 {
        return Err(Error::Precondition("the pairwise study needs at least two DR buses".into()));
    }
    let start = OperatingPoint::nominal(&case, fidelity)?;
    let pairs: Vec<(usize, usize)> = (0..buses.len()).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let results: Vec<(Option<f64>, String)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let scenario = ScenarioKind::PairwiseShift { bus_a: buses[j], bus_b: buses[i] };
            match run_ilp_from(&case, start.clone(), scenario, config) {
                Ok((_, trace)) => (Some(100.0 * trace.final_sdr), trace.status.as_str().to_string()),
                Err(e) => (None, format!("error: {e}")),
            }
        })
        .collect();
    let mut sdr: Vec<Vec<Option<f64>>> = (0..buses.len()).map(|i| vec![None; i]).collect();
    let mut status: Vec<Vec<String>> = (0..buses.len()).map(|i| vec![String::new(); i]).collect();
    for (&(i, j), (v, s)) in pairs.iter().zip(results) {
        sdr[i][j] = v;
        status[i][j] = s;
    }
    Ok(PairwiseStudy { buses, sdr, status })
}

/// Sets the real demand of every bus in `pattern_mw` (bus id, MW), keeps each
/// bus's nominal power factor, and evaluates the result under `fidelity`.
pub fn cross_evaluate(
    case: &SystemCase,
    pattern_mw: &[(BusId, f64)],
    fidelity: ModelFidelity,
) -> Result<(OperatingPoint, StabilityMetrics)> {
    let mut inputs = crate::dae::Inputs::nominal(case);
    for &(id, p) in pattern_mw {
        let i = case.bus_index(id).ok_or_else(|| Error::Precondition(format!("bus {id} is not in the case")))?;
        let bus = &case.buses[i];
        inputs.demand.p[i] = case.to_pu(p);
        inputs.demand.q[i] = if bus.p_d0 != 0.0 { case.to_pu(p * bus.q_d0 / bus.p_d0) } else { inputs.demand.q[i] };
    }
    let op = OperatingPoint::solve(case, fidelity, inputs, None)?;
    let spec = finite_spectrum(&linearize(case, &op)?)?;
    let m = metrics(&spec, &MetricConfig::default())?;
    Ok((op, m))
}

/// Real-demand pattern of an operating point at the DR buses, MW.
pub fn dr_pattern(case: &SystemCase, op: &OperatingPoint) -> Vec<(BusId, f64)> {
    case.dr
        .buses()
        .map(|b| (b, case.to_mw(op.inputs.demand.p[case.bus_index(b).unwrap()])))
        .collect()
}

/// Single-machine redispatch guided by numeric sensitivities, compared with
/// the generation-only optimum.
#[derive(Clone, Debug)]
pub struct RedispatchBenchmark {
    pub nominal_sdr: f64,
    pub sensitivities: Vec<(BusId, NumericSensitivity)>,
    /// Bus of the machine with the largest sensitivity.
    pub best_bus: BusId,
    /// Generation-only optimum used as the target, percent.
    pub target_sdr: f64,
    /// Change at `best_bus` predicted to reach the target, MW.
    pub predicted_dp_mw: f64,
    pub realized_sdr: f64,
}

impl RedispatchBenchmark {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bus,ss_pct_per_mw,correlation\n");
        for (b, s) in &self.sensitivities {
            let _ = writeln!(out, "{b},{:.6},{:.6}", s.ss, s.correlation);
        }
        let _ = writeln!(
            out,
            "# best_bus={},nominal_sdr_pct={:.6},target_sdr_pct={:.6},predicted_dp_mw={:.6},realized_sdr_pct={:.6}",
            self.best_bus, self.nominal_sdr, self.target_sdr, self.predicted_dp_mw, self.realized_sdr
        );
        out
    }
}

/// Perturbation step for the numeric generation sensitivities, MW.
pub const REDISPATCH_PROBE_MW: f64 = 1.0;

pub fn benchmark_redispatch(case: &SystemCase, config: &IlpConfig) -> Result<RedispatchBenchmark> {
    let fidelity = ModelFidelity::WithAvrPss;
    let op = OperatingPoint::nominal(case, fidelity)?;
    let nominal_sdr = 100.0 * sdr(case, &op)?;
    let slack = case.slack_machine();
    let mut sensitivities = Vec::new();
    for (k, m) in case.machines.iter().enumerate() {
        if k != slack {
            sensitivities.push((m.bus, numeric_gen_sensitivity(case, fidelity, &op, k, REDISPATCH_PROBE_MW)?));
        }
    }
    let (best_bus, best) = sensitivities
        .iter()
        .max_by(|a, b| a.1.ss.total_cmp(&b.1.ss))
        .map(|(b, s)| (*b, s.clone()))
        .ok_or_else(|| Error::Precondition("no PV machines to redispatch".into()))?;
    let (_, trace) = run_ilp_from(case, op.clone(), ScenarioKind::GenOnly { ramp_cap: None }, config)?;
    let target_sdr = 100.0 * trace.final_sdr;
    let predicted_dp_mw = (target_sdr - nominal_sdr) / best.ss;
    let mut inputs = op.inputs.clone();
    inputs.generation[best.machine] += case.to_pu(predicted_dp_mw);
    let moved = OperatingPoint::solve(case, fidelity, inputs, Some(&op.pf))?;
    let realized_sdr = 100.0 * sdr(case, &moved)?;
    Ok(RedispatchBenchmark { nominal_sdr, sensitivities, best_bus, target_sdr, predicted_dp_mw, realized_sdr })
}
