use super::{run_ilp, run_ilp_from, IlpConfig, IlpStatus, IlpTrace, ScenarioKind};
use crate::dae::{ModelFidelity, OperatingPoint};
use crate::error::{Error, Result};
use crate::netcase::SystemCase;
use crate::smallsignal::{finite_spectrum, linearize};

const GRID_POINTS: usize = 41;
const GOLDEN_TOL: f64 = 1e-5;

#[derive(Clone, Debug)]
pub struct Shedding {
    pub point: OperatingPoint,
    /// Total curtailment, MW.
    pub shed_mw: f64,
    /// Curtailment as a fraction of nominal system demand.
    pub shed_fraction: f64,
    pub trace: IlpTrace,
}

/// Least total demand curtailment lifting the smallest damping ratio to
/// `target_sdr` (fraction).
pub fn min_load_shedding(
    case: &SystemCase,
    fidelity: ModelFidelity,
    target_sdr: f64,
    config: &IlpConfig,
) -> Result<Shedding> {
    let (point, trace) = run_ilp(case, fidelity, ScenarioKind::MinLoadShedding { target_sdr }, config)?;
    let settled = matches!(trace.status, IlpStatus::Converged | IlpStatus::MaxIter | IlpStatus::Stalled);
    if trace.final_sdr < target_sdr - 1e-6 || !settled {
        return Err(Error::TargetUnreachable { target: 100.0 * target_sdr, reached: 100.0 * trace.final_sdr });
    }
    let shed_mw: f64 = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, b)| b.p_d0 - case.to_mw(point.inputs.demand.p[i]))
        .sum();
    Ok(Shedding { shed_mw, shed_fraction: shed_mw / case.total_demand_mw(), point, trace })
}

/// Smallest damping ratio with every stabilizer gain set to `k_w`; the
/// equilibrium does not depend on the gain.
pub fn sdr_at_gain(case: &SystemCase, op: &OperatingPoint, k_w: f64) -> Result<f64> {
    let gains = vec![k_w; case.psss.len()];
    let p = op.with_pss_gains(case, &gains);
    let spec = finite_spectrum(&linearize(case, &p)?)?;
    spec.sdr_mode()
        .map(|m| spec.modes[m].damping())
        .ok_or_else(|| Error::Precondition("spectrum has no modes".into()))
}

#[derive(Clone, Debug)]
pub struct GainTuning {
    pub k_w: f64,
    pub sdr: f64,
    pub point: OperatingPoint,
    /// Present when the gain was optimized jointly with the demand.
    pub trace: Option<IlpTrace>,
}

/// Tunes the stabilizer gain at `op`, either alone (grid scan refined by a
/// golden-section search, all stabilizers sharing one gain) or together with
/// a coupled demand shift through the iterative LP.
pub fn tune_pss_gain(
    case: &SystemCase,
    op: &OperatingPoint,
    co_optimize: bool,
    gain_bounds: Option<(f64, f64)>,
    config: &IlpConfig,
) -> Result<GainTuning> {
    if case.psss.is_empty() || op.fidelity != ModelFidelity::WithAvrPss {
        return Err(Error::Precondition("gain tuning needs stabilizers in the model".into()));
    }
    let (lo, hi) = gain_bounds.unwrap_or((case.psss[0].k_w_min, case.psss[0].k_w_max));
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Precondition(format!("gain bounds [{lo}, {hi}] are not a finite interval")));
    }
    if co_optimize {
        let mut case = case.clone();
        for p in case.psss.iter_mut() {
            p.k_w_min = lo;
            p.k_w_max = hi;
        }
        let (point, trace) = run_ilp_from(&case, op.clone(), ScenarioKind::PssGainTune { co_optimize: true }, config)?;
        return Ok(GainTuning { k_w: point.inputs.k_w[0], sdr: trace.final_sdr, point, trace: Some(trace) });
    }

    let eval = |k: f64| sdr_at_gain(case, op, k);
    let h = (hi - lo) / (GRID_POINTS - 1) as f64;
    let mut best = (lo, eval(lo)?);
    for i in 1..GRID_POINTS {
        let k = lo + h * i as f64;
        let s = eval(k)?;
        if s > best.1 {
            best = (k, s);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(lo), (best.0 + h).min(hi));
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut c, mut d) = (b - phi * (b - a), a + phi * (b - a));
    let (mut fc, mut fd) = (eval(c)?, eval(d)?);
    while b - a > GOLDEN_TOL {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = eval(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = eval(d)?;
        }
    }
    let k = 0.5 * (a + b);
    let s = eval(k)?;
    let (k, s) = if s >= best.1 { (k, s) } else { best };
    let point = op.with_pss_gains(case, &vec![k; case.psss.len()]);
    Ok(GainTuning { k_w: k, sdr: s, point, trace: None })
}
