use num_complex::Complex64;

use super::{damping_change, finite_spectrum, linearize, Spectrum};
use crate::dae::{ModelFidelity, OperatingPoint};
use crate::error::{Error, Result};
use crate::netcase::{BusKind, SystemCase};

/// Correlation below which a tracked mode is considered lost.
pub const MIN_TRACKING_CORRELATION: f64 = 0.7;

/// Finds the mode of `new` that continues mode `m` of `old`.
///
/// Candidates are the upper half-plane modes of `new`; the match maximizes
/// `|⟨r_old, r_new⟩| / (‖r_old‖ ‖r_new‖)`, ties going to the closest
/// eigenvalue. Returns the index and its correlation.
pub fn track_mode(old: &Spectrum, m: usize, new: &Spectrum) -> Result<(usize, f64)> {
    let r_old = &old.modes[m].right;
    let lam_old = old.modes[m].lambda;
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, mode) in new.modes.iter().enumerate() {
        if mode.beta() < 0.0 || mode.right.len() != r_old.len() {
            continue;
        }
        let dot: Complex64 = r_old.iter().zip(mode.right.iter()).map(|(a, b)| a.conj() * b).sum();
        let corr = dot.norm() / (r_old.norm() * mode.right.norm());
        let dist = (mode.lambda - lam_old).norm();
        let better = match best {
            None => true,
            Some((_, c, d)) => corr > c + 1e-9 || ((corr - c).abs() <= 1e-9 && dist < d),
        };
        if better {
            best = Some((i, corr, dist));
        }
    }
    match best {
        Some((i, c, _)) if c >= MIN_TRACKING_CORRELATION => Ok((i, c)),
        Some((_, c, _)) => Err(Error::ModeTracking(c)),
        None => Err(Error::ModeTracking(0.0)),
    }
}

/// Result of perturbing one machine's scheduled generation.
#[derive(Clone, Debug)]
pub struct NumericSensitivity {
    pub machine: usize,
    pub delta_mw: f64,
    pub lambda_before: Complex64,
    pub lambda_after: Complex64,
    pub correlation: f64,
    /// Damping-ratio change per MW, in percentage points.
    pub ss: f64,
}

/// Damping-ratio sensitivity of the least-damped mode to the real power of a
/// PV machine, by re-solving at `p_g + Δp`.
pub fn numeric_gen_sensitivity(
    case: &SystemCase,
    fidelity: ModelFidelity,
    op: &OperatingPoint,
    machine: usize,
    delta_mw: f64,
) -> Result<NumericSensitivity> {
    if delta_mw == 0.0 || !delta_mw.is_finite() {
        return Err(Error::Precondition("generation perturbation must be nonzero".into()));
    }
    let m = case
        .machines
        .get(machine)
        .ok_or_else(|| Error::Precondition(format!("machine {machine} does not exist")))?;
    let bus = &case.buses[case.bus_index(m.bus).unwrap()];
    if bus.kind != BusKind::Pv {
        return Err(Error::Precondition(format!("machine at bus {} is not on a PV bus", m.bus)));
    }
    let base = finite_spectrum(&linearize(case, op)?)?;
    let m0 = base.sdr_mode().ok_or(Error::Eigen)?;

    let mut inputs = op.inputs.clone();
    inputs.generation[machine] += case.to_pu(delta_mw);
    let moved = OperatingPoint::solve(case, fidelity, inputs, Some(&op.pf))?;
    let spec = finite_spectrum(&linearize(case, &moved)?)?;
    let (m1, correlation) = track_mode(&base, m0, &spec)?;

    let before = base.modes[m0].lambda;
    let after = spec.modes[m1].lambda;
    let d = after - before;
    let ss = 100.0 * damping_change(before, d.re, d.im) / delta_mw;
    Ok(NumericSensitivity { machine, delta_mw, lambda_before: before, lambda_after: after, correlation, ss })
}
