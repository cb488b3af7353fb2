use nalgebra::DVector;
use num_complex::Complex64;

use super::{DaeSystem, Inputs, Layout, ModelFidelity, OperatingPoint, Setpoints};
use crate::error::{Error, Result};
use crate::netcase::SystemCase;
use crate::powerflow::PowerFlowState;

/// Largest field voltage or exciter reference accepted from initialization, pu.
const MAX_SETPOINT: f64 = 10.0;

/// Equilibrium residual accepted from initialization.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

/// Builds the equilibrium behind a converged power flow.
///
/// Each machine's rotor angle is the angle of `V + (r_a + j x'_q) I`, speed
/// deviation is zero, torque balances the electrical torque, and the field
/// voltage follows from the d-axis stator relation. Exciters start with zero
/// feedback and a reference that sustains the field voltage; stabilizers start
/// at rest. Torque, field and reference setpoints are all back-computed here.
pub fn initialize_equilibrium(
    case: &SystemCase,
    fidelity: ModelFidelity,
    pf: &PowerFlowState,
    inputs: Inputs,
) -> Result<OperatingPoint> {
    let l = Layout::new(case, fidelity);
    if fidelity == ModelFidelity::WithAvrPss && case.psss.is_empty() {
        return Err(Error::Precondition("avr-pss fidelity needs at least one PSS".into()));
    }
    if pf.v.len() != l.n_bus || pf.p_g.len() != l.n_machine || inputs.k_w.len() != case.psss.len() {
        return Err(Error::Dimension("power flow or inputs do not match the case".into()));
    }
    let mut x = DVector::zeros(l.nx);
    let mut y = DVector::zeros(l.ny);
    for i in 0..l.n_bus {
        y[l.v(i)] = pf.v[i];
        y[l.theta(i)] = pf.theta[i];
    }

    let mut tau_m = vec![0.0; l.n_machine];
    let mut v_f0 = vec![0.0; l.n_machine];
    for (k, m) in case.machines.iter().enumerate() {
        let bus = l.machine_bus[k];
        let vt = Complex64::from_polar(pf.v[bus], pf.theta[bus]);
        let s = Complex64::new(pf.p_g[k], pf.q_g[k]);
        let current = (s / vt).conj();
        let e = vt + Complex64::new(m.r_a, m.xq_t) * current;
        let delta = e.arg();
        let rot = Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_2 - delta);
        let vdq = vt * rot;
        let idq = current * rot;
        let (v_d, v_q, i_d, i_q) = (vdq.re, vdq.im, idq.re, idq.im);
        let psi_d = v_q + m.r_a * i_q;
        let psi_q = -v_d - m.r_a * i_d;
        let v_f = psi_d + m.xd_t * i_d;
        if !(v_f.abs() <= MAX_SETPOINT) {
            return Err(Error::Initialization(format!(
                "field voltage {v_f:.3} pu at bus {} is implausible",
                m.bus
            )));
        }
        x[l.delta(k)] = delta;
        let vals = [i_d, i_q, v_d, v_q, pf.p_g[k], pf.q_g[k], psi_d, psi_q, v_f];
        for (j, val) in vals.into_iter().enumerate() {
            y[l.mach_y(k, j)] = val;
        }
        tau_m[k] = psi_d * i_q - psi_q * i_d;
        v_f0[k] = v_f;
    }

    let mut v_ref0 = vec![0.0; l.n_avr()];
    for a in 0..l.n_avr() {
        let rec = &case.avrs[l.avr_record[a]];
        let k = l.avr_machine[a];
        let bus = l.machine_bus[k];
        let v_f = y[l.mach_y(k, 8)];
        let v_m = pf.v[bus];
        let v_r1 = rec.k_e * v_f + rec.ceiling(v_f);
        let v_ref = v_m + v_r1 / rec.k_a;
        if !(v_ref.abs() <= MAX_SETPOINT) {
            return Err(Error::Initialization(format!(
                "exciter reference {v_ref:.3} pu at bus {} is implausible",
                case.machines[k].bus
            )));
        }
        x[l.avr_x(a, 0)] = v_m;
        x[l.avr_x(a, 1)] = v_r1;
        x[l.avr_x(a, 2)] = v_f;
        x[l.avr_x(a, 3)] = 0.0;
        y[l.v_ref(a)] = v_ref;
        v_ref0[a] = v_ref;
    }
    // Stabilizer states and signals are all zero with the rotor at rest.

    let setpoints = Setpoints {
        tau_m,
        v_f0,
        v_ref0,
        k_w: l.pss_record.iter().map(|&r| inputs.k_w[r]).collect(),
    };
    let sys = DaeSystem::new(case, fidelity, inputs.demand.clone(), setpoints.clone())?;
    let (f, g) = sys.residuals(&x, &y)?;
    let worst = f.amax().max(g.amax());
    if !(worst <= EQUILIBRIUM_TOL) {
        return Err(Error::Initialization(format!("equilibrium residual {worst:.3e} exceeds tolerance")));
    }
    Ok(OperatingPoint { fidelity, x, y, inputs, setpoints, pf: pf.clone() })
}
