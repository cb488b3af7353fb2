//! Linearization of the DAE, its finite spectrum, damping metrics and
//! eigenvalue sensitivities.

mod linearize;
mod metrics;
mod sensitivity;
mod spectrum;
mod tracking;

pub use linearize::{finite_difference_jacobian, linearize, linearize_system, LinearizedSystem};
pub use metrics::{metrics, MetricConfig, StabilityMetrics};
pub use sensitivity::{
    damping_change, damping_gradient, generalized_sensitivities, generalized_sensitivity, participation_factors,
    SensitivityRow, DEGENERACY_TOL, JACOBIAN_STEP,
};
pub use spectrum::{
    damping_ratio, eigenpair_residuals, finite_spectrum, Mode, Spectrum, MAX_GY_CONDITION, REFERENCE_MODE_TOL,
};
pub use tracking::{numeric_gen_sensitivity, track_mode, NumericSensitivity, MIN_TRACKING_CORRELATION};

use crate::dae::Layout;
use crate::netcase::SystemCase;

/// Participation of each machine in a mode: the sum over its rotor states and
/// the states of its exciter and stabilizer.
pub fn machine_participation(case: &SystemCase, layout: &Layout, spec: &Spectrum, mode: usize) -> Vec<f64> {
    let p = participation_factors(spec, mode);
    let mut out = vec![0.0; case.machines.len()];
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = p[layout.delta(k)] + p[layout.omega(k)];
        if let Some(a) = layout.machine_avr[k] {
            *slot += (0..4).map(|j| p[layout.avr_x(a, j)]).sum::<f64>();
            if let Some(s) = layout.avr_pss[a] {
                *slot += (0..3).map(|j| p[layout.pss_x(s, j)]).sum::<f64>();
            }
        }
    }
    out
}
