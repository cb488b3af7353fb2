use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::Spectrum;
use crate::dae::{DaeSystem, Param};
use crate::error::{Error, Result};

/// Finite-difference step applied to the analytic Jacobian.
pub const JACOBIAN_STEP: f64 = 1e-7;

/// Smallest accepted `|lᵀ B r| / (‖l‖ ‖r‖)`.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Derivatives of one eigenvalue with respect to every state of `(x, y)` and
/// to a list of parameters.
#[derive(Clone, Debug)]
pub struct SensitivityRow {
    pub mode: usize,
    pub lambda: Complex64,
    pub states: Vec<Complex64>,
    pub params: Vec<(Param, Complex64)>,
}

impl SensitivityRow {
    /// First-order eigenvalue change for a stacked state change and parameter
    /// changes aligned with `params`.
    pub fn predict(&self, dz: &[f64], dparams: &[f64]) -> Complex64 {
        let mut out: Complex64 = self.states.iter().zip(dz).map(|(s, d)| s * d).sum();
        for ((_, s), d) in self.params.iter().zip(dparams) {
            out += s * d;
        }
        out
    }

    pub fn param(&self, p: Param) -> Option<Complex64> {
        self.params.iter().find(|(q, _)| *q == p).map(|(_, s)| *s)
    }
}

/// `∂λ/∂χ = lᵀ (∂A/∂χ) r / (lᵀ B r)` for one mode.
pub fn generalized_sensitivity(
    sys: &DaeSystem<'_>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    spec: &Spectrum,
    mode: usize,
    params: &[Param],
) -> Result<SensitivityRow> {
    Ok(generalized_sensitivities(sys, x, y, spec, &[mode], params)?.remove(0))
}

/// Sensitivity rows for several modes sharing one pass over the Jacobian
/// derivatives.
pub fn generalized_sensitivities(
    sys: &DaeSystem<'_>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    spec: &Spectrum,
    modes: &[usize],
    params: &[Param],
) -> Result<Vec<SensitivityRow>> {
    let nx = x.len();
    let n = nx + y.len();
    let mut denoms = Vec::with_capacity(modes.len());
    for &m in modes {
        let mode = spec
            .modes
            .get(m)
            .ok_or_else(|| Error::Precondition(format!("mode {m} is not in the spectrum")))?;
        let lx = mode.left.rows(0, nx);
        let rx = mode.right.rows(0, nx);
        let d: Complex64 = lx.iter().zip(rx.iter()).map(|(a, b)| a * b).sum();
        if !(d.norm() > DEGENERACY_TOL * lx.norm() * rx.norm()) {
            return Err(Error::DegenerateMode(m));
        }
        denoms.push(d);
    }

    let mut states = vec![vec![Complex64::new(0.0, 0.0); n]; modes.len()];
    for c in 0..n {
        let da = jacobian_derivative(sys, x, y, c)?;
        for (k, &m) in modes.iter().enumerate() {
            let mode = &spec.modes[m];
            states[k][c] = bilinear(&mode.left, &da, &mode.right) / denoms[k];
        }
    }

    let mut rows = Vec::with_capacity(modes.len());
    for (k, &m) in modes.iter().enumerate() {
        let mode = &spec.modes[m];
        let ps = params
            .iter()
            .map(|&p| {
                let s: Complex64 = sys
                    .param_jacobian(p)
                    .into_iter()
                    .map(|(i, j, v)| mode.left[i] * mode.right[j] * v)
                    .sum();
                (p, s / denoms[k])
            })
            .collect();
        rows.push(SensitivityRow { mode: m, lambda: mode.lambda, states: std::mem::take(&mut states[k]), params: ps });
    }
    Ok(rows)
}

/// Central difference of the analytic Jacobian along stacked state `c`.
fn jacobian_derivative(sys: &DaeSystem<'_>, x: &DVector<f64>, y: &DVector<f64>, c: usize) -> Result<DMatrix<f64>> {
    let nx = x.len();
    let (mut xp, mut yp, mut xm, mut ym) = (x.clone(), y.clone(), x.clone(), y.clone());
    let h;
    if c < nx {
        h = JACOBIAN_STEP * x[c].abs().max(1.0);
        xp[c] += h;
        xm[c] -= h;
    } else {
        h = JACOBIAN_STEP * y[c - nx].abs().max(1.0);
        yp[c - nx] += h;
        ym[c - nx] -= h;
    }
    let jp = sys.jacobian(&xp, &yp)?;
    let jm = sys.jacobian(&xm, &ym)?;
    Ok((jp - jm) / (2.0 * h))
}

fn bilinear(l: &DVector<Complex64>, a: &DMatrix<f64>, r: &DVector<Complex64>) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        let col = a.column(j);
        let mut s = Complex64::new(0.0, 0.0);
        for (i, &v) in col.iter().enumerate() {
            if v != 0.0 {
                s += l[i] * v;
            }
        }
        if s != Complex64::new(0.0, 0.0) {
            acc += s * r[j];
        }
    }
    acc
}

/// First-order change of the damping ratio for eigenvalue changes `(Δα, Δβ)`.
pub fn damping_change(lambda: Complex64, d_alpha: f64, d_beta: f64) -> f64 {
    let (a, b) = (lambda.re, lambda.im);
    let mag = lambda.norm();
    (-b * b * d_alpha + a * b * d_beta) / (mag * mag * mag)
}

/// Gradient of the damping ratio with respect to `(α, β)`.
pub fn damping_gradient(lambda: Complex64) -> (f64, f64) {
    let (a, b) = (lambda.re, lambda.im);
    let m3 = lambda.norm().powi(3);
    (-b * b / m3, a * b / m3)
}

/// Normalized participation of each dynamic state in a mode.
pub fn participation_factors(spec: &Spectrum, mode: usize) -> Vec<f64> {
    let m = &spec.modes[mode];
    let raw: Vec<f64> = (0..spec.nx).map(|k| (m.left[k] * m.right[k]).norm()).collect();
    let total: f64 = raw.iter().sum();
    if total == 0.0 {
        return raw;
    }
    raw.into_iter().map(|p| p / total).collect()
}
