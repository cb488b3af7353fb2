//! Measurements shared by the property tests and the acceptance report.
//! Each returns the worst deviation found so callers pick their tolerance.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use ssdr::dae::*;
use ssdr::ilp::{run_ilp_from, IlpConfig, IlpStatus, IlpTrace, ScenarioKind};
use ssdr::netcase::SystemCase;
use ssdr::powerflow::total_losses;
use ssdr::smallsignal::*;

pub const ALL: [ModelFidelity; 3] = [ModelFidelity::Classical, ModelFidelity::WithAvr, ModelFidelity::WithAvrPss];

pub fn spectrum_of(case: &SystemCase, op: &OperatingPoint) -> (LinearizedSystem, Spectrum) {
    let lin = linearize(case, op).unwrap();
    let spec = finite_spectrum(&lin).unwrap();
    (lin, spec)
}

pub fn nearest(spec: &Spectrum, target: Complex64) -> Complex64 {
    spec.eigenvalues().into_iter().min_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm())).unwrap()
}

/// Central differences of the residuals in every state and algebraic
/// variable, columns stacked as `[x; y]`.
pub fn central_difference(sys: &DaeSystem<'_>, x: &DVector<f64>, y: &DVector<f64>, h: f64) -> DMatrix<f64> {
    let (nx, ny) = (x.len(), y.len());
    let stacked = |x: &DVector<f64>, y: &DVector<f64>| {
        let (f, g) = sys.residuals(x, y).unwrap();
        DVector::from_iterator(nx + ny, f.iter().chain(g.iter()).copied())
    };
    let mut out = DMatrix::zeros(nx + ny, nx + ny);
    for j in 0..nx + ny {
        let (mut xp, mut yp, mut xm, mut ym) = (x.clone(), y.clone(), x.clone(), y.clone());
        if j < nx {
            xp[j] += h;
            xm[j] -= h;
        } else {
            yp[j - nx] += h;
            ym[j - nx] -= h;
        }
        out.set_column(j, &((stacked(&xp, &yp) - stacked(&xm, &ym)) / (2.0 * h)));
    }
    out
}

/// Largest `|J - J_fd| / max(|J|, 1)` over all entries.
pub fn jacobian_deviation(sys: &DaeSystem<'_>, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
    let a = sys.jacobian(x, y).unwrap();
    let fd = central_difference(sys, x, y, 1e-6);
    a.iter().zip(fd.iter()).map(|(p, q)| (p - q).abs() / p.abs().max(1.0)).fold(0.0, f64::max)
}

pub struct PencilCheck {
    /// Largest residual ratio `‖(A - λB)r‖ / ((σ_max(A) + |λ|)‖r‖)`, left
    /// and right.
    pub residual: f64,
    /// Largest distance from a mode's conjugate to the spectrum, relative to `|λ|`.
    pub conjugate: f64,
    /// Largest `|lₓᵀrₓ - 1|`.
    pub normalization: f64,
    pub modes: usize,
    pub nx: usize,
}

pub fn pencil_check(case: &SystemCase, op: &OperatingPoint) -> PencilCheck {
    let (lin, spec) = spectrum_of(case, op);
    let a_norm = lin.a.singular_values().max();
    let mut c = PencilCheck { residual: 0.0, conjugate: 0.0, normalization: 0.0, modes: spec.len(), nx: lin.nx };
    for m in &spec.modes {
        let (rr, lr) = eigenpair_residuals(&lin, m);
        let scale = a_norm + m.lambda.norm();
        c.residual = c.residual.max(rr / (scale * m.right.norm())).max(lr / (scale * m.left.norm()));
        if m.lambda.im != 0.0 {
            let conj = nearest(&spec, m.lambda.conj());
            c.conjugate = c.conjugate.max((conj - m.lambda.conj()).norm() / m.lambda.norm());
        }
        let lx = m.left.rows(0, lin.nx);
        let rx = m.right.rows(0, lin.nx);
        let d: Complex64 = lx.iter().zip(rx.iter()).map(|(a, b)| a * b).sum();
        c.normalization = c.normalization.max((d - 1.0).norm());
    }
    c
}

/// Two machines on a lossless line with the same damping-to-inertia ratio
/// `c`: the spectrum is `{0, -c}` plus the roots of
/// `λ² + cλ + ω_b k_s (1/(2H₁) + 1/(2H₂))`.
pub fn smib_closed_form(case: &SystemCase, op: &OperatingPoint) -> Vec<Complex64> {
    let l = Layout::new(case, ModelFidelity::Classical);
    let (m1, m2) = (&case.machines[0], &case.machines[1]);
    let c = m1.d / (2.0 * m1.h);
    assert!((c - m2.d / (2.0 * m2.h)).abs() < 1e-15);
    let x = m1.xd_t + case.branches[0].x + m2.xd_t;
    let (e1, e2) = (op.y[l.mach_y(0, 8)], op.y[l.mach_y(1, 8)]);
    let ks = e1 * e2 * (op.x[l.delta(1)] - op.x[l.delta(0)]).cos() / x;
    let q = case.omega_b * ks * (1.0 / (2.0 * m1.h) + 1.0 / (2.0 * m2.h));
    let disc = Complex64::new(c * c - 4.0 * q, 0.0).sqrt();
    vec![
        Complex64::new(0.0, 0.0),
        Complex64::new(-c, 0.0),
        (Complex64::new(-c, 0.0) + disc) / 2.0,
        (Complex64::new(-c, 0.0) - disc) / 2.0,
    ]
}

/// Largest distance between the computed spectrum and the closed form.
pub fn smib_spectrum_error(case: &SystemCase) -> f64 {
    let op = OperatingPoint::nominal(case, ModelFidelity::Classical).unwrap();
    let (_, spec) = spectrum_of(case, &op);
    assert_eq!(spec.len(), 4);
    smib_closed_form(case, &op).iter().map(|e| (nearest(&spec, *e) - e).norm()).fold(0.0, f64::max)
}

fn resolve(case: &SystemCase, fid: ModelFidelity, inputs: Inputs) -> (DVector<f64>, Spectrum) {
    let op = OperatingPoint::solve(case, fid, inputs, None).unwrap();
    let (_, spec) = spectrum_of(case, &op);
    (op.z(), spec)
}

/// Chained sensitivity `s_z · dz/dp + s_p` of the least-damped mode against
/// the central difference of re-solved equilibria, for every nonzero load
/// and every PSS gain: `(name, chained, direct)`.
pub fn sensitivity_pairs(case: &SystemCase, fid: ModelFidelity) -> Vec<(String, Complex64, Complex64)> {
    let op = OperatingPoint::nominal(case, fid).unwrap();
    let sys = op.system(case).unwrap();
    let (_, spec) = spectrum_of(case, &op);
    let m = spec.sdr_mode().unwrap();
    let lambda = spec.modes[m].lambda;
    let params: Vec<Param> = (0..case.psss.len()).map(Param::Kw).collect();
    let row = generalized_sensitivity(&sys, &op.x, &op.y, &spec, m, &params).unwrap();
    let h = 1e-4;

    let mut derivs = Vec::new();
    for (i, b) in case.buses.iter().enumerate() {
        for reactive in [false, true] {
            let d0 = if reactive { b.q_d0 } else { b.p_d0 };
            if d0 == 0.0 {
                continue;
            }
            let shifted = |s: f64| {
                let mut inputs = op.inputs.clone();
                if reactive {
                    inputs.demand.q[i] += s;
                } else {
                    inputs.demand.p[i] += s;
                }
                resolve(case, fid, inputs)
            };
            let (up, dn) = (shifted(h), shifted(-h));
            let dz: Vec<f64> = (&up.0 - &dn.0).iter().map(|v| v / (2.0 * h)).collect();
            let chained = row.predict(&dz, &[]);
            let direct = (nearest(&up.1, lambda) - nearest(&dn.1, lambda)) / (2.0 * h);
            derivs.push((format!("{} {}", if reactive { "q" } else { "p" }, b.id), chained, direct));
        }
    }
    for (s, p) in case.psss.iter().enumerate() {
        let k0 = op.setpoints.k_w[s];
        let gain = |d: f64| {
            let mut k = op.setpoints.k_w.clone();
            k[s] = k0 + d;
            let moved = op.with_pss_gains(case, &k);
            nearest(&spectrum_of(case, &moved).1, lambda)
        };
        let hk = 1e-4 * p.k_w.abs().max(1.0);
        let direct = (gain(hk) - gain(-hk)) / (2.0 * hk);
        derivs.push((format!("K_w {}", p.bus), row.param(Param::Kw(s)).unwrap(), direct));
    }
    derivs
}

/// Relative error of each pair, floored at 1e-3 of the largest derivative.
pub fn sensitivity_errors(pairs: &[(String, Complex64, Complex64)]) -> Vec<(String, f64)> {
    let scale = pairs.iter().map(|(_, _, d)| d.norm()).fold(0.0, f64::max);
    pairs
        .iter()
        .map(|(name, chained, direct)| (name.clone(), (chained - direct).norm() / direct.norm().max(1e-3 * scale)))
        .collect()
}

/// Worst values seen over the accepted iterates of one run.
#[derive(Debug)]
pub struct RunCheck {
    pub trace: IlpTrace,
    pub status_ok: bool,
    /// Newton mismatch and independent power-balance residual.
    pub pf_residual: f64,
    /// Generation minus demand minus losses.
    pub balance: f64,
    /// Drift of the total DR demand from its starting value, pu.
    pub conservation: f64,
    /// Largest drop of the damping ratio between accepted iterates.
    pub sdr_drop: f64,
    /// Limits met at the start and exceeded at the end by more than 1e-6 pu.
    pub broken: Vec<String>,
    /// DAE residual at the final point.
    pub final_residual: f64,
    pub halvings_ok: bool,
}

pub fn check_run(case: &SystemCase, fid: ModelFidelity, scenario: ScenarioKind, dr_bounds: bool) -> RunCheck {
    let config = IlpConfig::default();
    let start = OperatingPoint::nominal(case, fid).unwrap();
    let (end, trace) = run_ilp_from(case, start.clone(), scenario, &config).unwrap();
    let dr: Vec<usize> = case.dr.entries.iter().map(|e| case.bus_index(e.bus).unwrap()).collect();
    let total = |op: &OperatingPoint| dr.iter().map(|&i| op.inputs.demand.p[i]).sum::<f64>();
    let (mut pf_residual, mut balance, mut conservation, mut sdr_drop) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    let mut prev = trace.initial_sdr;
    let mut halvings_ok = true;
    for it in &trace.iterations {
        let p = &it.point;
        pf_residual = pf_residual.max(p.pf.mismatch).max(super::pf_residual(case, &p.pf, &p.inputs.demand));
        let b = p.pf.p_g.iter().sum::<f64>() - p.inputs.demand.p.iter().sum::<f64>() - total_losses(case, &p.pf).unwrap();
        balance = balance.max(b.abs());
        conservation = conservation.max((total(p) - total(&start)).abs());
        sdr_drop = sdr_drop.max(prev - it.sdr);
        halvings_ok &= it.halvings <= config.max_halvings;
        prev = it.sdr;
    }
    let status_ok = matches!(trace.status, IlpStatus::Converged)
        && !trace.iterations.is_empty()
        && trace.final_sdr == prev
        && trace.final_objective.abs() < config.threshold;
    let broken = super::broken_limits(case, &start, &end, dr_bounds, 1e-6);
    let (f, g) = end.system(case).unwrap().residuals(&end.x, &end.y).unwrap();
    RunCheck {
        trace,
        status_ok,
        pf_residual,
        balance,
        conservation,
        sdr_drop,
        broken,
        final_residual: f.amax().max(g.amax()),
        halvings_ok,
    }
}
