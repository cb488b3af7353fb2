use faer::Mat;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use super::LinearizedSystem;
use crate::error::{Error, Result};

/// Largest accepted condition number of `g_y`.
pub const MAX_GY_CONDITION: f64 = 1e12;

/// Eigenvalues below this magnitude are treated as the rotational reference
/// mode of the angle states and excluded from the metrics.
pub const REFERENCE_MODE_TOL: f64 = 1e-6;

/// One finite eigenvalue with eigenvectors in the full `(x, y)` space.
///
/// Right and left vectors are normalized so that `‖r_x‖ = 1` and
/// `lᵀ B r = 1` (unconjugated transpose).
#[derive(Clone, Debug)]
pub struct Mode {
    pub lambda: Complex64,
    pub right: DVector<Complex64>,
    pub left: DVector<Complex64>,
    /// Set for the zero eigenvalue that every angle-reference-free model has.
    pub reference: bool,
}

impl Mode {
    pub fn alpha(&self) -> f64 {
        self.lambda.re
    }

    pub fn beta(&self) -> f64 {
        self.lambda.im
    }

    /// `-α / |λ|`, defined as zero at `λ = 0`.
    pub fn damping(&self) -> f64 {
        damping_ratio(self.lambda)
    }

    /// Oscillation frequency in Hz.
    pub fn frequency(&self) -> f64 {
        self.lambda.im.abs() / (2.0 * std::f64::consts::PI)
    }
}

pub fn damping_ratio(lambda: Complex64) -> f64 {
    let mag = lambda.norm();
    if mag == 0.0 {
        0.0
    } else {
        -lambda.re / mag
    }
}

#[derive(Clone, Debug)]
pub struct Spectrum {
    pub nx: usize,
    pub modes: Vec<Mode>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn eigenvalues(&self) -> Vec<Complex64> {
        self.modes.iter().map(|m| m.lambda).collect()
    }

    /// Indices of the modes that count for the metrics: upper half-plane
    /// representatives, reference mode excluded.
    pub fn representatives(&self) -> impl Iterator<Item = usize> + '_ {
        self.modes
            .iter()
            .enumerate()
            .filter(|(_, m)| m.beta() >= 0.0 && !m.reference)
            .map(|(i, _)| i)
    }

    /// Index of the least-damped representative mode.
    pub fn sdr_mode(&self) -> Option<usize> {
        self.representatives()
            .min_by(|&a, &b| self.modes[a].damping().total_cmp(&self.modes[b].damping()))
    }
}

/// Finite spectrum of `(A, B)` through the reduced matrix
/// `A* = f_x - f_y g_y⁻¹ g_x`, with eigenvectors lifted back to the full space.
pub fn finite_spectrum(lin: &LinearizedSystem) -> Result<Spectrum> {
    let (nx, ny) = (lin.nx, lin.ny);
    let fx = lin.fx();
    let fy = lin.fy();
    let gx = lin.gx();
    let gy = lin.gy();

    let sv = gy.singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let cond = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(cond <= MAX_GY_CONDITION) {
        return Err(Error::IllConditioned(cond));
    }
    let lu = gy.clone().lu();
    let gy_inv_gx = lu.solve(&gx).ok_or(Error::Singular("g_y"))?;
    // W = g_y⁻ᵀ f_yᵀ, so the algebraic part of a left vector is -W l_x.
    let w = gy.transpose().lu().solve(&fy.transpose()).ok_or(Error::Singular("g_y"))?;
    let a_star = &fx - &fy * &gy_inv_gx;

    let (lambdas, r_x) = eigen_decompose(&a_star)?;
    let l_x = r_x.clone().lu().try_inverse().ok_or(Error::Eigen)?;

    let gx_c = gy_inv_gx.map(|v| Complex64::new(v, 0.0));
    let w_c = w.map(|v| Complex64::new(v, 0.0));
    let mut modes = Vec::with_capacity(nx);
    for (m, &lambda) in lambdas.iter().enumerate() {
        let mut rx: DVector<Complex64> = r_x.column(m).into_owned();
        let mut lx: DVector<Complex64> = l_x.row(m).transpose();
        let norm = rx.norm();
        if norm == 0.0 {
            return Err(Error::Eigen);
        }
        rx /= Complex64::new(norm, 0.0);
        lx *= Complex64::new(norm, 0.0);
        let scale = lx.transpose() * &rx;
        lx /= scale[(0, 0)];

        let ry = -(&gx_c * &rx);
        let ly = -(&w_c * &lx);
        let mut right = DVector::zeros(nx + ny);
        right.rows_mut(0, nx).copy_from(&rx);
        right.rows_mut(nx, ny).copy_from(&ry);
        let mut left = DVector::zeros(nx + ny);
        left.rows_mut(0, nx).copy_from(&lx);
        left.rows_mut(nx, ny).copy_from(&ly);
        modes.push(Mode { lambda, right, left, reference: lambda.norm() < REFERENCE_MODE_TOL });
    }
    Ok(Spectrum { nx, modes })
}

/// Eigenvalues and right eigenvectors of a real square matrix.
pub(crate) fn eigen_decompose(a: &DMatrix<f64>) -> Result<(Vec<Complex64>, DMatrix<Complex64>)> {
    let n = a.nrows();
    if n == 0 {
        return Ok((Vec::new(), DMatrix::zeros(0, 0)));
    }
    let mat = Mat::<f64>::from_fn(n, n, |i, j| a[(i, j)]);
    let evd = mat.eigen().map_err(|_| Error::Eigen)?;
    let s = evd.S();
    let u = evd.U();
    let lambdas: Vec<Complex64> = (0..n).map(|i| s.column_vector()[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    if lambdas.iter().any(|l| !l.re.is_finite() || !l.im.is_finite()) {
        return Err(Error::Eigen);
    }
    Ok((lambdas, vecs))
}

/// `‖(A − λB) r‖` and `‖lᵀ(A − λB)‖` for one mode.
pub fn eigenpair_residuals(lin: &LinearizedSystem, mode: &Mode) -> (f64, f64) {
    let n = lin.nx + lin.ny;
    let a = lin.a.map(|v| Complex64::new(v, 0.0));
    let mut rr = &a * &mode.right;
    let mut lr = a.transpose() * &mode.left;
    for i in 0..lin.nx {
        rr[i] -= mode.lambda * mode.right[i];
        lr[i] -= mode.lambda * mode.left[i];
    }
    debug_assert_eq!(rr.len(), n);
    (rr.norm(), lr.norm())
}
