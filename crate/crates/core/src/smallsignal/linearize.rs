use nalgebra::{DMatrix, DVector};

use crate::dae::{DaeSystem, OperatingPoint};
use crate::error::Result;
use crate::netcase::SystemCase;

/// Jacobian blocks of the DAE at an operating point.
///
/// `a` is the full matrix `[[f_x, f_y], [g_x, g_y]]`; the descriptor matrix
/// `B = diag(I_nx, 0)` is implicit in `nx`.
#[derive(Clone, Debug)]
pub struct LinearizedSystem {
    pub nx: usize,
    pub ny: usize,
    pub a: DMatrix<f64>,
}

impl LinearizedSystem {
    pub fn from_jacobian(nx: usize, a: DMatrix<f64>) -> LinearizedSystem {
        let ny = a.nrows() - nx;
        LinearizedSystem { nx, ny, a }
    }

    pub fn fx(&self) -> DMatrix<f64> {
        self.a.view((0, 0), (self.nx, self.nx)).into_owned()
    }

    pub fn fy(&self) -> DMatrix<f64> {
        self.a.view((0, self.nx), (self.nx, self.ny)).into_owned()
    }

    pub fn gx(&self) -> DMatrix<f64> {
        self.a.view((self.nx, 0), (self.ny, self.nx)).into_owned()
    }

    pub fn gy(&self) -> DMatrix<f64> {
        self.a.view((self.nx, self.nx), (self.ny, self.ny)).into_owned()
    }

    /// Descriptor matrix `diag(I, 0)`.
    pub fn b(&self) -> DMatrix<f64> {
        let n = self.nx + self.ny;
        let mut b = DMatrix::zeros(n, n);
        for i in 0..self.nx {
            b[(i, i)] = 1.0;
        }
        b
    }
}

pub fn linearize(case: &SystemCase, op: &OperatingPoint) -> Result<LinearizedSystem> {
    let sys = op.system(case)?;
    linearize_system(&sys, &op.x, &op.y)
}

pub fn linearize_system(sys: &DaeSystem<'_>, x: &DVector<f64>, y: &DVector<f64>) -> Result<LinearizedSystem> {
    Ok(LinearizedSystem::from_jacobian(sys.layout.nx, sys.jacobian(x, y)?))
}

/// Central finite-difference Jacobian of the residuals, used to verify the
/// analytic one.
pub fn finite_difference_jacobian(
    sys: &DaeSystem<'_>,
    x: &DVector<f64>,
    y: &DVector<f64>,
    step: f64,
) -> Result<DMatrix<f64>> {
    let nx = x.len();
    let n = nx + y.len();
    let mut jac = DMatrix::zeros(n, n);
    let stack = |f: DVector<f64>, g: DVector<f64>| {
        let mut out = DVector::zeros(n);
        out.rows_mut(0, nx).copy_from(&f);
        out.rows_mut(nx, n - nx).copy_from(&g);
        out
    };
    for c in 0..n {
        let (mut xp, mut yp) = (x.clone(), y.clone());
        let (mut xm, mut ym) = (x.clone(), y.clone());
        let h;
        if c < nx {
            h = step * x[c].abs().max(1.0);
            xp[c] += h;
            xm[c] -= h;
        } else {
            h = step * y[c - nx].abs().max(1.0);
            yp[c - nx] += h;
            ym[c - nx] -= h;
        }
        let (fp, gp) = sys.residuals(&xp, &yp)?;
        let (fm, gm) = sys.residuals(&xm, &ym)?;
        let col = (stack(fp, gp) - stack(fm, gm)) / (2.0 * h);
        jac.set_column(c, &col);
    }
    Ok(jac)
}
