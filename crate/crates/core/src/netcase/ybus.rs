use nalgebra::DMatrix;
use num_complex::Complex64;

use super::SystemCase;
use crate::error::{Error, Result};

/// Bus admittance matrix in per-unit, indexed by bus position in the case.
///
/// Each branch contributes its series admittance `1/(r + jx)` plus half of its
/// charging susceptance at both ends; bus shunts land on the diagonal.
pub fn admittance(case: &SystemCase) -> Result<DMatrix<Complex64>> {
    let n = case.n_bus();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in &case.branches {
        let z = Complex64::new(br.r, br.x);
        if z.norm() == 0.0 {
            return Err(Error::ZeroImpedance { from: br.from, to: br.to });
        }
        let unknown = |id| Error::Validation(format!("branch references unknown bus {id}"));
        let f = case.bus_index(br.from).ok_or_else(|| unknown(br.from))?;
        let t = case.bus_index(br.to).ok_or_else(|| unknown(br.to))?;
        let ys = z.inv();
        let half_charging = Complex64::new(0.0, br.b / 2.0);
        y[(f, f)] += ys + half_charging;
        y[(t, t)] += ys + half_charging;
        y[(f, t)] -= ys;
        y[(t, f)] -= ys;
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y[(i, i)] += Complex64::new(bus.g_sh, bus.b_sh) / case.base_mva;
    }
    Ok(y)
}
