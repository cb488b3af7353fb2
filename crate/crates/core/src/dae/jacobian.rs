use nalgebra::{DMatrix, DVector};

use super::{DaeSystem, Param};
use crate::error::Result;
use crate::powerflow;

impl DaeSystem<'_> {
    /// Analytic Jacobian of the stacked residual `[f; g]` with respect to the
    /// stacked state `[x; y]`, i.e. the matrix `[[f_x, f_y], [g_x, g_y]]`.
    pub fn jacobian(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<DMatrix<f64>> {
        self.check_dims(x, y)?;
        let l = &self.layout;
        let case = self.case;
        let nx = l.nx;
        let mut jac = DMatrix::zeros(l.n(), l.n());
        // Row/column offsets for the algebraic block.
        let gr = |r: usize| nx + r;
        let yc = |c: usize| nx + c;

        let v: Vec<f64> = (0..l.n_bus).map(|i| y[l.v(i)]).collect();
        let th: Vec<f64> = (0..l.n_bus).map(|i| y[l.theta(i)]).collect();
        let (p, q) = powerflow::injections(&self.g_bus, &self.b_bus, &v, &th);
        for i in 0..l.n_bus {
            let (rp, rq) = (gr(l.v(i)), gr(l.theta(i)));
            for j in 0..l.n_bus {
                let (gij, bij) = (self.g_bus[(i, j)], self.b_bus[(i, j)]);
                if i == j {
                    jac[(rp, yc(l.v(i)))] = p[i] / v[i] + v[i] * gij;
                    jac[(rp, yc(l.theta(i)))] = -q[i] - v[i] * v[i] * bij;
                    jac[(rq, yc(l.v(i)))] = q[i] / v[i] - v[i] * bij;
                    jac[(rq, yc(l.theta(i)))] = p[i] - v[i] * v[i] * gij;
                } else if gij != 0.0 || bij != 0.0 {
                    let (s, c) = (th[i] - th[j]).sin_cos();
                    jac[(rp, yc(l.v(j)))] = v[i] * (gij * c + bij * s);
                    jac[(rp, yc(l.theta(j)))] = v[i] * v[j] * (gij * s - bij * c);
                    jac[(rq, yc(l.v(j)))] = v[i] * (gij * s - bij * c);
                    jac[(rq, yc(l.theta(j)))] = -v[i] * v[j] * (gij * c + bij * s);
                }
            }
        }

        for (k, m) in case.machines.iter().enumerate() {
            let bus = l.machine_bus[k];
            let (vb, tb) = (v[bus], th[bus]);
            let delta = x[l.delta(k)];
            let [i_d, i_q, v_d, v_q, _p_g, _q_g, psi_d, psi_q, _v_f] =
                std::array::from_fn(|j| y[l.mach_y(k, j)]);
            let col = |j: usize| yc(l.mach_y(k, j));
            let (c_id, c_iq, c_vd, c_vq, c_pg, c_qg, c_psd, c_psq, c_vf) =
                (col(0), col(1), col(2), col(3), col(4), col(5), col(6), col(7), col(8));

            jac[(gr(l.v(bus)), c_pg)] = -1.0;
            jac[(gr(l.theta(bus)), c_qg)] = -1.0;

            let (s, c) = (delta - tb).sin_cos();
            let row = |j: usize| gr(l.mach_y(k, j));
            let (cv, ct) = (yc(l.v(bus)), yc(l.theta(bus)));
            let cd = l.delta(k);

            jac[(row(0), cv)] = s;
            jac[(row(0), cd)] = vb * c;
            jac[(row(0), ct)] = -vb * c;
            jac[(row(0), c_vd)] = -1.0;

            jac[(row(1), cv)] = c;
            jac[(row(1), cd)] = -vb * s;
            jac[(row(1), ct)] = vb * s;
            jac[(row(1), c_vq)] = -1.0;

            jac[(row(2), c_vd)] = i_d;
            jac[(row(2), c_id)] = v_d;
            jac[(row(2), c_vq)] = i_q;
            jac[(row(2), c_iq)] = v_q;
            jac[(row(2), c_pg)] = -1.0;

            jac[(row(3), c_vq)] = i_d;
            jac[(row(3), c_id)] = v_q;
            jac[(row(3), c_vd)] = -i_q;
            jac[(row(3), c_iq)] = -v_d;
            jac[(row(3), c_qg)] = -1.0;

            jac[(row(4), c_psd)] = 1.0;
            jac[(row(4), c_id)] = m.xd_t;
            jac[(row(4), c_vf)] = -1.0;

            jac[(row(5), c_psq)] = 1.0;
            jac[(row(5), c_iq)] = m.xq_t;

            jac[(row(6), c_psd)] = -1.0;
            jac[(row(6), c_vq)] = 1.0;
            jac[(row(6), c_iq)] = m.r_a;

            jac[(row(7), c_psq)] = 1.0;
            jac[(row(7), c_vd)] = 1.0;
            jac[(row(7), c_id)] = m.r_a;

            match l.machine_avr[k] {
                Some(a) => {
                    jac[(row(8), l.avr_x(a, 2))] = 1.0;
                    jac[(row(8), c_vf)] = -1.0;
                }
                None => jac[(row(8), c_vf)] = 1.0,
            }

            let (rd, rw) = (l.delta(k), l.omega(k));
            let m2 = 2.0 * m.h;
            jac[(rd, l.omega(k))] = case.omega_b;
            jac[(rw, c_psd)] = -i_q / m2;
            jac[(rw, c_iq)] = -psi_d / m2;
            jac[(rw, c_psq)] = i_d / m2;
            jac[(rw, c_id)] = psi_q / m2;
            jac[(rw, l.omega(k))] = -m.d / m2;
        }

        for a in 0..l.n_avr() {
            let rec = &case.avrs[l.avr_record[a]];
            let bus = l.machine_bus[l.avr_machine[a]];
            let x_vm = l.avr_x(a, 0);
            let x_vr1 = l.avr_x(a, 1);
            let x_vfa = l.avr_x(a, 2);
            let x_vr2 = l.avr_x(a, 3);
            let c_vref = yc(l.v_ref(a));

            jac[(x_vm, yc(l.v(bus)))] = 1.0 / rec.t_r;
            jac[(x_vm, x_vm)] = -1.0 / rec.t_r;

            jac[(x_vr1, c_vref)] = rec.k_a / rec.t_a;
            jac[(x_vr1, x_vm)] = -rec.k_a / rec.t_a;
            jac[(x_vr1, x_vr2)] = -rec.k_a / rec.t_a;
            jac[(x_vr1, x_vr1)] = -1.0 / rec.t_a;

            let d_vr1 = 1.0 / rec.t_e;
            let d_vfa = -(rec.k_e + rec.ceiling_slope(x[x_vfa])) / rec.t_e;
            jac[(x_vfa, x_vr1)] = d_vr1;
            jac[(x_vfa, x_vfa)] = d_vfa;

            let kf = rec.k_f / rec.t_f;
            jac[(x_vr2, x_vr1)] = kf * d_vr1;
            jac[(x_vr2, x_vfa)] = kf * d_vfa;
            jac[(x_vr2, x_vr2)] = -1.0 / rec.t_f;

            let r_vref = gr(l.v_ref(a));
            jac[(r_vref, c_vref)] = 1.0;
            if let Some(s) = l.avr_pss[a] {
                jac[(r_vref, yc(l.pss_y(s, 1)))] = -1.0;
            }
        }

        for s in 0..l.n_pss() {
            let rec = &case.psss[l.pss_record[s]];
            let k = l.avr_machine[l.pss_avr[s]];
            let [x_w, x_p, x_q] = std::array::from_fn(|j| l.pss_x(s, j));
            let [c_si, c_so, c_w, c_p] = std::array::from_fn(|j| yc(l.pss_y(s, j)));
            let [r_a, r_b, r_c, r_d] = std::array::from_fn(|j| gr(l.pss_y(s, j)));

            jac[(x_w, c_w)] = 1.0 / rec.t_w;
            jac[(x_p, c_w)] = 1.0;
            jac[(x_p, c_p)] = -1.0;
            jac[(x_q, c_p)] = 1.0;
            jac[(x_q, c_so)] = -1.0;

            jac[(r_a, c_si)] = 1.0;
            jac[(r_a, l.omega(k))] = -self.setpoints.k_w[s];
            jac[(r_b, c_si)] = 1.0;
            jac[(r_b, c_w)] = -1.0;
            jac[(r_b, x_w)] = -1.0;
            jac[(r_c, c_p)] = rec.t_2;
            jac[(r_c, c_w)] = -rec.t_1;
            jac[(r_c, x_p)] = -1.0;
            jac[(r_d, c_so)] = rec.t_4;
            jac[(r_d, c_p)] = -rec.t_3;
            jac[(r_d, x_q)] = -1.0;
        }

        Ok(jac)
    }

    /// Derivative of the stacked residual `[f; g]` with respect to one
    /// parameter, as sparse `(row, value)` pairs.
    pub fn param_column(&self, x: &DVector<f64>, param: Param) -> Vec<(usize, f64)> {
        let l = &self.layout;
        let nx = l.nx;
        match param {
            Param::Pd(i) => vec![(nx + l.v(i), 1.0)],
            Param::Qd(i) => vec![(nx + l.theta(i), 1.0)],
            Param::TauM(k) => vec![(l.omega(k), 1.0 / (2.0 * self.case.machines[k].h))],
            Param::Vf0(k) => match l.machine_avr[k] {
                Some(_) => vec![],
                None => vec![(nx + l.mach_y(k, 8), -1.0)],
            },
            Param::Vref0(a) => vec![(nx + l.v_ref(a), -1.0)],
            Param::Kw(s) => {
                let k = l.avr_machine[l.pss_avr[s]];
                vec![(nx + l.pss_y(s, 0), -x[l.omega(k)])]
            }
            Param::FlowLimit(_) => vec![],
        }
    }

    /// Derivative of the Jacobian `[[f_x, f_y], [g_x, g_y]]` with respect to a
    /// parameter, as sparse `(row, col, value)` triples. Demand, torque and
    /// setpoints enter the residuals additively, so only stabilizer gains
    /// contribute.
    pub fn param_jacobian(&self, param: Param) -> Vec<(usize, usize, f64)> {
        let l = &self.layout;
        match param {
            Param::Kw(s) => {
                let k = l.avr_machine[l.pss_avr[s]];
                vec![(l.nx + l.pss_y(s, 0), l.omega(k), -1.0)]
            }
            _ => vec![],
        }
    }
}
