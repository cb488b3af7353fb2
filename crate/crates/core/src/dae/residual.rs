use nalgebra::DVector;

use super::DaeSystem;
use crate::error::Result;
use crate::powerflow;

impl DaeSystem<'_> {
    /// Evaluates `(f, g)` at `(x, y)`.
    pub fn residuals(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<(DVector<f64>, DVector<f64>)> {
        self.check_dims(x, y)?;
        let l = &self.layout;
        let case = self.case;
        let mut f = DVector::zeros(l.nx);
        let mut g = DVector::zeros(l.ny);

        // Network power balance.
        let v: Vec<f64> = (0..l.n_bus).map(|i| y[l.v(i)]).collect();
        let th: Vec<f64> = (0..l.n_bus).map(|i| y[l.theta(i)]).collect();
        let (p, q) = powerflow::injections(&self.g_bus, &self.b_bus, &v, &th);
        for i in 0..l.n_bus {
            g[l.v(i)] = p[i] + self.demand.p[i];
            g[l.theta(i)] = q[i] + self.demand.q[i];
        }

        for (k, m) in case.machines.iter().enumerate() {
            let bus = l.machine_bus[k];
            let (vb, tb) = (v[bus], th[bus]);
            let delta = x[l.delta(k)];
            let omega = x[l.omega(k)];
            let [i_d, i_q, v_d, v_q, p_g, q_g, psi_d, psi_q, v_f] =
                std::array::from_fn(|j| y[l.mach_y(k, j)]);

            g[l.v(bus)] -= p_g;
            g[l.theta(bus)] -= q_g;

            let (s, c) = (delta - tb).sin_cos();
            let base = l.mach_y(k, 0);
            g[base] = vb * s - v_d;
            g[base + 1] = vb * c - v_q;
            g[base + 2] = v_d * i_d + v_q * i_q - p_g;
            g[base + 3] = v_q * i_d - v_d * i_q - q_g;
            g[base + 4] = psi_d + m.xd_t * i_d - v_f;
            g[base + 5] = psi_q + m.xq_t * i_q;
            g[base + 6] = -psi_d + v_q + m.r_a * i_q;
            g[base + 7] = psi_q + v_d + m.r_a * i_d;
            g[base + 8] = match l.machine_avr[k] {
                Some(a) => x[l.avr_x(a, 2)] - v_f,
                None => v_f - self.setpoints.v_f0[k],
            };

            f[l.delta(k)] = case.omega_b * omega;
            f[l.omega(k)] =
                (self.setpoints.tau_m[k] - psi_d * i_q + psi_q * i_d - m.d * omega) / (2.0 * m.h);
        }

        for a in 0..l.n_avr() {
            let rec = &case.avrs[l.avr_record[a]];
            let bus = l.machine_bus[l.avr_machine[a]];
            let [v_m, v_r1, v_fa, v_r2] = std::array::from_fn(|j| x[l.avr_x(a, j)]);
            let v_ref = y[l.v_ref(a)];
            let dv_fa = (v_r1 - rec.k_e * v_fa - rec.ceiling(v_fa)) / rec.t_e;
            f[l.avr_x(a, 0)] = (v[bus] - v_m) / rec.t_r;
            f[l.avr_x(a, 1)] = (rec.k_a * (v_ref - v_m - v_r2) - v_r1) / rec.t_a;
            f[l.avr_x(a, 2)] = dv_fa;
            f[l.avr_x(a, 3)] = (rec.k_f * dv_fa - v_r2) / rec.t_f;

            g[l.v_ref(a)] = v_ref
                - self.setpoints.v_ref0[a]
                - l.avr_pss[a].map_or(0.0, |s| y[l.pss_y(s, 1)]);
        }

        for s in 0..l.n_pss() {
            let rec = &case.psss[l.pss_record[s]];
            let k = l.avr_machine[l.pss_avr[s]];
            let [x_w, x_p, x_q] = std::array::from_fn(|j| x[l.pss_x(s, j)]);
            let [v_si, v_so, v_w, v_p] = std::array::from_fn(|j| y[l.pss_y(s, j)]);
            f[l.pss_x(s, 0)] = v_w / rec.t_w;
            f[l.pss_x(s, 1)] = v_w - v_p;
            f[l.pss_x(s, 2)] = v_p - v_so;

            g[l.pss_y(s, 0)] = v_si - self.setpoints.k_w[s] * x[l.omega(k)];
            g[l.pss_y(s, 1)] = v_si - v_w - x_w;
            g[l.pss_y(s, 2)] = v_p * rec.t_2 - v_w * rec.t_1 - x_p;
            g[l.pss_y(s, 3)] = v_so * rec.t_4 - v_p * rec.t_3 - x_q;
        }

        Ok((f, g))
    }
}
