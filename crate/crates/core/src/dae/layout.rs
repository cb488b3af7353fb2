use super::ModelFidelity;
use crate::netcase::SystemCase;

/// Names of the nine per-machine algebraic variables, in storage order.
pub const MACHINE_Y: [&str; 9] = ["i_d", "i_q", "v_d", "v_q", "p_g", "q_g", "psi_d", "psi_q", "v_f"];
pub const AVR_X: [&str; 4] = ["v_m", "v_r1", "v_f_avr", "v_r2"];
pub const PSS_X: [&str; 3] = ["x_w", "x_p", "x_q"];
pub const PSS_Y: [&str; 4] = ["v_si", "v_so", "v_w", "v_p"];

/// Canonical placement of every state and equation.
///
/// Dynamic states: `[delta_k, omega_k]` for each machine, then
/// `[v_m, v_r1, v_f_avr, v_r2]` for each active AVR, then `[x_w, x_p, x_q]`
/// for each active PSS.
///
/// Algebraic states: `[V_i, theta_i]` for each bus, then the nine machine
/// variables of [`MACHINE_Y`] per machine, then `v_ref` per active AVR, then
/// [`PSS_Y`] per active PSS. Equation rows follow the same blocks, so `f` has
/// the shape of `x` and `g` the shape of `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub fidelity: ModelFidelity,
    pub n_bus: usize,
    pub n_machine: usize,
    /// Bus position of each machine.
    pub machine_bus: Vec<usize>,
    /// Active AVR slot of each machine, if any.
    pub machine_avr: Vec<Option<usize>>,
    /// Case AVR record behind each active AVR slot.
    pub avr_record: Vec<usize>,
    /// Machine driven by each active AVR slot.
    pub avr_machine: Vec<usize>,
    /// Case PSS record behind each active PSS slot.
    pub pss_record: Vec<usize>,
    /// AVR slot fed by each active PSS slot.
    pub pss_avr: Vec<usize>,
    /// Active PSS slot feeding each AVR slot, if any.
    pub avr_pss: Vec<Option<usize>>,
    pub nx: usize,
    pub ny: usize,
}

impl Layout {
    pub fn new(case: &SystemCase, fidelity: ModelFidelity) -> Layout {
        let n_bus = case.n_bus();
        let n_machine = case.machines.len();
        let machine_bus = case.machines.iter().map(|m| case.bus_index(m.bus).unwrap()).collect();

        let mut machine_avr = vec![None; n_machine];
        let mut avr_record = Vec::new();
        let mut avr_machine = Vec::new();
        if fidelity != ModelFidelity::Classical {
            for (k, m) in case.machines.iter().enumerate() {
                if let Some(r) = case.avr_at(m.bus) {
                    machine_avr[k] = Some(avr_record.len());
                    avr_record.push(r);
                    avr_machine.push(k);
                }
            }
        }
        let mut pss_record = Vec::new();
        let mut pss_avr = Vec::new();
        let mut avr_pss = vec![None; avr_record.len()];
        if fidelity == ModelFidelity::WithAvrPss {
            for (a, &k) in avr_machine.iter().enumerate() {
                if let Some(s) = case.pss_at(case.machines[k].bus) {
                    avr_pss[a] = Some(pss_record.len());
                    pss_record.push(s);
                    pss_avr.push(a);
                }
            }
        }
        let nx = 2 * n_machine + 4 * avr_record.len() + 3 * pss_record.len();
        let ny = 2 * n_bus + 9 * n_machine + avr_record.len() + 4 * pss_record.len();
        Layout {
            fidelity,
            n_bus,
            n_machine,
            machine_bus,
            machine_avr,
            avr_record,
            avr_machine,
            pss_record,
            pss_avr,
            avr_pss,
            nx,
            ny,
        }
    }

    pub fn n_avr(&self) -> usize {
        self.avr_record.len()
    }

    pub fn n_pss(&self) -> usize {
        self.pss_record.len()
    }

    pub fn n(&self) -> usize {
        self.nx + self.ny
    }

    // --- dynamic states ---
    pub fn delta(&self, k: usize) -> usize {
        2 * k
    }
    pub fn omega(&self, k: usize) -> usize {
        2 * k + 1
    }
    /// AVR state `j` (index into [`AVR_X`]) of AVR slot `a`.
    pub fn avr_x(&self, a: usize, j: usize) -> usize {
        2 * self.n_machine + 4 * a + j
    }
    /// PSS state `j` (index into [`PSS_X`]) of PSS slot `s`.
    pub fn pss_x(&self, s: usize, j: usize) -> usize {
        2 * self.n_machine + 4 * self.n_avr() + 3 * s + j
    }

    // --- algebraic states ---
    pub fn v(&self, i: usize) -> usize {
        2 * i
    }
    pub fn theta(&self, i: usize) -> usize {
        2 * i + 1
    }
    /// Machine variable `j` (index into [`MACHINE_Y`]) of machine `k`.
    pub fn mach_y(&self, k: usize, j: usize) -> usize {
        2 * self.n_bus + 9 * k + j
    }
    pub fn v_ref(&self, a: usize) -> usize {
        2 * self.n_bus + 9 * self.n_machine + a
    }
    /// PSS variable `j` (index into [`PSS_Y`]) of PSS slot `s`.
    pub fn pss_y(&self, s: usize, j: usize) -> usize {
        2 * self.n_bus + 9 * self.n_machine + self.n_avr() + 4 * s + j
    }

    /// Human-readable label for an entry of the stacked `(x, y)` vector.
    pub fn label(&self, case: &SystemCase, idx: usize) -> String {
        if idx < self.nx {
            let mach = 2 * self.n_machine;
            let avr = mach + 4 * self.n_avr();
            if idx < mach {
                let k = idx / 2;
                let name = if idx % 2 == 0 { "delta" } else { "omega" };
                format!("{name}@{}", case.machines[k].bus)
            } else if idx < avr {
                let a = (idx - mach) / 4;
                format!("{}@{}", AVR_X[(idx - mach) % 4], case.machines[self.avr_machine[a]].bus)
            } else {
                let s = (idx - avr) / 3;
                let k = self.avr_machine[self.pss_avr[s]];
                format!("{}@{}", PSS_X[(idx - avr) % 3], case.machines[k].bus)
            }
        } else {
            let j = idx - self.nx;
            let net = 2 * self.n_bus;
            let mach = net + 9 * self.n_machine;
            let avr = mach + self.n_avr();
            if j < net {
                let name = if j % 2 == 0 { "V" } else { "theta" };
                format!("{name}@{}", case.buses[j / 2].id)
            } else if j < mach {
                format!("{}@{}", MACHINE_Y[(j - net) % 9], case.machines[(j - net) / 9].bus)
            } else if j < avr {
                format!("v_ref@{}", case.machines[self.avr_machine[j - mach]].bus)
            } else {
                let s = (j - avr) / 4;
                let k = self.avr_machine[self.pss_avr[s]];
                format!("{}@{}", PSS_Y[(j - avr) % 4], case.machines[k].bus)
            }
        }
    }
}
