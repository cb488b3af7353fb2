//! Static network description: buses, branches, machines, excitation and
//! stabilizer controls, and the demand-response specification.
//!
//! Electrical quantities are stored as they appear in the case file: branch and
//! machine parameters in per-unit on the system base, demand and limits in
//! MW/MVar. Conversion to per-unit happens at the boundary through the helper
//! methods on [`SystemCase`].

mod format;
mod ybus;

pub use format::{load_case, parse_case, write_case};
pub use ybus::admittance;

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};

pub type BusId = u32;

/// Text of the bundled IEEE 14-bus case.
pub const IEEE14_CASE: &str = include_str!("../../data/ieee14.case");

/// The bundled IEEE 14-bus case.
pub fn ieee14() -> SystemCase {
    parse_case(IEEE14_CASE).expect("bundled case is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

impl BusKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BusKind::Slack => "slack",
            BusKind::Pv => "pv",
            BusKind::Pq => "pq",
        }
    }
}

impl std::str::FromStr for BusKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slack" => Ok(BusKind::Slack),
            "pv" => Ok(BusKind::Pv),
            "pq" => Ok(BusKind::Pq),
            other => Err(format!("unknown bus kind '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BusRecord {
    pub id: BusId,
    pub kind: BusKind,
    /// Voltage magnitude setpoint (generator buses) or initial guess, pu.
    pub v0: f64,
    /// Nominal real demand, MW.
    pub p_d0: f64,
    /// Nominal reactive demand, MVar.
    pub q_d0: f64,
    pub v_min: f64,
    pub v_max: f64,
    /// Shunt conductance at V = 1 pu, MW.
    pub g_sh: f64,
    /// Shunt susceptance at V = 1 pu, MVar (positive is capacitive).
    pub b_sh: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BranchRecord {
    pub from: BusId,
    pub to: BusId,
    pub r: f64,
    pub x: f64,
    /// Total line-charging susceptance, split evenly between both ends.
    pub b: f64,
    /// Sending-end real power limit, MW, applied in both directions.
    pub rate: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MachineRecord {
    pub bus: BusId,
    /// Inertia constant, s.
    pub h: f64,
    pub d: f64,
    pub r_a: f64,
    pub xd_t: f64,
    pub xq_t: f64,
    /// Scheduled real power output, MW (the slack machine's value is only a
    /// starting guess).
    pub p_g0: f64,
    /// Recorded mechanical torque setpoint, pu. Equilibrium initialization
    /// back-computes the value actually used.
    pub tau_m0: f64,
    /// Recorded field voltage setpoint, pu. Back-computed like `tau_m0`.
    pub v_f0: f64,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AvrRecord {
    pub bus: BusId,
    pub k_a: f64,
    pub k_e: f64,
    pub k_f: f64,
    pub t_r: f64,
    pub t_a: f64,
    pub t_e: f64,
    pub t_f: f64,
    pub a_e: f64,
    pub b_e: f64,
    pub v_ref0: f64,
}

impl AvrRecord {
    /// Exciter ceiling function `A_e exp(B_e |v|)`.
    pub fn ceiling(&self, v: f64) -> f64 {
        self.a_e * (self.b_e * v.abs()).exp()
    }

    /// Derivative of [`AvrRecord::ceiling`]; the kink at zero takes the
    /// positive branch.
    pub fn ceiling_slope(&self, v: f64) -> f64 {
        let sign = if v < 0.0 { -1.0 } else { 1.0 };
        sign * self.a_e * self.b_e * (self.b_e * v.abs()).exp()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PssRecord {
    pub bus: BusId,
    pub k_w: f64,
    pub t_w: f64,
    pub t_1: f64,
    pub t_2: f64,
    pub t_3: f64,
    pub t_4: f64,
    pub k_w_min: f64,
    pub k_w_max: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DrEntry {
    pub bus: BusId,
    pub p_min: f64,
    pub p_max: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Real-to-reactive demand ratio override. `None` uses the nominal ratio.
    pub mu: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DrSpec {
    pub entries: Vec<DrEntry>,
}

impl DrSpec {
    pub fn buses(&self) -> impl Iterator<Item = BusId> + '_ {
        self.entries.iter().map(|e| e.bus)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }
}

/// Constant-power-factor coupling for one demand-responsive bus, written as
/// `p_coef * dp - q_coef * dq = 0` so that purely real loads stay finite.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerFactorCoupling {
    pub p_coef: f64,
    pub q_coef: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemCase {
    pub base_mva: f64,
    /// Base angular frequency, rad/s, multiplying the rotor speed deviation in
    /// the rotor angle equation.
    pub omega_b: f64,
    pub buses: Vec<BusRecord>,
    pub branches: Vec<BranchRecord>,
    pub machines: Vec<MachineRecord>,
    pub avrs: Vec<AvrRecord>,
    pub psss: Vec<PssRecord>,
    pub dr: DrSpec,
}

impl SystemCase {
    pub fn n_bus(&self) -> usize {
        self.buses.len()
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn slack_index(&self) -> usize {
        self.buses
            .iter()
            .position(|b| b.kind == BusKind::Slack)
            .expect("validated case has a slack bus")
    }

    pub fn machine_at(&self, bus: BusId) -> Option<usize> {
        self.machines.iter().position(|m| m.bus == bus)
    }

    pub fn avr_at(&self, bus: BusId) -> Option<usize> {
        self.avrs.iter().position(|a| a.bus == bus)
    }

    pub fn pss_at(&self, bus: BusId) -> Option<usize> {
        self.psss.iter().position(|p| p.bus == bus)
    }

    /// Index of the machine on the slack bus.
    pub fn slack_machine(&self) -> usize {
        let id = self.buses[self.slack_index()].id;
        self.machine_at(id).expect("validated case has a slack machine")
    }

    pub fn to_pu(&self, mw: f64) -> f64 {
        mw / self.base_mva
    }

    pub fn to_mw(&self, pu: f64) -> f64 {
        pu * self.base_mva
    }

    /// Total nominal real demand over all buses, MW.
    pub fn total_demand_mw(&self) -> f64 {
        self.buses.iter().map(|b| b.p_d0).sum()
    }

    /// Total nominal real demand over demand-responsive buses, MW.
    pub fn dr_demand_mw(&self) -> f64 {
        self.dr
            .entries
            .iter()
            .map(|e| self.buses[self.bus_index(e.bus).unwrap()].p_d0)
            .sum()
    }

    pub fn coupling(&self, entry: &DrEntry) -> PowerFactorCoupling {
        match entry.mu {
            Some(mu) => PowerFactorCoupling { p_coef: 1.0, q_coef: mu },
            None => {
                let bus = &self.buses[self.bus_index(entry.bus).unwrap()];
                PowerFactorCoupling { p_coef: bus.q_d0, q_coef: bus.p_d0 }
            }
        }
    }

    /// Checks every structural invariant of the case.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        if !(self.base_mva > 0.0) {
            return fail("base power must be positive".into());
        }
        if !(self.omega_b > 0.0) {
            return fail("base frequency must be positive".into());
        }
        if self.buses.is_empty() {
            return fail("case has no buses".into());
        }

        let mut ids = HashSet::new();
        for b in &self.buses {
            if !ids.insert(b.id) {
                return fail(format!("duplicate bus id {}", b.id));
            }
            if !(b.v_min < b.v_max) {
                return fail(format!("bus {}: v_min must be below v_max", b.id));
            }
        }
        match self.buses.iter().filter(|b| b.kind == BusKind::Slack).count() {
            0 => return fail("no slack bus".into()),
            1 => {}
            _ => return fail("multiple slack buses".into()),
        }

        for br in &self.branches {
            for end in [br.from, br.to] {
                if !ids.contains(&end) {
                    return fail(format!(
                        "branch {}-{} references unknown bus {end}",
                        br.from, br.to
                    ));
                }
            }
            if br.from == br.to {
                return fail(format!("branch {}-{} is a self loop", br.from, br.to));
            }
            if br.r.hypot(br.x) == 0.0 {
                return Err(Error::ZeroImpedance { from: br.from, to: br.to });
            }
        }

        let mut machine_buses = HashSet::new();
        for m in &self.machines {
            if !ids.contains(&m.bus) {
                return fail(format!("machine references unknown bus {}", m.bus));
            }
            if !machine_buses.insert(m.bus) {
                return fail(format!("more than one machine at bus {}", m.bus));
            }
            if !(m.h > 0.0 && m.xd_t > 0.0 && m.xq_t > 0.0) {
                return fail(format!("machine at bus {}: H, x'd and x'q must be positive", m.bus));
            }
        }
        for b in &self.buses {
            let has_machine = machine_buses.contains(&b.id);
            match (b.kind, has_machine) {
                (BusKind::Pq, true) => {
                    return fail(format!("machine at PQ bus {}", b.id));
                }
                (BusKind::Slack | BusKind::Pv, false) => {
                    return fail(format!("{} bus {} has no machine", b.kind.as_str(), b.id));
                }
                _ => {}
            }
        }

        let mut avr_buses = HashSet::new();
        for a in &self.avrs {
            if !machine_buses.contains(&a.bus) {
                return fail(format!("AVR at bus {} has no machine", a.bus));
            }
            if !avr_buses.insert(a.bus) {
                return fail(format!("more than one AVR at bus {}", a.bus));
            }
            if [a.t_r, a.t_a, a.t_e, a.t_f].iter().any(|&t| !(t > 0.0)) {
                return fail(format!("AVR at bus {}: time constants must be positive", a.bus));
            }
        }
        let mut pss_buses = HashSet::new();
        for p in &self.psss {
            if !avr_buses.contains(&p.bus) {
                return fail(format!("PSS at bus {} needs a machine with an AVR", p.bus));
            }
            if !pss_buses.insert(p.bus) {
                return fail(format!("more than one PSS at bus {}", p.bus));
            }
            if [p.t_w, p.t_2, p.t_4].iter().any(|&t| !(t > 0.0)) {
                return fail(format!("PSS at bus {}: T_w, T_2 and T_4 must be positive", p.bus));
            }
            if !(p.k_w_min <= p.k_w_max) {
                return fail(format!("PSS at bus {}: empty gain range", p.bus));
            }
        }

        let mut dr_buses = HashSet::new();
        for e in &self.dr.entries {
            let Some(idx) = self.bus_index(e.bus) else {
                return fail(format!("demand response references unknown bus {}", e.bus));
            };
            if !dr_buses.insert(e.bus) {
                return fail(format!("duplicate demand-response bus {}", e.bus));
            }
            let bus = &self.buses[idx];
            if !(e.p_min <= bus.p_d0 && bus.p_d0 <= e.p_max) {
                return fail(format!("bus {}: nominal demand outside demand-response bounds", e.bus));
            }
            if !(e.q_min <= e.q_max) {
                return fail(format!("bus {}: empty reactive demand range", e.bus));
            }
            if e.mu.is_none() && bus.p_d0 == 0.0 && bus.q_d0 == 0.0 {
                return fail(format!("bus {}: power-factor ratio undefined for zero load", e.bus));
            }
        }

        self.check_connected()
    }

    fn check_connected(&self) -> Result<()> {
        let index: HashMap<BusId, usize> =
            self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect();
        let mut adj = vec![Vec::new(); self.buses.len()];
        for br in &self.branches {
            let (f, t) = (index[&br.from], index[&br.to]);
            adj[f].push(t);
            adj[t].push(f);
        }
        let mut seen = vec![false; self.buses.len()];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        match seen.iter().position(|s| !s) {
            Some(i) => Err(Error::Validation(format!(
                "network is not connected (bus {} unreachable)",
                self.buses[i].id
            ))),
            None => Ok(()),
        }
    }

    /// Replaces the nominal demand of every demand-responsive bus by `p` MW and
    /// `q` MVar, rescaling the demand-response bounds proportionally.
    pub fn with_equal_dr_loading(&self, p: f64, q: f64) -> SystemCase {
        let mut case = self.clone();
        for e in case.dr.entries.iter_mut() {
            let idx = self.bus_index(e.bus).unwrap();
            let bus = &mut case.buses[idx];
            let (p0, q0) = (bus.p_d0, bus.q_d0);
            bus.p_d0 = p;
            bus.q_d0 = q;
            e.p_min = rescale(e.p_min, p0, p);
            e.p_max = rescale(e.p_max, p0, p);
            e.q_min = rescale(e.q_min, q0, q);
            e.q_max = rescale(e.q_max, q0, q);
            e.mu = None;
        }
        case
    }
}

fn rescale(bound: f64, old: f64, new: f64) -> f64 {
    if old == 0.0 {
        bound
    } else {
        bound / old * new
    }
}
