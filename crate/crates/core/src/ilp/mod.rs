//! Iterative linear programming over demand, generation and stabilizer
//! gains, driven by generalized eigenvalue sensitivities.
//!
//! Each iteration linearizes the DAE at the current equilibrium, picks the
//! least-damped modes, builds an LP whose equality block is the linearized
//! equilibrium and whose eigenvalue rows come from the sensitivities, solves
//! it, and restores a new equilibrium with a full power flow.

mod build;
mod driver;
mod lp;
mod tuning;

pub use build::{build_lp, Adjustment, LpLayout};
pub use driver::{restore, run_ilp, run_ilp_from, select_criticals, IlpIteration, IlpStatus, IlpTrace};
pub use lp::{lp_solve, LinRow, LpProblem, LpSolution};
pub use tuning::{min_load_shedding, sdr_at_gain, tune_pss_gain, GainTuning, Shedding};

use crate::netcase::BusId;

/// What the optimizer may change and under which demand constraints.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScenarioKind {
    /// Real and reactive demand shift together at a fixed power factor.
    LoadShiftCoupled,
    /// Only real demand shifts; reactive demand stays nominal.
    LoadShiftPOnly,
    /// Only reactive demand shifts, within `q_dev_cap` MVar of nominal.
    LoadShiftQOnly { q_dev_cap: f64 },
    /// Real and reactive demand shift independently; reactive demand within
    /// `q_dev_cap` MVar of nominal.
    LoadShiftIndependent { q_dev_cap: f64 },
    /// Only PV-machine real power changes, optionally within `ramp_cap` MW of
    /// its schedule.
    GenOnly { ramp_cap: Option<f64> },
    /// Independent demand shifting together with PV generation changes.
    GenAndLoad { q_dev_cap: f64 },
    /// Least total curtailment that lifts the smallest damping ratio to
    /// `target_sdr` (fraction).
    MinLoadShedding { target_sdr: f64 },
    /// Stabilizer gain as a decision variable, alone or together with a
    /// coupled load shift.
    PssGainTune { co_optimize: bool },
    /// Coupled shift restricted to two buses, without demand bounds.
    PairwiseShift { bus_a: BusId, bus_b: BusId },
}

impl ScenarioKind {
    /// The seven comparison cases of the 14-bus study.
    pub fn table2_case(n: usize) -> Option<ScenarioKind> {
        Some(match n {
            1 => ScenarioKind::LoadShiftCoupled,
            2 => ScenarioKind::LoadShiftPOnly,
            3 => ScenarioKind::LoadShiftQOnly { q_dev_cap: 100.0 },
            4 => ScenarioKind::LoadShiftIndependent { q_dev_cap: 100.0 },
            5 => ScenarioKind::LoadShiftIndependent { q_dev_cap: 20.0 },
            6 => ScenarioKind::GenOnly { ramp_cap: None },
            7 => ScenarioKind::GenAndLoad { q_dev_cap: 20.0 },
            _ => return None,
        })
    }

    pub fn label(&self) -> String {
        match self {
            ScenarioKind::LoadShiftCoupled => "load-shift-coupled".into(),
            ScenarioKind::LoadShiftPOnly => "load-shift-p".into(),
            ScenarioKind::LoadShiftQOnly { q_dev_cap } => format!("load-shift-q(cap={q_dev_cap})"),
            ScenarioKind::LoadShiftIndependent { q_dev_cap } => format!("load-shift-pq(cap={q_dev_cap})"),
            ScenarioKind::GenOnly { ramp_cap: None } => "gen-only".into(),
            ScenarioKind::GenOnly { ramp_cap: Some(r) } => format!("gen-only(ramp={r})"),
            ScenarioKind::GenAndLoad { q_dev_cap } => format!("gen-and-load(cap={q_dev_cap})"),
            ScenarioKind::MinLoadShedding { target_sdr } => format!("min-shedding(target={:.4}%)", 100.0 * target_sdr),
            ScenarioKind::PssGainTune { co_optimize: true } => "pss-gain+load".into(),
            ScenarioKind::PssGainTune { co_optimize: false } => "pss-gain".into(),
            ScenarioKind::PairwiseShift { bus_a, bus_b } => format!("pair:{bus_a}-{bus_b}"),
        }
    }

    pub(crate) fn shifts_p(&self) -> bool {
        matches!(
            self,
            ScenarioKind::LoadShiftCoupled
                | ScenarioKind::LoadShiftPOnly
                | ScenarioKind::LoadShiftIndependent { .. }
                | ScenarioKind::GenAndLoad { .. }
                | ScenarioKind::MinLoadShedding { .. }
                | ScenarioKind::PssGainTune { co_optimize: true }
                | ScenarioKind::PairwiseShift { .. }
        )
    }

    pub(crate) fn shifts_q(&self) -> bool {
        matches!(
            self,
            ScenarioKind::LoadShiftCoupled
                | ScenarioKind::LoadShiftQOnly { .. }
                | ScenarioKind::LoadShiftIndependent { .. }
                | ScenarioKind::GenAndLoad { .. }
                | ScenarioKind::MinLoadShedding { .. }
                | ScenarioKind::PssGainTune { co_optimize: true }
                | ScenarioKind::PairwiseShift { .. }
        )
    }

    /// Reactive demand follows real demand at the power-factor ratio.
    pub(crate) fn coupled(&self) -> bool {
        matches!(
            self,
            ScenarioKind::LoadShiftCoupled
                | ScenarioKind::MinLoadShedding { .. }
                | ScenarioKind::PssGainTune { co_optimize: true }
                | ScenarioKind::PairwiseShift { .. }
        )
    }

    pub(crate) fn q_cap(&self) -> Option<f64> {
        match *self {
            ScenarioKind::LoadShiftQOnly { q_dev_cap }
            | ScenarioKind::LoadShiftIndependent { q_dev_cap }
            | ScenarioKind::GenAndLoad { q_dev_cap } => Some(q_dev_cap),
            _ => None,
        }
    }

    pub(crate) fn moves_generation(&self) -> bool {
        matches!(self, ScenarioKind::GenOnly { .. } | ScenarioKind::GenAndLoad { .. })
    }

    pub(crate) fn ramp_cap(&self) -> Option<f64> {
        match *self {
            ScenarioKind::GenOnly { ramp_cap } => ramp_cap,
            _ => None,
        }
    }

    pub(crate) fn moves_gain(&self) -> bool {
        matches!(self, ScenarioKind::PssGainTune { .. })
    }

    /// Total real (and, when shifted independently, reactive) DR demand is
    /// conserved.
    pub(crate) fn conserves_p(&self) -> bool {
        self.shifts_p() && !matches!(self, ScenarioKind::MinLoadShedding { .. })
    }

    pub(crate) fn conserves_q(&self) -> bool {
        self.shifts_q() && !self.coupled()
    }
}

/// Tuning of the iterative LP.
#[derive(Clone, Debug, PartialEq)]
pub struct IlpConfig {
    /// Per-iteration bounds on the change of the real and imaginary part of
    /// every critical eigenvalue.
    pub eps_lower: f64,
    pub eps_upper: f64,
    /// Termination threshold on the LP objective: percentage points for the
    /// damping objectives, a fraction of total demand for shedding.
    pub threshold: f64,
    pub max_iter: usize,
    /// Modes within this damping ratio (fraction) of the smallest are critical.
    pub critical_margin: f64,
    pub critical_cap: usize,
    /// Per-iteration cap on any single demand or generation change as a
    /// fraction of nominal total demand.
    pub step_cap: f64,
    pub max_halvings: usize,
    /// Relative band between predicted and realized improvement when the
    /// eigenvalue step bounds are active.
    pub prediction_band: f64,
    /// Shedding penalty per percentage point of unmet damping target, MW.
    pub shortfall_penalty: f64,
    /// Cost, in percentage points per pu, of moving any decision variable.
    /// Breaks ties between equally good LP vertices in favour of small moves.
    pub move_penalty: f64,
}

impl Default for IlpConfig {
    fn default() -> Self {
        IlpConfig {
            eps_lower: -0.001,
            eps_upper: 0.001,
            threshold: 1e-4,
            max_iter: 1500,
            critical_margin: 0.005,
            critical_cap: 5,
            step_cap: 0.1,
            max_halvings: 6,
            prediction_band: 0.3,
            shortfall_penalty: 1e4,
            move_penalty: 1e-4,
        }
    }
}

impl IlpConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if !(self.eps_lower <= 0.0 && self.eps_upper >= 0.0 && self.eps_lower <= self.eps_upper) {
            return Err(crate::Error::Validation("step bounds must satisfy eps_lower <= 0 <= eps_upper".into()));
        }
        if !(self.threshold > 0.0) {
            return Err(crate::Error::Validation("threshold must be positive".into()));
        }
        if self.critical_cap == 0 {
            return Err(crate::Error::Validation("critical cap must be at least one".into()));
        }
        Ok(())
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    /// Accepts `case1`..`case7`, `coupled`, `p-only`, `q-only[:cap]`,
    /// `pq[:cap]`, `gen-only[:ramp]`, `gen-and-load[:cap]`, `shed:<percent>`,
    /// `pss-gain`, `pss-gain+load` and `pair:<bus>-<bus>`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (s, None),
        };
        let num = |default: Option<f64>| -> std::result::Result<f64, String> {
            match arg {
                Some(a) => a.parse().map_err(|_| format!("'{a}' is not a number in scenario '{s}'")),
                None => default.ok_or_else(|| format!("scenario '{s}' needs a value after ':'")),
            }
        };
        let cap = |v: f64| if v >= 0.0 { Ok(v) } else { Err(format!("cap in scenario '{s}' must be non-negative")) };
        Ok(match name {
            _ if name.starts_with("case") && arg.is_none() => name[4..]
                .parse()
                .ok()
                .and_then(ScenarioKind::table2_case)
                .ok_or_else(|| format!("unknown case '{name}' (expected case1..case7)"))?,
            "coupled" => ScenarioKind::LoadShiftCoupled,
            "p-only" => ScenarioKind::LoadShiftPOnly,
            "q-only" => ScenarioKind::LoadShiftQOnly { q_dev_cap: cap(num(Some(100.0))?)? },
            "pq" => ScenarioKind::LoadShiftIndependent { q_dev_cap: cap(num(Some(100.0))?)? },
            "gen-only" => ScenarioKind::GenOnly { ramp_cap: arg.map(|_| num(None).and_then(cap)).transpose()? },
            "gen-and-load" => ScenarioKind::GenAndLoad { q_dev_cap: cap(num(Some(20.0))?)? },
            "shed" => ScenarioKind::MinLoadShedding { target_sdr: num(None)? / 100.0 },
            "pss-gain" => ScenarioKind::PssGainTune { co_optimize: false },
            "pss-gain+load" => ScenarioKind::PssGainTune { co_optimize: true },
            "pair" => {
                let a = arg.ok_or_else(|| format!("scenario '{s}' needs two buses, e.g. pair:3-5"))?;
                let (x, y) = a.split_once('-').ok_or_else(|| format!("scenario '{s}' needs two buses, e.g. pair:3-5"))?;
                let bus = |t: &str| t.parse::<BusId>().map_err(|_| format!("'{t}' is not a bus id"));
                ScenarioKind::PairwiseShift { bus_a: bus(x)?, bus_b: bus(y)? }
            }
            _ => return Err(format!("unknown scenario '{s}'")),
        })
    }
}
