//! Differential-algebraic swing model: machines behind transient reactances,
//! optional exciters with a ceiling function, and optional lead-lag
//! stabilizers feeding the exciter reference.
//!
//! `f(x, y) = dx/dt` holds the rotor, exciter and stabilizer dynamics;
//! `g(x, y) = 0` holds the network power balance, the machine stator and
//! flux relations, the field-voltage coupling, the exciter reference and the
//! stabilizer signal chain. See [`Layout`] for the ordering of both.

mod init;
mod jacobian;
mod layout;
mod residual;

pub use init::initialize_equilibrium;
pub use layout::{Layout, AVR_X, MACHINE_Y, PSS_X, PSS_Y};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::netcase::{admittance, SystemCase};
use crate::powerflow::{self, Demand, PowerFlowState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelFidelity {
    /// Constant field voltage, no controls.
    Classical,
    /// Exciter on every machine that has an AVR record.
    WithAvr,
    /// Exciters plus every stabilizer in the case.
    WithAvrPss,
}

impl ModelFidelity {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelFidelity::Classical => "classical",
            ModelFidelity::WithAvr => "avr",
            ModelFidelity::WithAvrPss => "avr-pss",
        }
    }
}

impl std::str::FromStr for ModelFidelity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "classical" => Ok(ModelFidelity::Classical),
            "avr" => Ok(ModelFidelity::WithAvr),
            "avr-pss" => Ok(ModelFidelity::WithAvrPss),
            other => Err(format!("unknown fidelity '{other}' (expected classical, avr or avr-pss)")),
        }
    }
}

/// External inputs that define one operating condition.
#[derive(Clone, Debug, PartialEq)]
pub struct Inputs {
    pub demand: Demand,
    /// Scheduled real power of each machine, pu (slack entry is a guess).
    pub generation: Vec<f64>,
    /// Stabilizer gain of each case PSS record.
    pub k_w: Vec<f64>,
}

impl Inputs {
    pub fn nominal(case: &SystemCase) -> Inputs {
        Inputs {
            demand: Demand::nominal(case),
            generation: powerflow::nominal_generation(case),
            k_w: case.psss.iter().map(|p| p.k_w).collect(),
        }
    }
}

/// Setpoints that close the equilibrium: torque per machine, field voltage per
/// machine (used only where no exciter is active), exciter reference per AVR
/// slot, and stabilizer gain per PSS slot.
#[derive(Clone, Debug, PartialEq)]
pub struct Setpoints {
    pub tau_m: Vec<f64>,
    pub v_f0: Vec<f64>,
    pub v_ref0: Vec<f64>,
    pub k_w: Vec<f64>,
}

/// Quantities the residuals depend on besides the states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Param {
    /// Real demand at a bus position.
    Pd(usize),
    /// Reactive demand at a bus position.
    Qd(usize),
    TauM(usize),
    Vf0(usize),
    /// Exciter reference setpoint of an AVR slot.
    Vref0(usize),
    /// Stabilizer gain of a PSS slot.
    Kw(usize),
    /// Thermal limit of a branch; never enters the dynamics.
    FlowLimit(usize),
}

/// A fully parameterized DAE model ready for evaluation.
#[derive(Clone, Debug)]
pub struct DaeSystem<'a> {
    pub case: &'a SystemCase,
    pub layout: Layout,
    pub(crate) g_bus: DMatrix<f64>,
    pub(crate) b_bus: DMatrix<f64>,
    pub demand: Demand,
    pub setpoints: Setpoints,
}

impl<'a> DaeSystem<'a> {
    pub fn new(
        case: &'a SystemCase,
        fidelity: ModelFidelity,
        demand: Demand,
        setpoints: Setpoints,
    ) -> Result<DaeSystem<'a>> {
        if fidelity == ModelFidelity::WithAvrPss && case.psss.is_empty() {
            return Err(Error::Precondition("avr-pss fidelity needs at least one PSS".into()));
        }
        let layout = Layout::new(case, fidelity);
        let (g_bus, b_bus) = powerflow::split(&admittance(case)?);
        let sys = DaeSystem { case, layout, g_bus, b_bus, demand, setpoints };
        sys.check_setpoints()?;
        Ok(sys)
    }

    fn check_setpoints(&self) -> Result<()> {
        let l = &self.layout;
        let s = &self.setpoints;
        if s.tau_m.len() != l.n_machine
            || s.v_f0.len() != l.n_machine
            || s.v_ref0.len() != l.n_avr()
            || s.k_w.len() != l.n_pss()
        {
            return Err(Error::Dimension("setpoints do not match the model layout".into()));
        }
        if self.demand.p.len() != l.n_bus || self.demand.q.len() != l.n_bus {
            return Err(Error::Dimension("demand does not match the bus count".into()));
        }
        Ok(())
    }

    pub fn fidelity(&self) -> ModelFidelity {
        self.layout.fidelity
    }

    fn check_dims(&self, x: &DVector<f64>, y: &DVector<f64>) -> Result<()> {
        if x.len() != self.layout.nx || y.len() != self.layout.ny {
            return Err(Error::Dimension(format!(
                "state has ({}, {}) entries, model expects ({}, {})",
                x.len(),
                y.len(),
                self.layout.nx,
                self.layout.ny
            )));
        }
        Ok(())
    }
}

/// An equilibrium of the DAE together with everything that produced it.
#[derive(Clone, Debug)]
pub struct OperatingPoint {
    pub fidelity: ModelFidelity,
    pub x: DVector<f64>,
    pub y: DVector<f64>,
    pub inputs: Inputs,
    pub setpoints: Setpoints,
    pub pf: PowerFlowState,
}

impl OperatingPoint {
    /// Solves the power flow for `inputs` and initializes the equilibrium.
    pub fn solve(
        case: &SystemCase,
        fidelity: ModelFidelity,
        inputs: Inputs,
        warm: Option<&PowerFlowState>,
    ) -> Result<OperatingPoint> {
        let pf = powerflow::solve_power_flow(case, &inputs.demand, &inputs.generation, warm)?;
        initialize_equilibrium(case, fidelity, &pf, inputs)
    }

    pub fn nominal(case: &SystemCase, fidelity: ModelFidelity) -> Result<OperatingPoint> {
        OperatingPoint::solve(case, fidelity, Inputs::nominal(case), None)
    }

    pub fn system<'a>(&self, case: &'a SystemCase) -> Result<DaeSystem<'a>> {
        DaeSystem::new(case, self.fidelity, self.inputs.demand.clone(), self.setpoints.clone())
    }

    /// Stacked `(x, y)` vector.
    pub fn z(&self) -> DVector<f64> {
        let mut z = DVector::zeros(self.x.len() + self.y.len());
        z.rows_mut(0, self.x.len()).copy_from(&self.x);
        z.rows_mut(self.x.len(), self.y.len()).copy_from(&self.y);
        z
    }

    /// Same equilibrium with the stabilizer gains replaced. The gains do not
    /// move the equilibrium because the stabilizer input vanishes at rest.
    pub fn with_pss_gains(&self, case: &SystemCase, k_w: &[f64]) -> OperatingPoint {
        let mut op = self.clone();
        op.inputs.k_w = k_w.to_vec();
        let layout = Layout::new(case, self.fidelity);
        op.setpoints.k_w = layout.pss_record.iter().map(|&r| k_w[r]).collect();
        op
    }

    /// Real demand of every bus, MW.
    pub fn demand_mw(&self, case: &SystemCase) -> Vec<f64> {
        self.inputs.demand.p.iter().map(|&p| case.to_mw(p)).collect()
    }
}
