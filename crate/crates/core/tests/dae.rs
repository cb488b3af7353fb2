mod common;

use nalgebra::DVector;
use ssdr::dae::*;
use ssdr::netcase::SystemCase;
use ssdr::Error;

const ALL: [ModelFidelity; 3] = [ModelFidelity::Classical, ModelFidelity::WithAvr, ModelFidelity::WithAvrPss];

fn cases() -> Vec<(&'static str, SystemCase)> {
    vec![("ieee14", common::ieee14()), ("three_bus", common::three_bus())]
}

#[test]
fn equilibrium_residuals_vanish() {
    for (name, case) in cases() {
        for fid in ALL {
            let op = OperatingPoint::nominal(&case, fid).unwrap();
            let (f, g) = op.system(&case).unwrap().residuals(&op.x, &op.y).unwrap();
            assert!(f.amax() <= 1e-10, "{name} {fid:?} f {:e}", f.amax());
            assert!(g.amax() <= 1e-10, "{name} {fid:?} g {:e}", g.amax());
        }
    }
}

#[test]
fn residual_shapes_follow_the_layout() {
    for (_, case) in cases() {
        for fid in ALL {
            let op = OperatingPoint::nominal(&case, fid).unwrap();
            let sys = op.system(&case).unwrap();
            let l = &sys.layout;
            let (f, g) = sys.residuals(&op.x, &op.y).unwrap();
            assert_eq!((f.len(), g.len()), (l.nx, l.ny));
            assert_eq!(l.nx, 2 * l.n_machine + 4 * l.n_avr() + 3 * l.n_pss());
            assert_eq!(l.ny, 2 * l.n_bus + 9 * l.n_machine + l.n_avr() + 4 * l.n_pss());
            let j = sys.jacobian(&op.x, &op.y).unwrap();
            assert_eq!((j.nrows(), j.ncols()), (l.n(), l.n()));
        }
    }
}

#[test]
fn wrong_state_length_is_rejected() {
    let case = common::three_bus();
    let op = OperatingPoint::nominal(&case, ModelFidelity::WithAvr).unwrap();
    let sys = op.system(&case).unwrap();
    let short = DVector::zeros(op.x.len() - 1);
    assert!(matches!(sys.residuals(&short, &op.y), Err(Error::Dimension(_))));
    assert!(matches!(sys.jacobian(&op.x, &short), Err(Error::Dimension(_))));
}

#[test]
fn pss_fidelity_needs_a_stabilizer() {
    let case = common::smib();
    let err = OperatingPoint::nominal(&case, ModelFidelity::WithAvrPss).unwrap_err();
    assert!(matches!(err, Error::Precondition(_)));
}

#[test]
fn fidelity_names_round_trip() {
    for fid in ALL {
        assert_eq!(fid.as_str().parse::<ModelFidelity>().unwrap(), fid);
    }
    assert!("detailed".parse::<ModelFidelity>().is_err());
}

#[test]
fn unloaded_machine_sits_at_its_terminal_angle() {
    let mut case = common::smib();
    case.machines[1].p_g0 = 0.0;
    let op = OperatingPoint::nominal(&case, ModelFidelity::Classical).unwrap();
    let l = Layout::new(&case, ModelFidelity::Classical);
    for k in 0..2 {
        let bus = l.machine_bus[k];
        assert!(op.y[l.mach_y(k, 0)].abs() <= 1e-12);
        assert!(op.y[l.mach_y(k, 1)].abs() <= 1e-12);
        assert!((op.x[l.delta(k)] - op.y[l.theta(bus)]).abs() <= 1e-12);
        assert!((op.y[l.mach_y(k, 8)] - op.y[l.v(bus)]).abs() <= 1e-12);
    }
}

#[test]
fn speed_deviation_drives_the_angle_row() {
    let case = common::smib();
    let op = OperatingPoint::nominal(&case, ModelFidelity::Classical).unwrap();
    let sys = op.system(&case).unwrap();
    let l = &sys.layout;
    let mut x = op.x.clone();
    x[l.omega(1)] += 0.01;
    let (f, _) = sys.residuals(&x, &op.y).unwrap();
    assert!((f[l.delta(1)] - 0.01).abs() <= 1e-15);
    assert_eq!(f[l.delta(0)], 0.0);

    let case = common::ieee14();
    let op = OperatingPoint::nominal(&case, ModelFidelity::Classical).unwrap();
    let sys = op.system(&case).unwrap();
    let mut x = op.x.clone();
    x[sys.layout.omega(2)] = 0.01;
    let (f, _) = sys.residuals(&x, &op.y).unwrap();
    assert!((f[sys.layout.delta(2)] - case.omega_b * 0.01).abs() <= 1e-12);
}

#[test]
fn machine_quantities_match_terminal_phasors() {
    let case = common::ieee14();
    let op = OperatingPoint::nominal(&case, ModelFidelity::WithAvr).unwrap();
    let l = Layout::new(&case, ModelFidelity::WithAvr);
    for k in 0..l.n_machine {
        let bus = l.machine_bus[k];
        let (v, th, d) = (op.y[l.v(bus)], op.y[l.theta(bus)], op.x[l.delta(k)]);
        let m = |j| op.y[l.mach_y(k, j)];
        assert!((m(2) - v * (d - th).sin()).abs() <= 1e-12);
        assert!((m(3) - v * (d - th).cos()).abs() <= 1e-12);
        assert!((m(4) - (m(2) * m(0) + m(3) * m(1))).abs() <= 1e-10);
        assert!((m(5) - (m(3) * m(0) - m(2) * m(1))).abs() <= 1e-10);
        assert!((m(4) - op.pf.p_g[k]).abs() <= 1e-10);
        assert!((m(5) - op.pf.q_g[k]).abs() <= 1e-10);
    }
}

#[test]
fn controllers_start_at_rest() {
    for (_, case) in cases() {
        let op = OperatingPoint::nominal(&case, ModelFidelity::WithAvrPss).unwrap();
        let l = Layout::new(&case, ModelFidelity::WithAvrPss);
        for a in 0..l.n_avr() {
            let bus = l.machine_bus[l.avr_machine[a]];
            assert_eq!(op.x[l.avr_x(a, 0)], op.y[l.v(bus)]);
            assert_eq!(op.x[l.avr_x(a, 3)], 0.0);
            assert_eq!(op.x[l.avr_x(a, 2)], op.y[l.mach_y(l.avr_machine[a], 8)]);
        }
        for s in 0..l.n_pss() {
            assert_eq!(op.x[l.pss_x(s, 0)], 0.0);
            assert_eq!(op.y[l.pss_y(s, 0)], 0.0);
            assert_eq!(op.y[l.pss_y(s, 1)], 0.0);
        }
    }
}

#[test]
fn torque_setpoints_balance_generation() {
    let case = common::three_bus();
    let op = OperatingPoint::nominal(&case, ModelFidelity::Classical).unwrap();
    for (k, m) in case.machines.iter().enumerate() {
        // Electrical power at the air gap: terminal power plus armature losses.
        let l = Layout::new(&case, ModelFidelity::Classical);
        let (id, iq) = (op.y[l.mach_y(k, 0)], op.y[l.mach_y(k, 1)]);
        let airgap = op.pf.p_g[k] + m.r_a * (id * id + iq * iq);
        assert!((op.setpoints.tau_m[k] - airgap).abs() <= 1e-10);
    }
}

#[test]
fn implausible_field_voltage_is_rejected() {
    let mut case = common::smib();
    case.machines[1].xd_t = 40.0;
    case.machines[1].xq_t = 40.0;
    let err = OperatingPoint::nominal(&case, ModelFidelity::Classical).unwrap_err();
    assert!(matches!(err, Error::Initialization(_)), "{err}");
}

#[test]
fn pss_gain_change_keeps_the_equilibrium() {
    let case = common::ieee14();
    let op = OperatingPoint::nominal(&case, ModelFidelity::WithAvrPss).unwrap();
    let gains: Vec<f64> = case.psss.iter().map(|p| p.k_w_max).collect();
    let moved = op.with_pss_gains(&case, &gains);
    let (f, g) = moved.system(&case).unwrap().residuals(&moved.x, &moved.y).unwrap();
    assert!(f.amax().max(g.amax()) <= 1e-10);
    assert_eq!(moved.setpoints.k_w, gains);
}
