//! Acceptance report on the bundled 14-bus case. Prints one PASS/FAIL line
//! per criterion. Numerical targets that depend on external machine
//! data are reported only; the property and qualitative criteria are
//! asserted.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use common::checks::*;
use common::simplex::{oracle, random_lp, Outcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ssdr::dae::{ModelFidelity, OperatingPoint};
use ssdr::ilp::{lp_solve, run_ilp, IlpConfig, ScenarioKind};
use ssdr::studies::*;
use ssdr::Error;

const PP: f64 = 0.05;

struct Report {
    lines: Vec<String>,
    failed_required: Vec<&'static str>,
}

impl Report {
    fn line(&mut self, id: &'static str, pass: bool, required: bool, detail: String) {
        let text = format!("{id:<3} {} {detail}", if pass { "PASS" } else { "FAIL" });
        let _ = writeln!(std::io::stderr().lock(), "{text}");
        self.lines.push(text);
        if required && !pass {
            self.failed_required.push(id);
        }
    }
}

fn near(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

#[test]
fn acceptance_report() {
    let case = common::ieee14();
    let config = IlpConfig::default();
    let mut r = Report { lines: Vec::new(), failed_required: Vec::new() };
    let avr_pss = ModelFidelity::WithAvrPss;
    let classical = ModelFidelity::Classical;

    // A1
    let t = Instant::now();
    let nominal_op = OperatingPoint::nominal(&case, avr_pss).unwrap();
    let nominal = 100.0 * sdr(&case, &nominal_op).unwrap();
    let t1 = t.elapsed();
    r.line(
        "A1",
        near(nominal, 0.514, PP) && t1 < Duration::from_secs(5),
        false,
        format!("nominal SDR {nominal:.4}% (target 0.514 +/- 0.05), {:.2} s", secs(t1)),
    );

    // A2
    let classical_nominal = 100.0 * sdr(&case, &OperatingPoint::nominal(&case, classical).unwrap()).unwrap();
    let (classical_opt, classical_trace) = run_ilp(&case, classical, ScenarioKind::LoadShiftCoupled, &config).unwrap();
    let classical_case1 = 100.0 * classical_trace.final_sdr;
    r.line(
        "A2",
        near(classical_nominal, 0.663, PP) && near(classical_case1, 0.691, PP),
        false,
        format!("classical nominal {classical_nominal:.4}% (0.663), case 1 {classical_case1:.4}% (0.691)"),
    );

    // A3
    let t = Instant::now();
    let table = study_table2(&case, avr_pss, &config).unwrap();
    let t3 = t.elapsed();
    let optima: Vec<f64> = table.rows.iter().map(|row| row.optimal_sdr).collect();
    let targets = [0.696, 0.702, 0.638, 0.720, 0.704, 0.726, 0.768];
    let values_ok = optima.iter().zip(targets).all(|(g, w)| near(*g, w, PP));
    let order = [3, 1, 2, 5, 4, 6, 7];
    let order_ok = order.windows(2).all(|w| optima[w[0] - 1] < optima[w[1] - 1]);
    let listed: Vec<String> = optima.iter().zip(targets).map(|(g, w)| format!("{g:.3}/{w:.3}")).collect();
    r.line(
        "A3",
        values_ok && order_ok && t3 < Duration::from_secs(600),
        false,
        format!(
            "optima/targets {} ; ordering 3<1<2<5<4<6<7 {} ; {:.1} s",
            listed.join(" "),
            if order_ok { "holds" } else { "broken" },
            secs(t3)
        ),
    );

    // A4
    let (_, cross) = cross_evaluate(&case, &dr_pattern(&case, &classical_opt), avr_pss).unwrap();
    let crossed = cross.sdr_percent();
    let decrease = crossed <= nominal;
    r.line(
        "A4",
        decrease && near(crossed, 0.350, 0.08),
        false,
        format!("classical pattern under avr-pss {crossed:.4}% vs nominal {nominal:.4}% (target 0.350 +/- 0.08)"),
    );

    // A5
    let (shed_op, shed_trace) = run_ilp(&case, avr_pss, ScenarioKind::MinLoadShedding { target_sdr: 0.00696 }, &config).unwrap();
    let total0: f64 = case.buses.iter().map(|b| b.p_d0).sum();
    let total1: f64 = shed_op.demand_mw(&case).iter().sum();
    let shed = 100.0 * (total0 - total1) / total0;
    r.line(
        "A5",
        near(shed, 11.0, 2.0) && 100.0 * shed_trace.final_sdr >= 0.696 - 1e-6,
        false,
        format!("shed {shed:.2}% of system load (target 11 +/- 2) reaching {:.4}%", 100.0 * shed_trace.final_sdr),
    );

    // A6
    let (gain_op, gain_trace) = run_ilp(&case, avr_pss, ScenarioKind::PssGainTune { co_optimize: false }, &config).unwrap();
    let (_, co_trace) = run_ilp(&case, avr_pss, ScenarioKind::PssGainTune { co_optimize: true }, &config).unwrap();
    let kw = gain_op.setpoints.k_w[0];
    let (gain_sdr, co_sdr) = (100.0 * gain_trace.final_sdr, 100.0 * co_trace.final_sdr);
    r.line(
        "A6",
        near(kw, 0.48, 0.1) && near(gain_sdr, 0.668, PP) && near(co_sdr, 0.703, PP),
        false,
        format!("K_w {kw:.3} (0.48) at {gain_sdr:.4}% (0.668), co-optimized {co_sdr:.4}% (0.703)"),
    );

    // A7
    let b = benchmark_redispatch(&case, &config).unwrap();
    let shortfall = b.realized_sdr < b.target_sdr;
    r.line(
        "A7",
        b.best_bus == 3 && shortfall && near(b.realized_sdr, 0.697, PP) && near(b.target_sdr, 0.726, PP),
        false,
        format!(
            "best bus {} (3), predicted {:.4}% (0.726), realized {:.4}% (0.697)",
            b.best_bus, b.target_sdr, b.realized_sdr
        ),
    );

    // A8, A9
    let t = Instant::now();
    let pairs = study_pairwise(&case, avr_pss, None, &config).unwrap();
    let t8 = t.elapsed();
    let (a, bb, v) = pairs.argmax().unwrap();
    r.line(
        "A8",
        (a, bb) == (3, 5) && near(v, 0.6817, PP) && t8 < Duration::from_secs(900),
        false,
        format!("best pair ({a}, {bb}) at {v:.4}% (target (3, 5) at 0.6817), {} runs in {:.1} s", pairs.pairs(), secs(t8)),
    );
    let equal = study_pairwise(&case, avr_pss, Some((15.0, 5.0)), &config).unwrap();
    let (a, bb, v) = equal.argmax().unwrap();
    r.line(
        "A9",
        (a, bb) == (2, 12) && near(v, 0.7227, PP),
        false,
        format!("equal loading best pair ({a}, {bb}) at {v:.4}% (target (2, 12) at 0.7227)"),
    );

    // P1, P2
    let mut jac: f64 = 0.0;
    let mut pencil = (0.0f64, 0.0f64);
    for fid in ALL {
        let op = OperatingPoint::nominal(&case, fid).unwrap();
        let sys = op.system(&case).unwrap();
        jac = jac.max(jacobian_deviation(&sys, &op.x, &op.y));
        let c = pencil_check(&case, &op);
        pencil = (pencil.0.max(c.residual), pencil.1.max(c.conjugate));
    }
    r.line("P1", jac <= 1e-6, true, format!("max Jacobian deviation {jac:.2e} over three fidelities"));
    r.line(
        "P2",
        pencil.0 <= 1e-8 && pencil.1 <= 1e-9,
        true,
        format!("max scaled residual {:.2e}, conjugate gap {:.2e}", pencil.0, pencil.1),
    );

    // P3
    let errs = sensitivity_errors(&sensitivity_pairs(&case, avr_pss));
    let (worst_name, worst) = errs.iter().max_by(|x, y| x.1.total_cmp(&y.1)).unwrap().clone();
    r.line("P3", worst <= 1e-3, true, format!("{} parameters, worst relative error {worst:.2e} ({worst_name})", errs.len()));

    // P4, P5, P8
    let run = check_run(&case, avr_pss, ScenarioKind::LoadShiftCoupled, true);
    r.line(
        "P4",
        run.conservation <= 1e-8 && run.sdr_drop <= 1e-6,
        true,
        format!("DR total drift {:.2e} pu, largest SDR drop {:.2e} over {} iterates", run.conservation, run.sdr_drop, run.trace.iterations.len()),
    );
    r.line(
        "P5",
        run.broken.is_empty() && run.final_residual <= 1e-6 && run.status_ok,
        true,
        format!("final DAE residual {:.2e}, limits broken {:?}", run.final_residual, run.broken),
    );

    // P6
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut lp_worst: f64 = 0.0;
    let mut lp_agree = true;
    for _ in 0..100 {
        let p = random_lp(&mut rng);
        match (lp_solve(&p), oracle(&p)) {
            (Ok(s), Outcome::Optimal(v)) => lp_worst = lp_worst.max((s.objective - v).abs() / v.abs().max(1.0)),
            (Err(Error::LpInfeasible), Outcome::Infeasible) | (Err(Error::LpUnbounded), Outcome::Unbounded) => {}
            _ => lp_agree = false,
        }
    }
    r.line("P6", lp_agree && lp_worst <= 1e-8, true, format!("100 random LPs, outcomes agree {lp_agree}, worst objective gap {lp_worst:.2e}"));

    // P7
    let mut smib_err: f64 = 0.0;
    for p in [20.0, 80.0, 150.0] {
        let mut smib = common::smib();
        smib.machines[1].p_g0 = p;
        smib_err = smib_err.max(smib_spectrum_error(&smib));
    }
    r.line("P7", smib_err <= 1e-10, true, format!("max eigenvalue error {smib_err:.2e} at three loadings"));

    r.line(
        "P8",
        run.pf_residual <= 1e-8 && run.balance <= 1e-8,
        true,
        format!("power-flow residual {:.2e}, balance {:.2e} pu", run.pf_residual, run.balance),
    );

    // Q1
    let case1 = optima[0];
    r.line(
        "Q1",
        case1 > nominal && classical_case1 > classical_nominal,
        true,
        format!("avr-pss {nominal:.4} -> {case1:.4}%, classical {classical_nominal:.4} -> {classical_case1:.4}%"),
    );

    // Q2
    let joint_max = optima.iter().all(|&v| v <= optima[6]);
    r.line(
        "Q2",
        optima[5] >= optima[0] && joint_max,
        true,
        format!("gen-only {:.4}% vs coupled {:.4}%, joint {:.4}% is the maximum: {joint_max}", optima[5], optima[0], optima[6]),
    );

    // Q3
    let (_, ramp) = run_ilp(&case, avr_pss, ScenarioKind::GenOnly { ramp_cap: Some(1.0) }, &config).unwrap();
    let ramped = 100.0 * ramp.final_sdr;
    r.line("Q3", ramped < case1, true, format!("1 MW ramp-limited gen-only {ramped:.4}% < case 1 {case1:.4}%"));

    let report = r.lines.join("\n");
    assert!(r.failed_required.is_empty(), "failed: {:?}\n{report}", r.failed_required);
    assert!(decrease, "cross-evaluated pattern must not raise the SDR\n{report}");
    assert!(shortfall, "redispatch must fall short of its prediction\n{report}");
}
