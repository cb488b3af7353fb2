//! Runs the iterative LP for one scenario and prints the convergence history
//! and the final demand pattern.
//!
//! cargo run --release --example optimize -- [scenario] [classical|avr|avr-pss] [case-file]
//!
//! Scenarios: case1..case7, coupled, p-only, q-only:<MVar>, pq:<MVar>,
//! gen-only[:<MW>], gen-and-load:<MVar>, shed:<percent>, pss-gain,
//! pss-gain+load, pair:<bus>-<bus>.

use std::env;

use ssdr::dae::ModelFidelity;
use ssdr::ilp::{run_ilp, IlpConfig, ScenarioKind};
use ssdr::netcase::load_case;

fn main() -> ssdr::Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let fidelity: ModelFidelity = args.get(1).map_or(Ok(ModelFidelity::WithAvrPss), |s| s.parse()).unwrap();
    let scenario: ScenarioKind = args.first().map_or(Ok(ScenarioKind::LoadShiftCoupled), |s| s.parse()).unwrap();

    let path = args.get(2).map(String::as_str).unwrap_or(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"));
    let case = load_case(path)?;
    let t0 = std::time::Instant::now();
    let (op, trace) = run_ilp(&case, fidelity, scenario, &IlpConfig::default())?;

    println!("{} ({}): {:.4}% -> {:.4}%", scenario.label(), fidelity.as_str(), 100.0 * trace.initial_sdr, 100.0 * trace.final_sdr);
    for it in &trace.iterations {
        println!(
            "{:>4} obj {:>9.5} pred {:>9.5} real {:>9.5} sdr {:.5}% halvings {}",
            it.iteration, it.objective, it.predicted, it.realized, 100.0 * it.sdr, it.halvings
        );
    }
    println!("status {} after {:.2?}", trace.status.as_str(), t0.elapsed());
    println!("{:>4} {:>10} {:>10} {:>10} {:>10}", "bus", "p0 (MW)", "p (MW)", "q0 (MVar)", "q (MVar)");
    for (i, b) in case.buses.iter().enumerate() {
        println!(
            "{:>4} {:>10.2} {:>10.2} {:>10.2} {:>10.2}",
            b.id,
            b.p_d0,
            case.to_mw(op.inputs.demand.p[i]),
            b.q_d0,
            case.to_mw(op.inputs.demand.q[i])
        );
    }
    for (k, m) in case.machines.iter().enumerate() {
        println!("gen {:>2}: {:>8.2} MW (scheduled {:.2})", m.bus, case.to_mw(op.pf.p_g[k]), m.p_g0);
    }
    Ok(())
}
