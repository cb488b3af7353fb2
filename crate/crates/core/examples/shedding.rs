//! Least demand curtailment that reaches a given smallest damping ratio.
//!
//! cargo run --release --example shedding -- [target-percent]

use ssdr::dae::ModelFidelity;
use ssdr::ilp::{min_load_shedding, IlpConfig};
use ssdr::netcase::load_case;

fn main() -> ssdr::Result<()> {
    let target: f64 = std::env::args().nth(1).map_or(0.696, |s| s.parse().expect("target in percent"));
    let case = load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"))?;
    let shed = min_load_shedding(&case, ModelFidelity::WithAvrPss, target / 100.0, &IlpConfig::default())?;
    println!(
        "target {:.3}%: shed {:.2} MW ({:.1}% of demand), SDR {:.4}% after {} iterations",
        target,
        shed.shed_mw,
        100.0 * shed.shed_fraction,
        100.0 * shed.trace.final_sdr,
        shed.trace.iterations.len()
    );
    for (i, b) in case.buses.iter().enumerate() {
        if case.dr.buses().any(|id| id == b.id) {
            println!("  bus {:>2}: {:>7.2} -> {:>7.2} MW", b.id, b.p_d0, case.to_mw(shed.point.inputs.demand.p[i]));
        }
    }
    Ok(())
}
