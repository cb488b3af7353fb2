//! Optimizes the demand pattern under one model and evaluates it under another.
//!
//! cargo run --release --example cross_eval -- [source-fidelity] [target-fidelity]

use ssdr::dae::{ModelFidelity, OperatingPoint};
use ssdr::ilp::{run_ilp, IlpConfig, ScenarioKind};
use ssdr::netcase::load_case;
use ssdr::studies::{cross_evaluate, dr_pattern, sdr};

fn main() -> ssdr::Result<()> {
    let mut args = std::env::args().skip(1);
    let source: ModelFidelity = args.next().map_or(Ok(ModelFidelity::Classical), |s| s.parse()).unwrap();
    let target: ModelFidelity = args.next().map_or(Ok(ModelFidelity::WithAvrPss), |s| s.parse()).unwrap();
    let case = load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"))?;

    let (op, trace) = run_ilp(&case, source, ScenarioKind::LoadShiftCoupled, &IlpConfig::default())?;
    let pattern = dr_pattern(&case, &op);
    let nominal = sdr(&case, &OperatingPoint::nominal(&case, target)?)?;
    let (_, m) = cross_evaluate(&case, &pattern, target)?;
    println!(
        "optimized under {}: {:.4}% -> {:.4}%",
        source.as_str(),
        100.0 * trace.initial_sdr,
        100.0 * trace.final_sdr
    );
    println!("same pattern under {}: {:.4}% (nominal {:.4}%)", target.as_str(), m.sdr_percent(), 100.0 * nominal);
    for (b, p) in pattern {
        println!("  bus {b:>2}: {p:>7.2} MW");
    }
    Ok(())
}
