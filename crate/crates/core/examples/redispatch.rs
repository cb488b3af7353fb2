//! Generation sensitivities of the smallest damping ratio and the
//! single-machine redispatch they suggest.
//!
//! cargo run --release --example redispatch

use ssdr::ilp::IlpConfig;
use ssdr::netcase::load_case;
use ssdr::studies::benchmark_redispatch;

fn main() -> ssdr::Result<()> {
    let case = load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"))?;
    let b = benchmark_redispatch(&case, &IlpConfig::default())?;
    for (bus, s) in &b.sensitivities {
        println!("bus {bus}: SS = {:+.5} pp/MW (mode correlation {:.3})", s.ss, s.correlation);
    }
    println!(
        "bus {} to {:.4}% needs {:+.2} MW; realized {:.4}%",
        b.best_bus, b.target_sdr, b.predicted_dp_mw, b.realized_sdr
    );
    Ok(())
}
