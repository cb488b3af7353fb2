//! Runs the seven comparison cases and prints the report table.
//!
//! cargo run --release --example table2 -- [classical|avr|avr-pss]

use ssdr::dae::ModelFidelity;
use ssdr::ilp::IlpConfig;
use ssdr::netcase::load_case;
use ssdr::studies::study_table2;

fn main() -> ssdr::Result<()> {
    let fidelity: ModelFidelity = std::env::args().nth(1).map_or(Ok(ModelFidelity::WithAvrPss), |s| s.parse()).unwrap();
    let case = load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"))?;
    let report = study_table2(&case, fidelity, &IlpConfig::default())?;
    print!("{}", report.to_table());
    Ok(())
}
