//! Shifts load between every pair of demand-responsive buses.
//!
//! cargo run --release --example pairwise -- [--equal p_mw q_mvar]

use ssdr::dae::ModelFidelity;
use ssdr::ilp::IlpConfig;
use ssdr::netcase::load_case;
use ssdr::studies::study_pairwise;

fn main() -> ssdr::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let equal = match args.first().map(String::as_str) {
        Some("--equal") => Some((
            args.get(1).map_or(15.0, |s| s.parse().unwrap()),
            args.get(2).map_or(5.0, |s| s.parse().unwrap()),
        )),
        _ => None,
    };
    let case = load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"))?;
    let study = study_pairwise(&case, ModelFidelity::WithAvrPss, equal, &IlpConfig::default())?;
    print!("{}", study.to_table());
    if let Some((a, b, v)) = study.argmax() {
        println!("best pair ({a}, {b}): {v:.4}%");
    }
    Ok(())
}
