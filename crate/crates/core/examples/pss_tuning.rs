//! Tunes the stabilizer gain alone, then jointly with a coupled demand shift.
//!
//! cargo run --release --example pss_tuning

use ssdr::dae::{ModelFidelity, OperatingPoint};
use ssdr::ilp::{tune_pss_gain, IlpConfig};
use ssdr::netcase::load_case;

fn main() -> ssdr::Result<()> {
    let case = load_case(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"))?;
    let config = IlpConfig::default();
    let op = OperatingPoint::nominal(&case, ModelFidelity::WithAvrPss)?;

    let alone = tune_pss_gain(&case, &op, false, None, &config)?;
    println!("gain only:      K_w = {:.3}, SDR = {:.4}%", alone.k_w, 100.0 * alone.sdr);

    let joint = tune_pss_gain(&case, &op, true, None, &config)?;
    println!("gain + demand:  K_w = {:.3}, SDR = {:.4}%", joint.k_w, 100.0 * joint.sdr);
    for (i, b) in case.buses.iter().enumerate() {
        if case.dr.buses().any(|id| id == b.id) {
            println!("  bus {:>2}: {:>7.2} -> {:>7.2} MW", b.id, b.p_d0, case.to_mw(joint.point.inputs.demand.p[i]));
        }
    }
    Ok(())
}
