//! Prints the oscillatory modes of a case at its nominal operating point.
//!
//! cargo run --example spectrum -- [case-file] [classical|avr|avr-pss]

use std::env;

use ssdr::dae::{ModelFidelity, OperatingPoint};
use ssdr::netcase::load_case;
use ssdr::smallsignal::{finite_spectrum, linearize, machine_participation, metrics, participation_factors, MetricConfig};

fn main() -> ssdr::Result<()> {
    let args: Vec<String> = env::args().skip(1).collect();
    let path = args.first().map(String::as_str).unwrap_or(concat!(env!("CARGO_MANIFEST_DIR"), "/data/ieee14.case"));
    let fidelity: ModelFidelity = args.get(1).map_or(Ok(ModelFidelity::WithAvrPss), |s| s.parse()).unwrap();

    let case = load_case(path)?;
    let op = OperatingPoint::nominal(&case, fidelity)?;
    let lin = linearize(&case, &op)?;
    let spec = finite_spectrum(&lin)?;
    let m = metrics(&spec, &MetricConfig::default())?;

    println!("{:>4} {:>12} {:>12} {:>10} {:>9}", "mode", "alpha", "beta", "f (Hz)", "eta (%)");
    let mut idx: Vec<usize> = spec.representatives().filter(|&i| spec.modes[i].beta() > 0.0).collect();
    idx.sort_by(|&a, &b| spec.modes[a].damping().total_cmp(&spec.modes[b].damping()));
    for i in idx {
        let mode = &spec.modes[i];
        println!(
            "{:>4} {:>12.6} {:>12.6} {:>10.4} {:>9.4}",
            i,
            mode.alpha(),
            mode.beta(),
            mode.frequency(),
            100.0 * mode.damping()
        );
    }
    println!("smallest damping ratio: {:.4}% (mode {})", m.sdr_percent(), m.sdr_mode);
    let layout = ssdr::dae::Layout::new(&case, fidelity);
    let part = machine_participation(&case, &layout, &spec, m.sdr_mode);
    let pf = participation_factors(&spec, m.sdr_mode);
    for (k, p) in part.iter().enumerate() {
        let rotor = pf[layout.delta(k)] + pf[layout.omega(k)];
        println!("  machine at bus {:>2}: participation {:.3} (rotor {:.3})", case.machines[k].bus, p, rotor);
    }
    Ok(())
}
