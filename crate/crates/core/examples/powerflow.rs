//! Solves the power flow of a case at nominal demand and prints bus voltages,
//! generator outputs, branch flows and losses.
//!
//! cargo run --example powerflow -- [case-file]

use ssdr::netcase::{ieee14, load_case};
use ssdr::powerflow::{branch_flow, nominal_generation, solve_power_flow, total_losses, Demand, Direction};

fn main() -> ssdr::Result<()> {
    let case = match std::env::args().nth(1) {
        Some(p) => load_case(p)?,
        None => ieee14(),
    };
    let pf = solve_power_flow(&case, &Demand::nominal(&case), &nominal_generation(&case), None)?;
    println!("converged in {} iterations, mismatch {:.2e}", pf.iterations, pf.mismatch);
    println!("{:>4} {:>8} {:>9}", "bus", "V (pu)", "th (deg)");
    for (i, b) in case.buses.iter().enumerate() {
        println!("{:>4} {:>8.4} {:>9.3}", b.id, pf.v[i], pf.theta[i].to_degrees());
    }
    for (k, m) in case.machines.iter().enumerate() {
        println!("gen {:>2}: P {:>8.2} MW  Q {:>8.2} MVar", m.bus, case.to_mw(pf.p_g[k]), case.to_mw(pf.q_g[k]));
    }
    for (k, br) in case.branches.iter().enumerate() {
        let (ft, tf) = (branch_flow(&case, &pf, k, Direction::FromTo)?, branch_flow(&case, &pf, k, Direction::ToFrom)?);
        println!("{:>3}-{:<3} {:>8.2} {:>8.2} MW", br.from, br.to, ft, tf);
    }
    println!("losses {:.3} MW", case.to_mw(total_losses(&case, &pf)?));
    Ok(())
}
