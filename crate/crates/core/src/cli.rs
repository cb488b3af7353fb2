//! Command-line front end.
//!
//! Every subcommand prints a human-readable table on stdout. With `--out
//! <dir>` the machine-readable CSV files are written there as well. Exit
//! codes: 0 on success, 1 when a solver fails, 2 on a usage or input error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::dae::{ModelFidelity, OperatingPoint};
use crate::error::{Error, Result};
use crate::ilp::{IlpConfig, ScenarioKind};
use crate::netcase::{ieee14, load_case, SystemCase};
use crate::powerflow::total_losses;
use crate::smallsignal::{finite_spectrum, linearize, metrics, MetricConfig};
use crate::studies::{
    benchmark_redispatch, cross_evaluate, dr_pattern, empty_report, study_pairwise, study_table2, try_run_row,
};

#[derive(Debug, Parser)]
#[command(name = "ssdr", version, about = "Small-signal stability and demand-response load shifting")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Case file; the bundled IEEE 14-bus case when omitted.
    #[arg(long, global = true)]
    pub case: Option<PathBuf>,
    /// classical, avr or avr-pss.
    #[arg(long, global = true, default_value = "avr-pss")]
    pub fidelity: ModelFidelity,
    /// Directory for CSV output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Symmetric eigenvalue step bound per iteration.
    #[arg(long, global = true)]
    pub eps: Option<f64>,
    /// Termination threshold on the LP objective.
    #[arg(long, global = true)]
    pub threshold: Option<f64>,
    #[arg(long, global = true)]
    pub max_iter: Option<usize>,
    /// Deterministic mode. The pipeline has no randomness, so this changes
    /// nothing.
    #[arg(long, global = true)]
    pub seedless: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Power flow at nominal demand.
    Pf,
    /// Oscillatory modes at the nominal operating point.
    Spectrum,
    /// One iterative LP run.
    Optimize {
        /// case1..case7, coupled, p-only, q-only[:MVar], pq[:MVar],
        /// gen-only[:MW], gen-and-load[:MVar], shed:<percent>, pss-gain,
        /// pss-gain+load or pair:<bus>-<bus>.
        #[arg(long, default_value = "case1")]
        scenario: ScenarioKind,
    },
    #[command(subcommand)]
    Study(Study),
    /// Optimizes under one model and evaluates the demand pattern under the
    /// `--fidelity` model.
    CrossEval {
        #[arg(long, default_value = "classical")]
        from: ModelFidelity,
        #[arg(long, default_value = "case1")]
        scenario: ScenarioKind,
    },
    #[command(subcommand)]
    Benchmark(Benchmark),
}

#[derive(Debug, Subcommand)]
pub enum Study {
    /// The seven comparison cases.
    Table2,
    /// Load shifting between every pair of DR buses.
    Pairwise {
        /// Give every DR bus the same nominal load first: P (MW) and Q (MVar).
        #[arg(long, num_args = 2, value_names = ["P", "Q"])]
        equal: Option<Vec<f64>>,
    },
}

#[derive(Debug, Subcommand)]
pub enum Benchmark {
    /// Single-machine redispatch by numeric sensitivities.
    Redispatch,
}

impl Common {
    pub fn config(&self) -> IlpConfig {
        let mut c = IlpConfig::default();
        if let Some(e) = self.eps {
            c.eps_lower = -e.abs();
            c.eps_upper = e.abs();
        }
        if let Some(t) = self.threshold {
            c.threshold = t;
        }
        if let Some(n) = self.max_iter {
            c.max_iter = n;
        }
        c
    }

    fn load(&self) -> Result<SystemCase> {
        match &self.case {
            Some(p) => load_case(p),
            None => Ok(ieee14()),
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout(), &mut std::io::stderr())
}

pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match run(&cli) {
        Ok(text) => {
            let _ = write!(out, "{text}");
            0
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } | Error::Validation(_) | Error::Io(_) | Error::Precondition(_) => 2,
        _ => 1,
    }
}

/// Runs a parsed command, writes any CSV files and returns the text for
/// stdout.
pub fn run(cli: &Cli) -> Result<String> {
    let c = &cli.common;
    let config = c.config();
    config.validate()?;
    let case = c.load()?;
    let mut files: Vec<(String, String)> = Vec::new();
    let text = match &cli.command {
        Command::Pf => {
            let (text, csv) = pf(&case)?;
            files.push(("pf.csv".into(), csv));
            text
        }
        Command::Spectrum => {
            let (text, csv) = spectrum(&case, c.fidelity)?;
            files.push(("spectrum.csv".into(), csv));
            text
        }
        Command::Optimize { scenario } => {
            let start = OperatingPoint::nominal(&case, c.fidelity)?;
            let (row, op, _) = try_run_row(&case, &start, &scenario.label(), *scenario, &config)?;
            let mut report = empty_report(&case, "optimize");
            report.rows.push(row);
            let mut demand = String::from("bus,p0_mw,p_mw,q0_mvar,q_mvar\n");
            let mw = op.demand_mw(&case);
            for (i, b) in case.buses.iter().enumerate() {
                let q = case.to_mw(op.inputs.demand.q[i]);
                let _ = writeln!(demand, "{},{:.6},{:.6},{:.6},{:.6}", b.id, b.p_d0, mw[i], b.q_d0, q);
            }
            files.push(("optimize_demand.csv".into(), demand));
            files.push(("optimize.csv".into(), report.to_csv()));
            files.push(("optimize_convergence.csv".into(), report.convergence_csv()));
            format!("{}\n{}", report.to_table(), report.convergence_csv())
        }
        Command::Study(Study::Table2) => {
            let report = study_table2(&case, c.fidelity, &config)?;
            files.push(("table2.csv".into(), report.to_csv()));
            files.push(("table2_convergence.csv".into(), report.convergence_csv()));
            report.to_table()
        }
        Command::Study(Study::Pairwise { equal }) => {
            let equal = equal.as_ref().map(|v| (v[0], v[1]));
            let study = study_pairwise(&case, c.fidelity, equal, &config)?;
            files.push(("pairwise.csv".into(), study.to_csv()));
            let mut text = study.to_table();
            if let Some((a, b, v)) = study.argmax() {
                let _ = writeln!(text, "best pair ({a}, {b}): {v:.4}%");
            }
            text
        }
        Command::CrossEval { from, scenario } => {
            let (op, trace) = crate::ilp::run_ilp(&case, *from, *scenario, &config)?;
            let pattern = dr_pattern(&case, &op);
            let nominal = crate::studies::sdr(&case, &OperatingPoint::nominal(&case, c.fidelity)?)?;
            let (_, m) = cross_evaluate(&case, &pattern, c.fidelity)?;
            let mut csv = String::from("source,target,source_nominal_pct,source_optimal_pct,target_nominal_pct,target_pct\n");
            let _ = writeln!(
                csv,
                "{},{},{:.6},{:.6},{:.6},{:.6}",
                from.as_str(),
                c.fidelity.as_str(),
                100.0 * trace.initial_sdr,
                100.0 * trace.final_sdr,
                100.0 * nominal,
                m.sdr_percent()
            );
            files.push(("cross_eval.csv".into(), csv));
            let mut text = format!(
                "{} optimum under {}: {:.4}% -> {:.4}%\nunder {}: {:.4}% (nominal {:.4}%)\n",
                scenario.label(),
                from.as_str(),
                100.0 * trace.initial_sdr,
                100.0 * trace.final_sdr,
                c.fidelity.as_str(),
                m.sdr_percent(),
                100.0 * nominal
            );
            for (b, p) in pattern {
                let _ = writeln!(text, "  bus {b:>3}: {p:>8.2} MW");
            }
            text
        }
        Command::Benchmark(Benchmark::Redispatch) => {
            let b = benchmark_redispatch(&case, &config)?;
            files.push(("redispatch.csv".into(), b.to_csv()));
            let mut text = String::from(" bus  SS (pp/MW)  correlation\n");
            for (bus, s) in &b.sensitivities {
                let _ = writeln!(text, "{bus:>4}  {:>10.5}  {:>11.4}", s.ss, s.correlation);
            }
            let _ = writeln!(
                text,
                "bus {}: {:+.2} MW predicted to reach {:.4}%, realized {:.4}% (nominal {:.4}%)",
                b.best_bus, b.predicted_dp_mw, b.target_sdr, b.realized_sdr, b.nominal_sdr
            );
            text
        }
    };
    if let Some(dir) = &c.out {
        write_files(dir, &files)?;
    }
    Ok(text)
}

fn write_files(dir: &Path, files: &[(String, String)]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn pf(case: &SystemCase) -> Result<(String, String)> {
    let op = OperatingPoint::nominal(case, ModelFidelity::Classical)?;
    let pf = &op.pf;
    let mut csv = String::from("bus,v_pu,theta_deg,p_d_mw,q_d_mvar,p_g_mw,q_g_mvar\n");
    for (i, b) in case.buses.iter().enumerate() {
        let (pg, qg) = match case.machine_at(b.id) {
            Some(k) => (case.to_mw(pf.p_g[k]), case.to_mw(pf.q_g[k])),
            None => (0.0, 0.0),
        };
        let _ = writeln!(
            csv,
            "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            b.id,
            pf.v[i],
            pf.theta[i].to_degrees(),
            b.p_d0,
            b.q_d0,
            pg,
            qg
        );
    }
    let losses = case.to_mw(total_losses(case, pf)?);
    let mut text = format!("{:>4} {:>8} {:>9} {:>9} {:>9} {:>9} {:>9}\n", "bus", "V (pu)", "th (deg)", "Pd", "Qd", "Pg", "Qg");
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let _ = writeln!(
            text,
            "{:>4} {:>8.4} {:>9.3} {:>9.2} {:>9.2} {:>9.2} {:>9.2}",
            f[0], f[1], f[2], f[3], f[4], f[5], f[6]
        );
    }
    let _ = writeln!(text, "losses {losses:.3} MW, {} iterations, mismatch {:.2e}", pf.iterations, pf.mismatch);
    Ok((text, csv))
}

fn spectrum(case: &SystemCase, fidelity: ModelFidelity) -> Result<(String, String)> {
    let op = OperatingPoint::nominal(case, fidelity)?;
    let spec = finite_spectrum(&linearize(case, &op)?)?;
    let m = metrics(&spec, &MetricConfig::default())?;
    let mut idx: Vec<usize> = spec.representatives().filter(|&i| spec.modes[i].beta() > 0.0).collect();
    idx.sort_by(|&a, &b| spec.modes[a].damping().total_cmp(&spec.modes[b].damping()));
    let mut csv = String::from("mode,alpha,beta,frequency_hz,damping_pct\n");
    let mut text = format!("{:>4} {:>11} {:>11} {:>8} {:>9}\n", "mode", "alpha", "beta", "f (Hz)", "eta (%)");
    for i in idx {
        let md = &spec.modes[i];
        let _ = writeln!(
            csv,
            "{i},{:.9},{:.9},{:.6},{:.6}",
            md.alpha(),
            md.beta(),
            md.frequency(),
            100.0 * md.damping()
        );
        let _ = writeln!(
            text,
            "{i:>4} {:>11.5} {:>11.5} {:>8.4} {:>9.4}",
            md.alpha(),
            md.beta(),
            md.frequency(),
            100.0 * md.damping()
        );
    }
    let _ = writeln!(text, "smallest damping ratio {:.4}% (mode {})", m.sdr_percent(), m.sdr_mode);
    Ok((text, csv))
}
