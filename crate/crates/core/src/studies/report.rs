use std::fmt::Write as _;
use std::time::Duration;

use crate::netcase::BusId;

/// One optimization run of a study.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyRow {
    pub label: String,
    pub scenario: String,
    pub fidelity: String,
    pub status: String,
    pub iterations: usize,
    /// Smallest damping ratio before and after, percent.
    pub nominal_sdr: f64,
    pub optimal_sdr: f64,
    /// Real demand at each report bus and real power of each machine, MW.
    pub loading_mw: Vec<f64>,
    pub generation_mw: Vec<f64>,
    /// `(iteration, SDR %)`, starting with iteration 0 at the nominal point.
    pub convergence: Vec<(usize, f64)>,
    pub wall_time: Duration,
    pub error: Option<String>,
}

impl StudyRow {
    pub fn improvement_percent(&self) -> f64 {
        100.0 * (self.optimal_sdr - self.nominal_sdr) / self.nominal_sdr
    }

    pub(crate) fn failed(label: &str, scenario: &str, fidelity: &str, nominal_sdr: f64, error: String) -> StudyRow {
        StudyRow {
            label: label.into(),
            scenario: scenario.into(),
            fidelity: fidelity.into(),
            status: "error".into(),
            iterations: 0,
            nominal_sdr,
            optimal_sdr: f64::NAN,
            loading_mw: Vec::new(),
            generation_mw: Vec::new(),
            convergence: Vec::new(),
            wall_time: Duration::ZERO,
            error: Some(error),
        }
    }
}

/// Rows of one study with a fixed column order.
///
/// CSV columns: `study, label, scenario, fidelity, status, iterations,
/// nominal_sdr_pct, optimal_sdr_pct, improvement_pct`, then `p_<bus>` for
/// every load bus and `pg_<bus>` for every machine bus. Failed rows leave the
/// numeric columns empty. Wall time is reported only in the human table.
#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub id: String,
    pub load_buses: Vec<BusId>,
    pub machine_buses: Vec<BusId>,
    pub rows: Vec<StudyRow>,
}

impl StudyReport {
    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = [
            "study",
            "label",
            "scenario",
            "fidelity",
            "status",
            "iterations",
            "nominal_sdr_pct",
            "optimal_sdr_pct",
            "improvement_pct",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        h.extend(self.load_buses.iter().map(|b| format!("p_{b}")));
        h.extend(self.machine_buses.iter().map(|b| format!("pg_{b}")));
        h
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header().join(",");
        out.push('\n');
        for r in &self.rows {
            let mut f = vec![
                self.id.clone(),
                r.label.clone(),
                r.scenario.clone(),
                r.fidelity.clone(),
                r.status.clone(),
                r.iterations.to_string(),
                num(r.nominal_sdr),
                num(r.optimal_sdr),
                num(r.improvement_percent()),
            ];
            for j in 0..self.load_buses.len() {
                f.push(r.loading_mw.get(j).map_or(String::new(), |v| num(*v)));
            }
            for j in 0..self.machine_buses.len() {
                f.push(r.generation_mw.get(j).map_or(String::new(), |v| num(*v)));
            }
            out.push_str(&f.join(","));
            out.push('\n');
        }
        out
    }

    /// Convergence history of every row: `label, iteration, sdr_pct`.
    pub fn convergence_csv(&self) -> String {
        let mut out = String::from("label,iteration,sdr_pct\n");
        for r in &self.rows {
            for (it, s) in &r.convergence {
                let _ = writeln!(out, "{},{},{}", r.label, it, num(*s));
            }
        }
        out
    }

    /// Fixed-width table rendered from [`StudyReport::to_csv`].
    pub fn to_table(&self) -> String {
        let csv = self.to_csv();
        let cells: Vec<Vec<&str>> = csv.lines().map(|l| l.split(',').collect()).collect();
        let widths: Vec<usize> = (0..cells[0].len())
            .map(|c| cells.iter().map(|row| shorten(row.get(c).copied().unwrap_or("")).len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for (i, row) in cells.iter().enumerate() {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .skip(1)
                .map(|(c, v)| format!("{:>w$}", shorten(v), w = widths[c]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            if i > 0 {
                let r = &self.rows[i - 1];
                let _ = write!(out, "  {:.2?}", r.wall_time);
                if let Some(e) = &r.error {
                    let _ = write!(out, "  ({e})");
                }
            }
            out.push('\n');
        }
        out
    }
}

fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.6}")
    } else {
        String::new()
    }
}

/// Numeric cells lose trailing digits in the human table.
fn shorten(v: &str) -> String {
    match v.parse::<f64>() {
        Ok(x) if v.contains('.') => format!("{x:.3}"),
        _ => v.to_string(),
    }
}
