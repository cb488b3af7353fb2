//! Sectioned plain-text case format.
//!
//! ```text
//! [BASE]    base_mva omega_b
//! [BUS]     id kind v0 p_d0 q_d0 v_min v_max [g_sh b_sh]
//! [BRANCH]  from to r x b rate
//! [MACHINE] bus h d r_a xd_t xq_t p_g0 tau_m0 v_f0 p_min p_max q_min q_max
//! [AVR]     bus k_a k_e k_f t_r t_a t_e t_f a_e b_e v_ref0
//! [PSS]     bus k_w t_w t_1 t_2 t_3 t_4 [k_w_min k_w_max]
//! [DR]      bus p_min p_max q_min q_max [mu]
//! ```
//!
//! Fields are whitespace separated, `#` starts a comment, and `inf` is accepted
//! for unbounded limits. Powers are MW/MVar, everything else per-unit on the
//! system base or seconds.

use std::fmt::Write as _;
use std::path::Path;

use super::{
    AvrRecord, BranchRecord, BusRecord, DrEntry, DrSpec, MachineRecord, PssRecord,
    SystemCase,
};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Base,
    Bus,
    Branch,
    Machine,
    Avr,
    Pss,
    Dr,
}

impl Section {
    fn from_header(name: &str) -> Option<Section> {
        Some(match name.to_ascii_uppercase().as_str() {
            "BASE" => Section::Base,
            "BUS" => Section::Bus,
            "BRANCH" => Section::Branch,
            "MACHINE" => Section::Machine,
            "AVR" => Section::Avr,
            "PSS" => Section::Pss,
            "DR" => Section::Dr,
            _ => return None,
        })
    }

    fn fields(self) -> &'static [&'static str] {
        match self {
            Section::Base => &["base_mva", "omega_b"],
            Section::Bus => &["id", "kind", "v0", "p_d0", "q_d0", "v_min", "v_max", "g_sh", "b_sh"],
            Section::Branch => &["from", "to", "r", "x", "b", "rate"],
            Section::Machine => &[
                "bus", "h", "d", "r_a", "xd_t", "xq_t", "p_g0", "tau_m0", "v_f0", "p_min",
                "p_max", "q_min", "q_max",
            ],
            Section::Avr => {
                &["bus", "k_a", "k_e", "k_f", "t_r", "t_a", "t_e", "t_f", "a_e", "b_e", "v_ref0"]
            }
            Section::Pss => {
                &["bus", "k_w", "t_w", "t_1", "t_2", "t_3", "t_4", "k_w_min", "k_w_max"]
            }
            Section::Dr => &["bus", "p_min", "p_max", "q_min", "q_max", "mu"],
        }
    }

    /// Number of leading fields that must be present.
    fn required(self) -> usize {
        match self {
            Section::Bus => 7,
            Section::Pss => 7,
            Section::Dr => 5,
            s => s.fields().len(),
        }
    }
}

struct Record<'a> {
    line: usize,
    section: Section,
    tokens: Vec<&'a str>,
}

impl Record<'_> {
    fn err(&self, message: String) -> Error {
        Error::Parse { line: self.line, message }
    }

    fn has(&self, i: usize) -> bool {
        i < self.tokens.len()
    }

    fn f64(&self, i: usize) -> Result<f64> {
        let name = self.section.fields()[i];
        self.tokens[i]
            .parse::<f64>()
            .ok()
            .filter(|v| !v.is_nan())
            .ok_or_else(|| self.err(format!("field '{name}': expected a number, got '{}'", self.tokens[i])))
    }

    fn opt_f64(&self, i: usize, default: f64) -> Result<f64> {
        if self.has(i) {
            self.f64(i)
        } else {
            Ok(default)
        }
    }

    fn id(&self, i: usize) -> Result<u32> {
        let name = self.section.fields()[i];
        self.tokens[i]
            .parse::<u32>()
            .map_err(|_| self.err(format!("field '{name}': expected a bus id, got '{}'", self.tokens[i])))
    }
}

pub fn load_case(path: impl AsRef<Path>) -> Result<SystemCase> {
    let text = std::fs::read_to_string(path)?;
    parse_case(&text)
}

/// Parses and validates a case from its textual form.
pub fn parse_case(text: &str) -> Result<SystemCase> {
    let mut section = None;
    let mut records = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = Some(Section::from_header(name.trim()).ok_or_else(|| Error::Parse {
                line,
                message: format!("unknown section [{}]", name.trim()),
            })?);
            continue;
        }
        let Some(section) = section else {
            return Err(Error::Parse { line, message: "record before any section header".into() });
        };
        let tokens: Vec<&str> = content.split_whitespace().collect();
        let max = section.fields().len();
        if tokens.len() < section.required() || tokens.len() > max {
            return Err(Error::Parse {
                line,
                message: format!(
                    "expected {} to {max} fields, found {}",
                    section.required(),
                    tokens.len()
                ),
            });
        }
        records.push(Record { line, section, tokens });
    }

    let mut base = None;
    let mut case = SystemCase {
        base_mva: 100.0,
        omega_b: 2.0 * std::f64::consts::PI * 60.0,
        buses: Vec::new(),
        branches: Vec::new(),
        machines: Vec::new(),
        avrs: Vec::new(),
        psss: Vec::new(),
        dr: DrSpec::default(),
    };
    for r in &records {
        match r.section {
            Section::Base => {
                if base.is_some() {
                    return Err(r.err("duplicate [BASE] record".into()));
                }
                base = Some((r.f64(0)?, r.f64(1)?));
            }
            Section::Bus => case.buses.push(BusRecord {
                id: r.id(0)?,
                kind: r.tokens[1].parse().map_err(|e: String| r.err(format!("field 'kind': {e}")))?,
                v0: r.f64(2)?,
                p_d0: r.f64(3)?,
                q_d0: r.f64(4)?,
                v_min: r.f64(5)?,
                v_max: r.f64(6)?,
                g_sh: r.opt_f64(7, 0.0)?,
                b_sh: r.opt_f64(8, 0.0)?,
            }),
            Section::Branch => case.branches.push(BranchRecord {
                from: r.id(0)?,
                to: r.id(1)?,
                r: r.f64(2)?,
                x: r.f64(3)?,
                b: r.f64(4)?,
                rate: r.f64(5)?,
            }),
            Section::Machine => case.machines.push(MachineRecord {
                bus: r.id(0)?,
                h: r.f64(1)?,
                d: r.f64(2)?,
                r_a: r.f64(3)?,
                xd_t: r.f64(4)?,
                xq_t: r.f64(5)?,
                p_g0: r.f64(6)?,
                tau_m0: r.f64(7)?,
                v_f0: r.f64(8)?,
                p_min: r.f64(9)?,
                p_max: r.f64(10)?,
                q_min: r.f64(11)?,
                q_max: r.f64(12)?,
            }),
            Section::Avr => case.avrs.push(AvrRecord {
                bus: r.id(0)?,
                k_a: r.f64(1)?,
                k_e: r.f64(2)?,
                k_f: r.f64(3)?,
                t_r: r.f64(4)?,
                t_a: r.f64(5)?,
                t_e: r.f64(6)?,
                t_f: r.f64(7)?,
                a_e: r.f64(8)?,
                b_e: r.f64(9)?,
                v_ref0: r.f64(10)?,
            }),
            Section::Pss => case.psss.push(PssRecord {
                bus: r.id(0)?,
                k_w: r.f64(1)?,
                t_w: r.f64(2)?,
                t_1: r.f64(3)?,
                t_2: r.f64(4)?,
                t_3: r.f64(5)?,
                t_4: r.f64(6)?,
                k_w_min: r.opt_f64(7, 0.0)?,
                k_w_max: r.opt_f64(8, f64::INFINITY)?,
            }),
            Section::Dr => case.dr.entries.push(DrEntry {
                bus: r.id(0)?,
                p_min: r.f64(1)?,
                p_max: r.f64(2)?,
                q_min: r.f64(3)?,
                q_max: r.f64(4)?,
                mu: if r.has(5) { Some(r.f64(5)?) } else { None },
            }),
        }
    }
    if let Some((base_mva, omega_b)) = base {
        case.base_mva = base_mva;
        case.omega_b = omega_b;
    }
    case.validate()?;
    Ok(case)
}

/// Renders a case in the same format [`parse_case`] reads. Floats use the
/// shortest representation that round-trips exactly.
pub fn write_case(case: &SystemCase) -> String {
    let mut out = String::new();
    let line = |out: &mut String, fields: &[String]| {
        out.push_str(&fields.join(" "));
        out.push('\n');
    };
    let f = |v: f64| format!("{v:?}");

    out.push_str("[BASE]\n");
    line(&mut out, &[f(case.base_mva), f(case.omega_b)]);

    out.push_str("\n[BUS]\n");
    for b in &case.buses {
        line(
            &mut out,
            &[
                b.id.to_string(),
                b.kind.as_str().to_string(),
                f(b.v0),
                f(b.p_d0),
                f(b.q_d0),
                f(b.v_min),
                f(b.v_max),
                f(b.g_sh),
                f(b.b_sh),
            ],
        );
    }

    out.push_str("\n[BRANCH]\n");
    for br in &case.branches {
        line(
            &mut out,
            &[br.from.to_string(), br.to.to_string(), f(br.r), f(br.x), f(br.b), f(br.rate)],
        );
    }

    out.push_str("\n[MACHINE]\n");
    for m in &case.machines {
        line(
            &mut out,
            &[
                m.bus.to_string(),
                f(m.h),
                f(m.d),
                f(m.r_a),
                f(m.xd_t),
                f(m.xq_t),
                f(m.p_g0),
                f(m.tau_m0),
                f(m.v_f0),
                f(m.p_min),
                f(m.p_max),
                f(m.q_min),
                f(m.q_max),
            ],
        );
    }

    if !case.avrs.is_empty() {
        out.push_str("\n[AVR]\n");
        for a in &case.avrs {
            line(
                &mut out,
                &[
                    a.bus.to_string(),
                    f(a.k_a),
                    f(a.k_e),
                    f(a.k_f),
                    f(a.t_r),
                    f(a.t_a),
                    f(a.t_e),
                    f(a.t_f),
                    f(a.a_e),
                    f(a.b_e),
                    f(a.v_ref0),
                ],
            );
        }
    }

    if !case.psss.is_empty() {
        out.push_str("\n[PSS]\n");
        for p in &case.psss {
            line(
                &mut out,
                &[
                    p.bus.to_string(),
                    f(p.k_w),
                    f(p.t_w),
                    f(p.t_1),
                    f(p.t_2),
                    f(p.t_3),
                    f(p.t_4),
                    f(p.k_w_min),
                    f(p.k_w_max),
                ],
            );
        }
    }

    if !case.dr.is_empty() {
        out.push_str("\n[DR]\n");
        for e in &case.dr.entries {
            let mut fields =
                vec![e.bus.to_string(), f(e.p_min), f(e.p_max), f(e.q_min), f(e.q_max)];
            if let Some(mu) = e.mu {
                fields.push(f(mu));
            }
            line(&mut out, &fields);
        }
    }
    let _ = writeln!(out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "\
[BASE]
100 376.99111843077515
[BUS]
1 slack 1.0 0 0 0.9 1.1
2 pq 1.0 10 2 0.9 1.1
[BRANCH]
1 2 0 0.1 0 inf
[MACHINE]
1 5 1 0 0.3 0.5 0 0 0 -inf inf -inf inf
";

    #[test]
    fn parses_minimal_case() {
        let case = parse_case(TWO_BUS).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.branches[0].rate, f64::INFINITY);
        assert_eq!(case.buses[1].g_sh, 0.0);
    }

    #[test]
    fn rejects_two_slack_buses() {
        let text = TWO_BUS.replace("2 pq", "2 slack");
        let err = parse_case(&text).unwrap_err();
        assert!(err.to_string().contains("multiple slack buses"), "{err}");
    }

    #[test]
    fn rejects_dangling_branch() {
        let text = TWO_BUS.replace("1 2 0 0.1", "1 99 0 0.1");
        let err = parse_case(&text).unwrap_err();
        assert!(matches!(err, Error::Validation(ref m) if m.contains("unknown bus 99")), "{err}");
    }

    #[test]
    fn reports_line_and_field() {
        let text = TWO_BUS.replace("2 pq 1.0 10", "2 pq 1.0 ten");
        match parse_case(&text).unwrap_err() {
            Error::Parse { line, message } => {
                assert_eq!(line, 5);
                assert!(message.contains("p_d0"), "{message}");
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejects_zero_impedance() {
        let text = TWO_BUS.replace("1 2 0 0.1", "1 2 0 0");
        assert!(matches!(parse_case(&text).unwrap_err(), Error::ZeroImpedance { .. }));
    }
}
