//! Serialized report envelopes and curve CSV.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::tail::BoundReport;

pub const TOOL: &str = "ttb";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Every JSON report carries the resolved config next to the result.
#[derive(Serialize)]
pub struct Envelope<'a, C: Serialize, R: Serialize> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config: &'a C,
    pub report: &'a R,
}

/// Pretty JSON with shortest round-trip floats, newline terminated.
pub fn to_json<C: Serialize, R: Serialize>(command: &str, config: &C, report: &R) -> Result<String> {
    let env = Envelope { tool: TOOL, version: VERSION, command, config, report };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<C: Serialize, R: Serialize>(path: &Path, command: &str, config: &C, report: &R) -> Result<()> {
    std::fs::write(path, to_json(command, config, report)?)?;
    Ok(())
}

/// `t,value` rows, 17 significant digits.
pub fn curve_csv(report: &BoundReport) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in report.t_grid.iter().zip(&report.values) {
        let _ = writeln!(out, "{t:.16e},{v:.16e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tail::{chernoff_bound, chernoff_grid, ChernoffParams, PolynomialSpec};

    #[test]
    fn csv_round_trips() {
        let g = PolynomialSpec::identity();
        let p = ChernoffParams { r: 1.0, k: 1, theta: 2.0, c_latala: 1.0, sigma1_bar: vec![0.1; 2], xi: vec![0.1; 2] };
        let rep = chernoff_bound(&p, &g, &chernoff_grid(2, &g, 1.0, 20).unwrap()).unwrap();
        let csv = curve_csv(&rep);
        for (line, v) in csv.lines().skip(1).zip(&rep.values) {
            let parsed: f64 = line.split(',').nth(1).unwrap().parse().unwrap();
            assert_eq!(parsed, *v);
        }
    }

    #[test]
    fn envelope_has_version() {
        let s = to_json("x", &1u8, &[1.5f64]).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["version"], VERSION);
        assert_eq!(v["report"][0], 1.5);
    }
}
