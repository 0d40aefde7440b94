//! CSV and JSON renderings of a scan.
//!
//! CSV layout: `# key: value` provenance lines, the resolved configuration
//! as `#| ` lines, one header line, data rows, then `# failed ...` trailer
//! lines for points that did not complete. Numbers use `{:.12e}`; a missing
//! value is an empty field.

use std::io::{self, Write};

use serde::Serialize;

use super::config::EMBED_PREFIX;

/// Run metadata written ahead of the data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub program: String,
    pub version: String,
    pub mode: String,
    pub config_sha256: String,
    pub basis_size: Option<usize>,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub distance_a0: f64,
    pub eta: f64,
    pub gap_hartree: f64,
    /// Resolved configuration (TOML).
    pub config: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub values: Vec<f64>,
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Failure {
    pub row: usize,
    pub message: String,
}

/// Everything a scan produced, in output order.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanOutput {
    pub provenance: Provenance,
    /// Numeric column names; a trailing `status` column is implied.
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub failures: Vec<Failure>,
}

fn number(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:.12e}")
    }
}

fn optional<T: std::fmt::LowerExp>(v: Option<T>) -> String {
    v.map(|v| format!("{v:e}")).unwrap_or_else(|| "none".into())
}

pub fn write_csv<W: Write>(out: &ScanOutput, mut w: W) -> io::Result<()> {
    let p = &out.provenance;
    writeln!(w, "# program: {} {}", p.program, p.version)?;
    writeln!(w, "# mode: {}", p.mode)?;
    writeln!(w, "# config_sha256: {}", p.config_sha256)?;
    writeln!(w, "# basis_size: {}", p.basis_size.map(|n| n.to_string()).unwrap_or_else(|| "none".into()))?;
    writeln!(w, "# rel_tol: {}", optional(p.rel_tol))?;
    writeln!(w, "# abs_tol: {}", optional(p.abs_tol))?;
    writeln!(w, "# distance_a0: {}", number(p.distance_a0))?;
    writeln!(w, "# eta: {}", number(p.eta))?;
    writeln!(w, "# gap_hartree: {}", number(p.gap_hartree))?;
    for line in p.config.lines() {
        writeln!(w, "{}", format!("{EMBED_PREFIX}{line}").trim_end())?;
    }
    writeln!(w, "{},status", out.columns.join(","))?;
    for row in &out.rows {
        let cells: Vec<String> = row.values.iter().map(|v| number(*v)).collect();
        writeln!(w, "{},{}", cells.join(","), row.status)?;
    }
    for f in &out.failures {
        writeln!(w, "# failed row {}: {}", f.row, f.message)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct JsonRow<'a> {
    values: Vec<Option<f64>>,
    status: &'a str,
}

#[derive(Serialize)]
struct JsonDocument<'a> {
    provenance: &'a Provenance,
    columns: &'a [String],
    rows: Vec<JsonRow<'a>>,
    failures: &'a [Failure],
}

pub fn write_json<W: Write>(out: &ScanOutput, mut w: W) -> io::Result<()> {
    let doc = JsonDocument {
        provenance: &out.provenance,
        columns: &out.columns,
        rows: out
            .rows
            .iter()
            .map(|r| JsonRow {
                values: r.values.iter().map(|v| v.is_finite().then_some(*v)).collect(),
                status: &r.status,
            })
            .collect(),
        failures: &out.failures,
    };
    serde_json::to_writer_pretty(&mut w, &doc)?;
    writeln!(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScanOutput {
        ScanOutput {
            provenance: Provenance {
                program: "flyby".into(),
                version: "0.0.0".into(),
                mode: "single-atom-numeric".into(),
                config_sha256: "ab".into(),
                basis_size: Some(3),
                rel_tol: Some(1e-10),
                abs_tol: None,
                distance_a0: 47243.0,
                eta: 0.18,
                gap_hartree: 2e-6,
                config: "mode = \"x\"\n\n[kappa]\nmin = 1.0\n".into(),
            },
            columns: vec!["kappa".into(), "p_ns".into()],
            rows: vec![
                Row { values: vec![0.5, 0.25], status: "ok".into() },
                Row { values: vec![1.0, f64::NAN], status: "failed".into() },
            ],
            failures: vec![Failure { row: 1, message: "step underflow".into() }],
        }
    }

    #[test]
    fn csv_layout() {
        let mut buf = Vec::new();
        write_csv(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# program: flyby 0.0.0");
        assert!(lines.contains(&"#|"));
        assert!(lines.contains(&"#| [kappa]"));
        let header = lines.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(lines[header], "kappa,p_ns,status");
        assert_eq!(lines[header + 1], "5.000000000000e-1,2.500000000000e-1,ok");
        assert_eq!(lines[header + 2], "1.000000000000e0,,failed");
        assert_eq!(*lines.last().unwrap(), "# failed row 1: step underflow");
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 3);
    }

    #[test]
    fn json_uses_null_for_missing() {
        let mut buf = Vec::new();
        write_json(&sample(), &mut buf).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["rows"][1]["values"][1], serde_json::Value::Null);
        assert_eq!(v["rows"][0]["values"][1], 0.25);
        assert_eq!(v["provenance"]["basis_size"], 3);
        assert_eq!(v["columns"][1], "p_ns");
    }
}
