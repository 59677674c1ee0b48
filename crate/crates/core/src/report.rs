//! CSV tables and the JSON run summary.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::verifier::VerdictReport;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// Scientific notation with 17 significant digits.
pub fn format_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

fn escape(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.iter().map(|h| escape(h)).collect::<Vec<_>>().join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| match c {
                    Cell::Num(v) => format_float(*v),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(t) => escape(t),
                })
                .collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    /// Rows as JSON objects keyed by the header.
    pub fn to_json(&self) -> serde_json::Value {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let obj = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, c)| {
                        let v = match c {
                            Cell::Num(v) if v.is_finite() => serde_json::json!(v),
                            Cell::Num(v) => serde_json::json!(format_float(*v)),
                            Cell::Int(v) => serde_json::json!(v),
                            Cell::Text(t) => serde_json::json!(t),
                        };
                        (h.clone(), v)
                    })
                    .collect::<serde_json::Map<_, _>>();
                serde_json::Value::Object(obj)
            })
            .collect();
        serde_json::Value::Array(rows)
    }
}

/// Flattens verdict samples into `(estimate_id, report, params, lhs, rhs, ratio)` rows.
pub fn samples_table(reports: &[VerdictReport]) -> Table {
    let mut t = Table::new(&["estimate_id", "report", "params", "lhs", "rhs", "ratio"]);
    for (i, r) in reports.iter().enumerate() {
        for s in &r.samples {
            let params = s.params.iter().map(|(k, v)| format!("{k}={}", format_float(*v))).collect::<Vec<_>>().join(";");
            t.push(vec![r.estimate_id.as_str().into(), i.into(), params.into(), s.lhs.into(), s.rhs.into(), s.ratio.into()]);
        }
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuiteStatus {
    Pass,
    Fail,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub status: SuiteStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    pub reports: Vec<VerdictReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub schema_version: u32,
    pub geometry: String,
    pub seed: u64,
    pub lambda_max: f64,
    pub t_grid: [f64; 3],
    pub p: Vec<String>,
    pub suites: Vec<SuiteSummary>,
    pub pass: bool,
}

/// Pretty JSON; non-finite floats become `null`.
pub fn summary_json(summary: &RunSummary) -> Result<String> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| crate::Error::InvalidArgument(e.to_string()))?;
    Ok(text + "\n")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_formatting() {
        let mut t = Table::new(&["a", "b,c"]);
        t.push(vec![0.1.into(), "x\"y".into()]);
        t.push(vec![f64::INFINITY.into(), 3usize.into()]);
        assert_eq!(t.to_csv(), "a,\"b,c\"\n1.0000000000000001e-1,\"x\"\"y\"\ninf,3\n");
    }

    #[test]
    fn seventeen_significant_digits() {
        let s = format_float(std::f64::consts::PI);
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }
}
