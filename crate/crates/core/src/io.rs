//! Table output (CSV and JSON), number formatting, grids and embedded fixtures.
//!
//! CSV: `,` delimiter, `.` decimal, LF line endings, 12 significant digits.
//! JSON: `{"columns": [...], "rows": [[...]]}` with every number as a decimal string.

use std::str::FromStr;

use serde_json::{json, Value};

use crate::bounds::{BoundRow, SpoofPoint};
use crate::error::{GmeError, Result};
use crate::fidelity::FidelityPoint;
use crate::robustness::RobustnessRow;

pub mod fixtures {
    pub const FIG4_MERMIN: &str = include_str!("../../../fixtures/fig4_mermin.json");
    pub const FIG4_STABILIZER: &str = include_str!("../../../fixtures/fig4_stabilizer.json");
    pub const TABLE_A1: &str = include_str!("../../../fixtures/tableA1.csv");
}

const SIG: i32 = 12;

/// Decimal with 12 significant digits, trailing zeros trimmed; scientific outside [1e-5, 1e12).
pub fn fmt_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let e = x.abs().log10().floor() as i32;
    if !(-5..12).contains(&e) {
        let s = format!("{:.*e}", (SIG - 1) as usize, x);
        let (mantissa, exp) = s.split_once('e').expect("scientific format");
        let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
        return format!("{mantissa}e{exp}");
    }
    let decimals = (SIG - 1 - e).max(0) as usize;
    let s = format!("{x:.decimals$}");
    let s = if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_num).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = GmeError;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(GmeError::Invalid(format!("unknown format `{other}` (csv or json)"))),
        }
    }
}

/// Rows of preformatted cells; an empty cell means "no value".
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|c| if c.is_empty() { Value::Null } else { Value::String(c.clone()) })
                        .collect(),
                )
            })
            .collect();
        let mut s = serde_json::to_string_pretty(&json!({ "columns": self.columns, "rows": rows }))
            .expect("json of strings");
        s.push('\n');
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.to_csv(),
            Format::Json => self.to_json(),
        }
    }
}

/// `start:stop:count`, endpoints included.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = |msg: &str| GmeError::Invalid(format!("grid `{spec}`: {msg}"));
    if parts.len() != 3 {
        return Err(bad("expected start:stop:count"));
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad("start is not a number"))?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad("stop is not a number"))?;
    let count: usize = parts[2].trim().parse().map_err(|_| bad("count is not an integer"))?;
    if !start.is_finite() || !stop.is_finite() {
        return Err(bad("endpoints must be finite"));
    }
    Ok(linspace(start, stop, count))
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (stop - start) / (count - 1) as f64;
            (0..count)
                .map(|k| if k + 1 == count { stop } else { start + h * k as f64 })
                .collect()
        }
    }
}

pub fn bound_table(rows: &[BoundRow]) -> Table {
    let mut t = Table::new(&[
        "epsilon",
        "bound_biseparable",
        "bound_single_party",
        "bound_fully_separable",
        "bound_quantum",
        "regime",
    ]);
    for r in rows {
        t.push(vec![
            fmt_num(r.eps),
            fmt_num(r.biseparable),
            fmt_opt(r.single_party),
            fmt_opt(r.fully_separable),
            fmt_opt(r.quantum),
            r.regime.label().to_string(),
        ]);
    }
    t
}

pub fn spoof_table(points: &[SpoofPoint]) -> Table {
    let mut t = Table::new(&["epsilon", "predicted_value", "corrected_bound", "ideal_bound"]);
    for p in points {
        t.push(vec![
            fmt_num(p.eps),
            fmt_num(p.predicted),
            fmt_num(p.corrected_bound),
            fmt_num(p.ideal_bound),
        ]);
    }
    t
}

pub fn fidelity_table(points: &[FidelityPoint]) -> Table {
    let mut t = Table::new(&["w_fraction", "L0", "L_eps"]);
    for p in points {
        t.push(vec![fmt_num(p.w_fraction), fmt_num(p.l0), fmt_opt(p.l_eps)]);
    }
    t
}

pub fn robustness_table(rows: &[RobustnessRow]) -> Table {
    let mut t = Table::new(&["p", "witness_value", "normalized_value", "bound", "violation_flag"]);
    for r in rows {
        t.push(vec![
            fmt_num(r.p),
            fmt_num(r.witness_value),
            fmt_num(r.normalized_value),
            fmt_num(r.bound),
            (r.violation as u8).to_string(),
        ]);
    }
    t
}
