//! Report rows and their CSV/JSON encodings.
//!
//! Numbers are written in scientific notation with a configurable number of
//! significant digits; at 17 digits every `f64` survives a write/read cycle
//! bit for bit.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde_json::Value;

use crate::config::Format;

pub const CSV_HEADER: &str =
    "t,engine,quantity,value,stderr,residual_bound,seed,replicates,tolerance,pass";

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub engine: String,
    pub quantity: String,
    pub value: f64,
    pub stderr: Option<f64>,
    pub residual_bound: Option<f64>,
    pub seed: Option<u64>,
    pub replicates: Option<u64>,
    /// Gate applied to `value` (validation rows only).
    pub tolerance: Option<f64>,
    pub pass: Option<bool>,
}

impl Row {
    pub fn new(t: f64, engine: impl Into<String>, quantity: impl Into<String>, value: f64) -> Self {
        Self {
            t,
            engine: engine.into(),
            quantity: quantity.into(),
            value,
            stderr: None,
            residual_bound: None,
            seed: None,
            replicates: None,
            tolerance: None,
            pass: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub rows: Vec<Row>,
}

impl Report {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            rows: Vec::new(),
        }
    }

    /// Rows carrying a pass/fail verdict.
    pub fn checks(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.pass.is_some())
    }

    pub fn passed(&self) -> bool {
        self.checks().all(|r| r.pass == Some(true))
    }

    pub fn render(&self, format: Format, precision: usize) -> String {
        match format {
            Format::Csv => self.to_csv(precision),
            Format::Json => self.to_json(precision),
        }
    }

    pub fn write(&self, path: &Path, format: Format, precision: usize) -> io::Result<()> {
        std::fs::write(path, self.render(format, precision))
    }

    pub fn to_csv(&self, precision: usize) -> String {
        let num = |x: Option<f64>| x.map(|x| number(x, precision)).unwrap_or_default();
        let int = |x: Option<u64>| x.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let pass = r.pass.map(|p| p.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                number(r.t, precision),
                csv_field(&r.engine),
                csv_field(&r.quantity),
                number(r.value, precision),
                num(r.stderr),
                num(r.residual_bound),
                int(r.seed),
                int(r.replicates),
                num(r.tolerance),
                pass,
            );
        }
        out
    }

    pub fn to_json(&self, precision: usize) -> String {
        let num = |x: Option<f64>| match x {
            Some(x) if x.is_finite() => number(x, precision),
            _ => "null".into(),
        };
        let int = |x: Option<u64>| x.map_or("null".into(), |x| x.to_string());
        let mut out = String::new();
        let _ = writeln!(out, "{{");
        let _ = writeln!(
            out,
            "  \"command\": {},",
            Value::from(self.command.as_str())
        );
        let verdict = match self.checks().next() {
            Some(_) => self.passed().to_string(),
            None => "null".into(),
        };
        let _ = writeln!(out, "  \"pass\": {verdict},");
        let _ = writeln!(out, "  \"rows\": [");
        for (k, r) in self.rows.iter().enumerate() {
            let sep = if k + 1 == self.rows.len() { "" } else { "," };
            let _ = writeln!(
                out,
                "    {{\"t\": {}, \"engine\": {}, \"quantity\": {}, \"value\": {}, \"stderr\": {}, \
                 \"residual_bound\": {}, \"seed\": {}, \"replicates\": {}, \"tolerance\": {}, \"pass\": {}}}{sep}",
                num(Some(r.t)),
                Value::from(r.engine.as_str()),
                Value::from(r.quantity.as_str()),
                num(Some(r.value)),
                num(r.stderr),
                num(r.residual_bound),
                int(r.seed),
                int(r.replicates),
                num(r.tolerance),
                r.pass.map_or("null".into(), |p| p.to_string()),
            );
        }
        let _ = writeln!(out, "  ]");
        let _ = writeln!(out, "}}");
        out
    }

    /// Reads back a report written by [`Report::to_json`].
    pub fn from_json(text: &str) -> Result<Self, String> {
        let doc: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let command = doc["command"]
            .as_str()
            .ok_or("missing `command`")?
            .to_string();
        let rows = doc["rows"].as_array().ok_or("missing `rows`")?;
        let rows = rows
            .iter()
            .enumerate()
            .map(|(k, r)| parse_row(r).map_err(|e| format!("row {k}: {e}")))
            .collect::<Result<_, _>>()?;
        Ok(Self { command, rows })
    }
}

fn parse_row(r: &Value) -> Result<Row, String> {
    let opt_f = |key: &str| -> Result<Option<f64>, String> {
        match &r[key] {
            Value::Null => Ok(None),
            v => v
                .as_f64()
                .map(Some)
                .ok_or(format!("`{key}` is not a number")),
        }
    };
    let opt_u = |key: &str| -> Result<Option<u64>, String> {
        match &r[key] {
            Value::Null => Ok(None),
            v => v
                .as_u64()
                .map(Some)
                .ok_or(format!("`{key}` is not an integer")),
        }
    };
    let text = |key: &str| -> Result<String, String> {
        r[key]
            .as_str()
            .map(str::to_string)
            .ok_or(format!("`{key}` is not a string"))
    };
    Ok(Row {
        t: opt_f("t")?.ok_or("missing `t`")?,
        engine: text("engine")?,
        quantity: text("quantity")?,
        value: opt_f("value")?.unwrap_or(f64::NAN),
        stderr: opt_f("stderr")?,
        residual_bound: opt_f("residual_bound")?,
        seed: opt_u("seed")?,
        replicates: opt_u("replicates")?,
        tolerance: opt_f("tolerance")?,
        pass: match &r["pass"] {
            Value::Null => None,
            v => Some(v.as_bool().ok_or("`pass` is not a boolean")?),
        },
    })
}

/// `x` with `digits` significant digits in scientific notation.
pub fn number(x: f64, digits: usize) -> String {
    if x.is_finite() {
        format!("{:.*e}", digits.saturating_sub(1), x)
    } else {
        x.to_string()
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut rep = Report::new("validate");
        let mut r = Row::new(2.0, "simulate", "mean", 8.791_043_210_987_654);
        r.stderr = Some(0.1 / 3.0);
        r.seed = Some(u64::MAX);
        r.replicates = Some(1_000_000);
        rep.rows.push(r);
        let mut c = Row::new(0.5, "closed vs simulate", "mean_z_score", -1.0e-300);
        c.tolerance = Some(4.0);
        c.pass = Some(true);
        rep.rows.push(c);
        rep
    }

    #[test]
    fn json_round_trip_is_exact() {
        let rep = sample();
        let back = Report::from_json(&rep.to_json(17)).unwrap();
        assert_eq!(back, rep);
        for (a, b) in back.rows.iter().zip(&rep.rows) {
            assert_eq!(a.value.to_bits(), b.value.to_bits());
        }
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let csv = sample().to_csv(17);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("2.0000000000000000e0,simulate,mean,8.7910432109876"));
        assert!(lines[2].ends_with(",true"));
    }

    #[test]
    fn precision_controls_digits() {
        assert_eq!(number(8.791, 4), "8.791e0");
        assert_eq!(number(0.0, 3), "0.00e0");
    }

    #[test]
    fn failing_check_fails_report() {
        let mut rep = sample();
        assert!(rep.passed());
        rep.rows[1].pass = Some(false);
        assert!(!rep.passed());
    }
}
