//! Report rendering. JSON floats carry 17 significant digits; CSV uses the
//! shortest round-trip form.

use crate::config::Settings;
use anyhow::{Context, Result};
use clap::ValueEnum;
use serde::Serialize;
use serde_json::Value;
use std::fmt::Write as _;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

pub struct Report {
    json: Value,
    csv: Option<(String, Vec<String>)>,
}

impl Report {
    pub fn json(json: Value) -> Self {
        Self { json, csv: None }
    }

    pub fn serialize<T: Serialize>(r: &T) -> Result<Self> {
        Ok(Self::json(serde_json::to_value(r).context("report does not serialize")?))
    }

    pub fn with_csv(mut self, header: String, rows: Vec<String>) -> Self {
        self.csv = Some((header, rows));
        self
    }

    pub fn render(&self, format: Format) -> String {
        match (format, &self.csv) {
            (Format::Csv, Some((header, rows))) => {
                let mut out = format!("{header}\n");
                for r in rows {
                    out.push_str(r);
                    out.push('\n');
                }
                out
            }
            _ => {
                let mut out = String::new();
                write_json(&mut out, &self.json, 0);
                out.push('\n');
                out
            }
        }
    }

    /// Writes the report to the output path, or to standard output after
    /// the summary line when no path is set.
    pub fn emit(&self, s: &Settings, summary: Option<&str>) -> Result<()> {
        let body = self.render(s.format);
        if let Some(line) = summary {
            println!("{line}");
        }
        match &s.output_path {
            Some(p) => std::fs::write(p, body).with_context(|| format!("cannot write {}", p.display())),
            None => {
                print!("{body}");
                Ok(())
            }
        }
    }
}

pub fn csv_number(v: f64) -> String {
    format!("{v}")
}

fn json_number(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_json(out: &mut String, v: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| out.push_str(&"  ".repeat(d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                out.push_str(&json_number(n.as_f64().expect("f64 number")));
            } else {
                let _ = write!(out, "{n}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(a) if a.is_empty() => out.push_str("[]"),
        Value::Array(a) => {
            out.push_str("[\n");
            for (k, x) in a.iter().enumerate() {
                pad(out, depth + 1);
                write_json(out, x, depth + 1);
                out.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            for (k, (key, x)) in m.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(key).expect("key serializes"));
                out.push_str(": ");
                write_json(out, x, depth + 1);
                out.push_str(if k + 1 < m.len() { ",\n" } else { "\n" });
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_keep_seventeen_digits() {
        let r = Report::json(json!({"x": 0.5, "n": 3, "v": [1.0, f64::NAN]}));
        let s = r.render(Format::Json);
        assert!(s.contains("\"x\": 5.0000000000000000e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
        assert!(s.contains("null"));
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["x"].as_f64(), Some(0.5));
    }

    #[test]
    fn round_trips_awkward_values() {
        for v in [std::f64::consts::PI, 1e-300, 16.444_646_771_097_05, -2.5e17] {
            let back: f64 = json_number(v).parse().unwrap();
            assert_eq!(back, v);
        }
    }

    #[test]
    fn csv_has_header_then_rows() {
        let r = Report::json(json!({})).with_csv("q,value".into(), vec!["1,0.5".into()]);
        assert_eq!(r.render(Format::Csv), "q,value\n1,0.5\n");
    }
}
