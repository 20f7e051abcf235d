//! Flat result rows rendered as CSV or JSON with the same values.

use std::io::Write;
use std::path::Path;

use serde_json::Value;

use crate::config::{Format, Settings};
use crate::error::CliResult;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// One experiment point: ordered `key -> value` pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row(pub Vec<(String, Value)>);

impl Row {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.0.push((key.to_string(), value.into()));
        self
    }

    /// Non-finite floats become strings so JSON can carry them.
    pub fn num(&mut self, key: &str, value: f64) -> &mut Self {
        let v = serde_json::Number::from_f64(value).map_or_else(|| Value::String(value.to_string()), Value::Number);
        self.push(key, v)
    }

    pub fn opt_num(&mut self, key: &str, value: Option<f64>) -> &mut Self {
        match value {
            Some(v) => self.num(key, v),
            None => self.push(key, Value::Null),
        }
    }

    pub fn stamp(&mut self, settings: &Settings) -> &mut Self {
        self.push("seed", settings.seed)
            .push("config_hash", settings.config_hash())
            .push("version", VERSION)
    }
}

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

pub fn render(rows: &[Row], format: Format) -> String {
    match format {
        Format::Csv => {
            let mut keys: Vec<&str> = Vec::new();
            for row in rows {
                for (k, _) in &row.0 {
                    if !keys.contains(&k.as_str()) {
                        keys.push(k);
                    }
                }
            }
            let mut out = keys.join(",");
            out.push('\n');
            for row in rows {
                let cells: Vec<String> = keys
                    .iter()
                    .map(|k| row.0.iter().find(|(rk, _)| rk == k).map(|(_, v)| csv_cell(v)).unwrap_or_default())
                    .collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let objects: Vec<String> = rows
                .iter()
                .map(|row| {
                    let fields: Vec<String> = row
                        .0
                        .iter()
                        .map(|(k, v)| format!("{}:{}", Value::String(k.clone()), v))
                        .collect();
                    format!("{{{}}}", fields.join(","))
                })
                .collect();
            format!("[\n{}\n]\n", objects.join(",\n"))
        }
    }
}

/// Writes `text` to `path`, or stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_agree() {
        let mut r = Row::new();
        r.push("n", 2).push("tv", "1/6").num("x", 0.1).push("ok", true).push("none", Value::Null);
        r.push("text", "a,b");
        let csv = render(&[r.clone()], Format::Csv);
        assert_eq!(csv, "n,tv,x,ok,none,text\n2,1/6,0.1,true,,\"a,b\"\n");
        let json = render(&[r], Format::Json);
        let parsed: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed[0]["tv"], "1/6");
        assert_eq!(parsed[0]["x"], 0.1);
        assert!(parsed[0]["none"].is_null());
    }

    #[test]
    fn non_finite_numbers_are_strings() {
        let mut r = Row::new();
        r.num("x", f64::INFINITY);
        assert_eq!(r.0[0].1, Value::String("inf".into()));
    }
}
