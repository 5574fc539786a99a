//! Structured command reports: one JSON-serializable value per run, plus a
//! plain-text rendering for the terminal.
//!
//! Reports contain no timestamps or machine identifiers, and all maps keep
//! insertion order, so a command run twice with the same flags produces
//! byte-identical output in both forms.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

/// Bumped only when the shape of the JSON report changes incompatibly.
pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub inputs: Value,
    pub results: Value,
    pub schema_version: String,
}

impl Report {
    pub fn new(command: &str, inputs: Value, results: Value) -> Self {
        Report {
            command: command.to_string(),
            inputs,
            results,
            schema_version: SCHEMA_VERSION.to_string(),
        }
    }

    /// Plain-text form: `key = value` lines, nested blocks indented, arrays
    /// of records as aligned tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("command = {}\n", self.command));
        render_entry(&mut out, "inputs", &self.inputs, 0);
        render_entry(&mut out, "results", &self.results, 0);
        out
    }

    pub fn write_json(&self, path: &Path) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
            .map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))
    }
}

/// JSON number from an f64; non-finite values become strings since JSON has
/// no representation for them.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map(Value::Number).unwrap_or_else(|| Value::String(x.to_string()))
}

fn is_scalar(v: &Value) -> bool {
    matches!(v, Value::Null | Value::Bool(_) | Value::Number(_) | Value::String(_))
}

fn scalar_text(v: &Value) -> String {
    match v {
        // the only nulls we emit are moments that do not exist
        Value::Null => "undefined".to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        _ => unreachable!("scalar_text called on composite value"),
    }
}

fn pad(out: &mut String, indent: usize) {
    for _ in 0..indent {
        out.push(' ');
    }
}

fn render_entry(out: &mut String, key: &str, value: &Value, indent: usize) {
    match value {
        v if is_scalar(v) => {
            pad(out, indent);
            out.push_str(&format!("{key} = {}\n", scalar_text(v)));
        }
        Value::Array(items) if items.iter().all(is_scalar) => {
            pad(out, indent);
            let joined: Vec<String> = items.iter().map(scalar_text).collect();
            out.push_str(&format!("{key} = [{}]\n", joined.join(", ")));
        }
        Value::Array(items) if items.iter().all(|v| v.is_object()) && !items.is_empty() => {
            pad(out, indent);
            out.push_str(&format!("{key}:\n"));
            render_table(out, items, indent + 2);
        }
        Value::Array(items) => {
            pad(out, indent);
            out.push_str(&format!("{key}:\n"));
            for item in items {
                render_entry(out, "-", item, indent + 2);
            }
        }
        Value::Object(map) => {
            pad(out, indent);
            out.push_str(&format!("{key}:\n"));
            for (k, v) in map {
                render_entry(out, k, v, indent + 2);
            }
        }
        _ => unreachable!("all value shapes handled"),
    }
}

/// Array of records with identical keys, printed as a space-aligned table.
fn render_table(out: &mut String, rows: &[Value], indent: usize) {
    let first = rows[0].as_object().expect("table rows are objects");
    let columns: Vec<&String> = first.keys().collect();
    let mut widths: Vec<usize> = columns.iter().map(|c| c.len()).collect();
    let mut cells: Vec<Vec<String>> = Vec::with_capacity(rows.len());
    for row in rows {
        let obj = row.as_object().expect("table rows are objects");
        let mut line = Vec::with_capacity(columns.len());
        for (j, col) in columns.iter().enumerate() {
            let text = obj.get(*col).map(scalar_text).unwrap_or_default();
            widths[j] = widths[j].max(text.len());
            line.push(text);
        }
        cells.push(line);
    }
    pad(out, indent);
    let header: Vec<String> =
        columns.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
    out.push_str(header.join("  ").trim_end());
    out.push('\n');
    pad(out, indent);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for line in cells {
        pad(out, indent);
        let row: Vec<String> =
            line.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        out.push_str(row.join("  ").trim_end());
        out.push('\n');
    }
}
