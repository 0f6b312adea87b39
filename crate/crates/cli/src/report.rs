use std::fs;
use std::path::Path;

use serde_json::{Map, Value};

use crate::commands::CliError;
use crate::Format;

/// Writes a report to stdout, or to `output` when given.
pub fn emit(value: &Value, format: Format, output: Option<&Path>) -> Result<(), CliError> {
    let text = match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(value).expect("reports are plain JSON values");
            s.push('\n');
            s
        }
        Format::Csv => to_csv(value),
    };
    write_text(&text, output)
}

pub fn write_text(text: &str, output: Option<&Path>) -> Result<(), CliError> {
    match output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(path, e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// One row per array element (or a single row for an object), nested
/// objects flattened into dotted column names. Arrays nested inside rows
/// are dropped.
pub fn to_csv(value: &Value) -> String {
    let rows: Vec<Map<String, Value>> = match value {
        Value::Array(items) => items.iter().map(flatten).collect(),
        Value::Object(_) => {
            // a summary object wrapping a list of entries prints the entries
            match value.as_object().and_then(|o| {
                o.values()
                    .find_map(|v| v.as_array().filter(|a| a.iter().all(Value::is_object)).filter(|a| !a.is_empty()))
            }) {
                Some(items) => items.iter().map(flatten).collect(),
                None => vec![flatten(value)],
            }
        }
        other => vec![flatten(&Value::Object(Map::from_iter([("value".to_string(), other.clone())])))],
    };
    let mut header: Vec<String> = Vec::new();
    for row in &rows {
        for k in row.keys() {
            if !header.contains(k) {
                header.push(k.clone());
            }
        }
    }
    let mut out = header.join(",");
    out.push('\n');
    for row in &rows {
        let cells: Vec<String> = header.iter().map(|k| row.get(k).map(cell).unwrap_or_default()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

fn flatten(value: &Value) -> Map<String, Value> {
    fn walk(prefix: &str, v: &Value, out: &mut Map<String, Value>) {
        match v {
            Value::Object(o) => {
                for (k, v) in o {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, v, out);
                }
            }
            Value::Array(_) => {}
            _ => {
                out.insert(prefix.to_string(), v.clone());
            }
        }
    }
    let mut out = Map::new();
    walk("", value, &mut out);
    out
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}
