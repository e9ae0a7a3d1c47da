use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use pqm_core::PqmError;
use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Decimal places kept in JSON unless full precision is requested.
pub const JSON_DECIMALS: i32 = 6;

fn round(v: Value, scale: f64) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            serde_json::Number::from_f64((x * scale).round() / scale)
                .map(Value::Number)
                .unwrap_or(Value::Null)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(|x| round(x, scale)).collect()),
        Value::Object(o) => {
            Value::Object(o.into_iter().map(|(k, x)| (k, round(x, scale))).collect())
        }
        other => other,
    }
}

/// Pretty JSON with a trailing newline. Floats are rounded to
/// [`JSON_DECIMALS`] places unless `full_precision`; non-finite values
/// become `null`.
pub fn to_json<T: Serialize>(value: &T, full_precision: bool) -> anyhow::Result<String> {
    let mut v = serde_json::to_value(value)?;
    if !full_precision {
        v = round(v, 10f64.powi(JSON_DECIMALS));
    }
    Ok(serde_json::to_string_pretty(&v)? + "\n")
}

/// Single-line JSON, for JSON-lines streams.
pub fn to_json_line<T: Serialize>(value: &T, full_precision: bool) -> anyhow::Result<String> {
    let mut v = serde_json::to_value(value)?;
    if !full_precision {
        v = round(v, 10f64.powi(JSON_DECIMALS));
    }
    Ok(serde_json::to_string(&v)? + "\n")
}

/// Writes `text` to `path`, or to stdout when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> anyhow::Result<()> {
    match path {
        Some(p) => write_file(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> anyhow::Result<()> {
    std::fs::write(path, text).map_err(|source| {
        PqmError::Io {
            path: path.to_owned(),
            source,
        }
        .into()
    })
}

/// CSV cell for an optional number; empty when absent or non-finite.
pub fn csv_num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => v.to_string(),
        _ => String::new(),
    }
}

/// Quotes a CSV field when needed.
pub fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_touches_floats_only() {
        let v = serde_json::json!({"a": 0.123456789, "n": 12345678901u64, "l": [1.0000004, null], "inf": null});
        let s = to_json(&v, false).unwrap();
        assert!(s.contains("0.123457"));
        assert!(s.contains("12345678901"));
        assert!(s.contains("1.0"));
        assert!(to_json(&v, true).unwrap().contains("0.123456789"));
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_text("plain"), "plain");
        assert_eq!(csv_text("a,b"), "\"a,b\"");
        assert_eq!(csv_text("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_num(Some(f64::INFINITY)), "");
        assert_eq!(csv_num(None), "");
        assert_eq!(csv_num(Some(0.5)), "0.5");
    }
}
