//! Machine-readable experiment output: JSON reports and CSV tables.

use std::io::Write;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Significant digits kept for every JSON number.
pub const JSON_DIGITS: usize = 12;

/// `{experiment, config, results[], timestamp, seed}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsonReport {
    pub experiment: String,
    pub config: Value,
    pub results: Vec<Value>,
    pub timestamp: String,
    pub seed: Option<u64>,
}

impl JsonReport {
    pub fn new<C: Serialize, R: Serialize>(
        experiment: &str,
        config: &C,
        results: &[R],
        seed: Option<u64>,
    ) -> Result<Self> {
        let results = results.iter().map(to_value).collect::<Result<_>>()?;
        Ok(JsonReport {
            experiment: experiment.to_string(),
            config: to_value(config)?,
            results,
            timestamp: timestamp(),
            seed,
        })
    }

    /// Pretty-printed JSON, numbers rounded to [`JSON_DIGITS`] significant digits.
    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }
}

fn to_value<T: Serialize + ?Sized>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

/// Serializes `v` with every float rounded to [`JSON_DIGITS`] significant digits.
pub fn to_json_string<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    let value = round_value(to_value(v)?);
    serde_json::to_string_pretty(&value).map_err(|e| Error::InvalidInput(format!("serialization failed: {e}")))
}

pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 || digits == 0 {
        return x;
    }
    format!("{:.*e}", digits - 1, x).parse().unwrap_or(x)
}

fn round_value(v: Value) -> Value {
    match v {
        Value::Number(num) if num.is_f64() => {
            let x = num.as_f64().expect("f64 number");
            serde_json::Number::from_f64(round_sig(x, JSON_DIGITS)).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_value).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, round_value(v))).collect::<Map<_, _>>()),
        other => other,
    }
}

/// RFC 3339 UTC time; `SOURCE_DATE_EPOCH` overrides the clock for
/// reproducible output.
pub fn timestamp() -> String {
    let fixed = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok());
    format_timestamp(fixed)
}

fn format_timestamp(epoch_secs: Option<u64>) -> String {
    let at = epoch_secs.map_or_else(SystemTime::now, |s| UNIX_EPOCH + Duration::from_secs(s));
    humantime::format_rfc3339_seconds(at).to_string()
}

/// Plain CSV table. Cells are written verbatim, so callers keep them free of
/// commas and newlines (numbers and tags).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        CsvTable {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        crate::error::check_dims(self.header.len(), row.len())?;
        self.rows.push(row);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("cells are UTF-8")
    }
}

/// Shortest round-trip formatting; empty for `None`.
pub fn fmt_opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.1 + 0.2, 12), 0.3);
        assert_eq!(round_sig(1.0 / 3.0, 12), 0.333333333333);
        assert_eq!(round_sig(-123456.7891234567, 12), -123456.789123);
        assert_eq!(round_sig(2.5e-300, 12), 2.5e-300);
        assert!(round_sig(f64::NAN, 12).is_nan());
    }

    #[test]
    fn json_numbers_rounded_and_nonfinite_null() {
        #[derive(Serialize)]
        struct Row {
            x: f64,
            y: f64,
            k: u64,
        }
        let s = to_json_string(&vec![Row { x: 2.0 / 3.0, y: f64::INFINITY, k: u64::MAX }]).unwrap();
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v[0]["x"].as_f64().unwrap(), 0.666666666667);
        assert!(v[0]["y"].is_null());
        assert_eq!(v[0]["k"].as_u64().unwrap(), u64::MAX);
    }

    #[test]
    fn report_schema() {
        let r = JsonReport::new("demo", &serde_json::json!({"n": 4}), &[1.5, 2.5], Some(7)).unwrap();
        let v: Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in ["experiment", "config", "results", "timestamp", "seed"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["results"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn fixed_timestamp() {
        assert_eq!(format_timestamp(Some(0)), "1970-01-01T00:00:00Z");
        assert_eq!(format_timestamp(Some(86_400 * 365)), "1971-01-01T00:00:00Z");
    }

    #[test]
    fn csv_table() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.push(vec!["1".into(), fmt_opt::<f64>(None)]).unwrap();
        assert!(t.push(vec!["1".into()]).is_err());
        assert_eq!(t.to_csv_string(), "a,b\n1,\n");
    }
}
