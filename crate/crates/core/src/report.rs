//! JSON-lines report rows and an optional flat CSV summary.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::Result;

/// Bumped whenever a payload changes shape.
pub const SCHEMA_VERSION: u32 = 1;

/// One line of a report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub schema_version: u32,
    pub experiment_id: String,
    pub command: String,
    /// SHA-256 of the canonical JSON of the resolved inputs.
    pub input_hash: String,
    pub payload: Value,
    pub error_bars: Value,
    pub wall_time_ms: f64,
}

impl ReportRow {
    pub fn new(experiment_id: String, command: &str, input_hash: &str, payload: Value, error_bars: Value) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment_id,
            command: command.to_string(),
            input_hash: input_hash.to_string(),
            payload,
            error_bars,
            wall_time_ms: 0.0,
        }
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("report rows serialize")
    }

    /// The row without its timing, which is the part expected to be
    /// reproducible run to run.
    pub fn payload_line(&self) -> String {
        serde_json::to_string(&(&self.experiment_id, &self.input_hash, &self.payload, &self.error_bars))
            .expect("report rows serialize")
    }
}

/// Lower-case hex SHA-256 of `value` serialized as compact JSON.
pub fn input_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("inputs serialize");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_json_lines<W: Write>(rows: &[ReportRow], mut out: W) -> Result<()> {
    for r in rows {
        writeln!(out, "{}", r.to_json_line())?;
    }
    out.flush()?;
    Ok(())
}

/// One CSV row per report row. Top-level payload scalars become columns;
/// nested values are only in the JSON-lines report.
pub fn write_csv_summary<W: Write>(rows: &[ReportRow], out: W) -> Result<()> {
    let mut keys: Vec<String> = Vec::new();
    for r in rows {
        if let Value::Object(m) = &r.payload {
            for (k, v) in m {
                if !(v.is_object() || v.is_array()) && !keys.contains(k) {
                    keys.push(k.clone());
                }
            }
        }
    }
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["experiment_id".to_string(), "command".into(), "input_hash".into(), "wall_time_ms".into()];
    header.extend(keys.iter().cloned());
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.experiment_id.clone(), r.command.clone(), r.input_hash.clone(), r.wall_time_ms.to_string()];
        for k in &keys {
            rec.push(match r.payload.get(k) {
                Some(Value::String(s)) => s.clone(),
                Some(v @ (Value::Bool(_) | Value::Number(_))) => v.to_string(),
                _ => String::new(),
            });
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
