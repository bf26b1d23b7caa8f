//! The `report.json` document shared by all commands.
//!
//! Floats are written with 12 significant digits and non-finite values as the
//! strings `"inf"`, `"-inf"`, `"nan"`, so identical runs give identical bytes.

use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::profiles::ProfileSpec;
use crate::verdict::{round_sig12, Finding, Status};

pub const SCHEMA_VERSION: u32 = 1;
pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportError {
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub profile: Option<ProfileSpec>,
    pub n: Option<usize>,
    pub verdicts: Vec<Finding>,
    pub data: Map<String, Value>,
    pub artifacts: Vec<String>,
    pub error: Option<ReportError>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            profile: None,
            n: None,
            verdicts: Vec::new(),
            data: Map::new(),
            artifacts: Vec::new(),
            error: None,
        }
    }

    pub fn push(&mut self, finding: Finding) {
        self.verdicts.push(finding);
    }

    /// Stores any serializable value under `key`.
    pub fn insert<T: Serialize>(&mut self, key: &str, value: T) -> Result<()> {
        let v = serde_json::to_value(value).map_err(|e| Error::Io(e.to_string()))?;
        self.data.insert(key.to_string(), v);
        Ok(())
    }

    pub fn insert_number(&mut self, key: &str, x: f64) {
        self.data.insert(key.to_string(), number(x));
    }

    pub fn set_error(&mut self, err: &Error) {
        self.error = Some(ReportError {
            kind: err.kind().to_string(),
            message: err.to_string(),
        });
    }

    /// 0 on success, 2 when every verdict is inconclusive, 1 on error.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_some() {
            1
        } else if !self.verdicts.is_empty()
            && self.verdicts.iter().all(|f| f.status == Status::Inconclusive)
        {
            2
        } else {
            0
        }
    }

    pub fn to_value(&self) -> Value {
        let v = serde_json::to_value(self).expect("report is always serializable");
        rounded(v)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("valid json");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(REPORT_FILE), self.to_json())?;
        Ok(())
    }
}

/// A float as a JSON value with the report's formatting rules.
pub fn number(x: f64) -> Value {
    if x.is_nan() {
        Value::String("nan".into())
    } else if x == f64::INFINITY {
        Value::String("inf".into())
    } else if x == f64::NEG_INFINITY {
        Value::String("-inf".into())
    } else {
        serde_json::Number::from_f64(round_sig12(x)).map_or(Value::Null, Value::Number)
    }
}

fn rounded(v: Value) -> Value {
    match v {
        Value::Number(n) if n.is_f64() => number(n.as_f64().unwrap()),
        Value::Array(items) => Value::Array(items.into_iter().map(rounded).collect()),
        Value::Object(map) => Value::Object(map.into_iter().map(|(k, v)| (k, rounded(v))).collect()),
        other => other,
    }
}
