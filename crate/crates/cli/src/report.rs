//! Report documents, number formatting and check accounting.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use serde_json::{Map, Number, Value};

use crate::error::{CliError, CliResult};
use crate::scenario::Kind;

pub const SIG_DIGITS: usize = 12;

/// Rounds to [`SIG_DIGITS`] significant digits.
pub fn sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", SIG_DIGITS - 1, x).parse().unwrap_or(x)
}

/// Shortest text for `sig(x)`.
pub fn fmt_sig(x: f64) -> String {
    format!("{:?}", sig(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Report {
    pub kind: Kind,
    pub seed: u64,
    /// The payload exactly as it appeared in the input.
    pub echo: Box<RawValue>,
    pub results: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub summary: Summary,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failing: Vec<String>,
    pub version: String,
    pub timestamp: String,
}

pub fn version_string() -> String {
    format!(
        "converse-cli {} / converse-core {}",
        env!("CARGO_PKG_VERSION"),
        converse_core::VERSION
    )
}

pub fn timestamp() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Re-judges every Loewner certificate at `tol * tol_scale`, then counts each
/// object carrying a boolean `holds`. Returns failing paths.
pub fn account(results: &mut Value, tol_scale: f64) -> (Summary, Vec<String>) {
    let mut summary = Summary::default();
    let mut failing = Vec::new();
    walk(results, "results".into(), tol_scale, &mut summary, &mut failing);
    summary.pass = summary.failed == 0;
    (summary, failing)
}

fn walk(v: &mut Value, path: String, scale: f64, s: &mut Summary, failing: &mut Vec<String>) {
    match v {
        Value::Object(map) => {
            rescale(map, scale);
            if let Some(Value::Bool(h)) = map.get("holds") {
                s.checks += 1;
                if *h {
                    s.passed += 1;
                } else {
                    s.failed += 1;
                    failing.push(path.clone());
                }
            }
            for (k, child) in map.iter_mut() {
                walk(child, format!("{path}.{k}"), scale, s, failing);
            }
        }
        Value::Array(items) => {
            for (i, child) in items.iter_mut().enumerate() {
                walk(child, format!("{path}[{i}]"), scale, s, failing);
            }
        }
        _ => {}
    }
}

fn rescale(map: &mut Map<String, Value>, scale: f64) {
    let (Some(gap), Some(tol)) = (
        map.get("gap_min_eig").and_then(Value::as_f64),
        map.get("tol").and_then(Value::as_f64),
    ) else {
        return;
    };
    if !map.contains_key("holds") {
        return;
    }
    let tol = tol * scale;
    map.insert("tol".into(), json_f64(tol));
    map.insert("holds".into(), Value::Bool(gap >= -tol));
}

fn json_f64(x: f64) -> Value {
    Number::from_f64(x).map_or(Value::Null, Value::Number)
}

/// Applies [`sig`] to every float in the tree.
pub fn round_numbers(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                *v = json_f64(sig(x));
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

/// Writes via a temporary file in the target directory and a rename.
pub fn write_atomic(path: &Path, contents: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}
