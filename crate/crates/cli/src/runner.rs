//! Scenario and suite drivers.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{CliError, CliResult};
use crate::exec::execute;
use crate::report::{account, round_numbers, timestamp, version_string, write_atomic, Report, Summary};
use crate::scenario::{parse_payload, parse_scenario, Kind};

pub const THREADS_ENV: &str = "TOOLKIT_THREADS";

/// Global flags shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol_scale: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            seed: None,
            out: None,
            tol_scale: 1.0,
        }
    }
}

/// Caps the global rayon pool from `TOOLKIT_THREADS`; ignored when unset.
pub fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize =
        raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))
        })?;
    // A second call in the same process keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Runs one payload of `kind`. `whole` is the text `payload` was sliced from.
pub fn run_payload(
    kind: Kind,
    seed: u64,
    whole: &str,
    payload: &RawValue,
    file: &str,
    tol_scale: f64,
) -> CliResult<Report> {
    if !(tol_scale > 0.0 && tol_scale.is_finite()) {
        return Err(CliError::Usage(format!(
            "--tol-scale must be positive, got {tol_scale}"
        )));
    }
    let parsed = parse_payload(kind, whole, payload, file)?;
    let (mut results, error) = match execute(&parsed, seed, file)? {
        Ok(v) => (v, None),
        Err(e) => (serde_json::Value::Null, Some(e.to_string())),
    };
    let (mut summary, failing) = account(&mut results, tol_scale);
    summary.pass &= error.is_none();
    round_numbers(&mut results);
    Ok(Report {
        kind,
        seed,
        echo: payload.to_owned(),
        results,
        error,
        summary,
        failing,
        version: version_string(),
        timestamp: timestamp(),
    })
}

pub fn render(report: &impl Serialize) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// A full scenario file; the report goes to `--out`, else the scenario's
/// `out` (relative to the scenario file), else nowhere.
pub fn run_scenario_text(
    text: &str,
    file: &str,
    base: &Path,
    opts: &RunOptions,
) -> CliResult<(Report, Option<PathBuf>)> {
    let sc = parse_scenario(text, file)?;
    let seed = opts.seed.unwrap_or(sc.seed);
    let report = run_payload(sc.kind, seed, text, sc.payload, file, opts.tol_scale)?;
    let out = opts.out.clone().or_else(|| sc.out.map(|p| base.join(p)));
    if let Some(path) = &out {
        write_atomic(path, render(&report)?.as_bytes())?;
    }
    Ok((report, out))
}

pub fn run_scenario_file(path: &Path, opts: &RunOptions) -> CliResult<(Report, Option<PathBuf>)> {
    let text = read_text(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_scenario_text(&text, &path.display().to_string(), base, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub file: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<Kind>,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<Summary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failing: Vec<String>,
    #[serde(default)]
    pub schema_error: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub scenarios: usize,
    pub passed: usize,
    pub failed: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub scenarios: Vec<SuiteEntry>,
    pub summary: SuiteSummary,
    pub version: String,
    pub timestamp: String,
}

impl SuiteReport {
    pub fn exit_code(&self) -> i32 {
        if self.scenarios.iter().any(|e| e.schema_error) {
            2
        } else if self.summary.pass {
            0
        } else {
            1
        }
    }
}

/// Every `*.json` directly under `dir`, in name order.
pub fn scenario_files(dir: &Path) -> CliResult<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    Ok(files)
}

/// Runs a directory of scenarios in parallel. Per-scenario `out` paths are
/// honoured; `opts.out` is left to the caller for the aggregate.
pub fn run_suite(dir: &Path, opts: &RunOptions) -> CliResult<SuiteReport> {
    let files = scenario_files(dir)?;
    let per_file = RunOptions {
        out: None,
        ..opts.clone()
    };
    let scenarios: Vec<SuiteEntry> = files
        .par_iter()
        .map(|path| {
            let file = path.file_name().map_or_else(
                || path.display().to_string(),
                |n| n.to_string_lossy().into_owned(),
            );
            match run_scenario_file(path, &per_file) {
                Ok((r, _)) => SuiteEntry {
                    file,
                    kind: Some(r.kind),
                    pass: r.summary.pass,
                    summary: Some(r.summary),
                    error: r.error,
                    failing: r.failing,
                    schema_error: false,
                },
                Err(e) => SuiteEntry {
                    file,
                    kind: None,
                    pass: false,
                    summary: None,
                    schema_error: e.is_schema(),
                    error: Some(e.to_string()),
                    failing: Vec::new(),
                },
            }
        })
        .collect();
    let passed = scenarios.iter().filter(|e| e.pass).count();
    let failed = scenarios.len() - passed;
    Ok(SuiteReport {
        summary: SuiteSummary {
            scenarios: scenarios.len(),
            passed,
            failed,
            pass: failed == 0,
        },
        scenarios,
        version: version_string(),
        timestamp: timestamp(),
    })
}
