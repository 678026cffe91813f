use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use converse_cli::report::{fmt_sig, write_atomic};
use converse_cli::runner::{
    configure_threads, read_text, render, run_payload, run_scenario_file, run_suite, RunOptions,
};
use converse_cli::scenario::IntervalOp;
use converse_cli::{CliError, CliResult, Kind, Report, EXIT_FAILED, EXIT_OK, EXIT_SCHEMA};
use converse_core::tail::TailMode;
use serde_json::json;
use serde_json::value::RawValue;

#[derive(Debug, Parser)]
#[command(
    name = "converse",
    version,
    about = "Certify converse Jensen-type operator bounds"
)]
struct Cli {
    /// Overrides the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report destination (CSV for `tail`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Multiplies every Loewner tolerance before judging.
    #[arg(long, global = true, default_value_t = 1.0)]
    tol_scale: f64,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Subcommand)]
#[command(allow_negative_numbers = true)]
enum Cmd {
    /// Print K(m, M, r) to 12 significant digits.
    #[command(allow_negative_numbers = true)]
    Kantorovich {
        #[arg(long)]
        m: f64,
        #[arg(long = "M")]
        big_m: f64,
        #[arg(long)]
        r: f64,
    },
    /// Build and validate a Chebyshev envelope.
    #[command(allow_negative_numbers = true)]
    Envelope {
        #[arg(long)]
        f: String,
        #[arg(long)]
        m: f64,
        #[arg(long = "M")]
        big_m: f64,
        #[arg(long)]
        degree: usize,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Sandwich and general bounds for a payload file.
    Certify { payload: PathBuf },
    /// Ratio constants and certificates for a payload file.
    Ratio { payload: PathBuf },
    /// Difference constants and certificates for a payload file.
    Difference { payload: PathBuf },
    /// Interval sum or product, e.g. `--op mul --a 1,2 --b 0.5,3`.
    #[command(allow_negative_numbers = true)]
    Algebra {
        #[arg(long, value_enum)]
        op: IntervalOp,
        #[arg(long, allow_hyphen_values = true)]
        a: String,
        #[arg(long, allow_hyphen_values = true)]
        b: String,
    },
    /// Monte Carlo tail sweep, written as CSV.
    Tail {
        /// Ensemble JSON: n, k, weights, m, M, trials, seed, basis.
        #[arg(long)]
        spec: PathBuf,
        /// `lo:hi:steps`
        #[arg(long)]
        theta_grid: String,
        #[arg(long)]
        ell: usize,
        #[arg(long, value_parser = parse_mode)]
        mode: TailMode,
        #[arg(long, default_value = "pow:2")]
        f: String,
        #[arg(long, default_value = "pow:2")]
        h: String,
        #[arg(long, default_value = "id")]
        g: String,
    },
    /// Run one scenario file.
    Run { scenario: PathBuf },
    /// Run every scenario in a directory.
    Suite { dir: PathBuf },
}

fn parse_mode(s: &str) -> Result<TailMode, String> {
    match s {
        "add" => Ok(TailMode::Add),
        "mul" => Ok(TailMode::Mul),
        _ => Err(format!("expected add or mul, got {s:?}")),
    }
}

fn parse_interval(s: &str) -> CliResult<serde_json::Value> {
    let iv: converse_core::algebra::BoundInterval = s
        .parse()
        .map_err(|e: converse_core::Error| CliError::Usage(e.to_string()))?;
    Ok(json!({ "lo": iv.lo, "hi": iv.hi }))
}

fn parse_grid(s: &str) -> CliResult<serde_json::Value> {
    let bad = || CliError::Usage(format!("--theta-grid expects lo:hi:steps, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, steps] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let steps: usize = steps.trim().parse().map_err(|_| bad())?;
    Ok(json!({ "lo": lo, "hi": hi, "steps": steps }))
}

fn exit_for(report: &Report) -> i32 {
    if report.summary.pass {
        return EXIT_OK;
    }
    eprintln!(
        "certification failed: {} of {} checks{}",
        report.summary.failed,
        report.summary.checks,
        report
            .error
            .as_ref()
            .map_or(String::new(), |e| format!("; rejected: {e}"))
    );
    for path in &report.failing {
        eprintln!("  failing: {path}");
    }
    eprintln!("instance: {}", report.echo.get());
    EXIT_FAILED
}

fn emit(report: &Report, out: Option<&Path>) -> CliResult<()> {
    let text = render(report)?;
    if let Some(p) = out {
        write_atomic(p, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

/// Runs a payload built from flags or read from a bare payload file.
fn run_raw(kind: Kind, text: &str, file: &str, opts: &RunOptions) -> CliResult<Report> {
    let raw: &RawValue = converse_cli::scenario::parse_document(text, file)?;
    run_payload(kind, opts.seed.unwrap_or(0), text, raw, file, opts.tol_scale)
}

fn payload_file(kind: Kind, path: &Path, opts: &RunOptions) -> CliResult<i32> {
    let text = read_text(path)?;
    let report = run_raw(kind, &text, &path.display().to_string(), opts)?;
    emit(&report, opts.out.as_deref())?;
    Ok(exit_for(&report))
}

fn tail_csv(report: &Report) -> String {
    let mut s = String::from("theta,p_lhs,p_rhs,ci,dominated\n");
    if let Some(rows) = report.results.get("reports").and_then(|r| r.as_array()) {
        for r in rows {
            let num = |k: &str| fmt_sig(r.get(k).and_then(|v| v.as_f64()).unwrap_or(f64::NAN));
            let dom = r.get("dominated").and_then(|v| v.as_bool()).unwrap_or(false);
            s.push_str(&format!(
                "{},{},{},{},{}\n",
                num("theta"),
                num("p_lhs"),
                num("p_rhs"),
                num("ci_halfwidth"),
                dom
            ));
        }
    }
    s
}

fn dispatch(cli: Cli) -> CliResult<i32> {
    configure_threads()?;
    let opts = RunOptions {
        seed: cli.seed,
        out: cli.out.clone(),
        tol_scale: cli.tol_scale,
    };
    let out = cli.out.as_deref();
    match cli.cmd {
        Cmd::Kantorovich { m, big_m, r } => {
            let text = json!({ "m": m, "M": big_m, "r": r }).to_string();
            let report = run_raw(Kind::Kantorovich, &text, "<args>", &opts)?;
            if let Some(p) = out {
                write_atomic(p, render(&report)?.as_bytes())?;
            }
            match report.results.get("value").and_then(|v| v.as_f64()) {
                Some(v) => println!("{}", fmt_sig(v)),
                None => eprintln!("error: {}", report.error.as_deref().unwrap_or("no value")),
            }
            Ok(exit_for(&report))
        }
        Cmd::Envelope {
            f,
            m,
            big_m,
            degree,
            eps,
        } => {
            let mut payload = json!({ "f": f, "m": m, "M": big_m, "degree": degree });
            if let Some(e) = eps {
                payload["eps"] = json!(e);
            }
            let report = run_raw(Kind::Envelope, &payload.to_string(), "<args>", &opts)?;
            emit(&report, out)?;
            Ok(exit_for(&report))
        }
        Cmd::Certify { payload } => payload_file(Kind::Certify, &payload, &opts),
        Cmd::Ratio { payload } => payload_file(Kind::Ratio, &payload, &opts),
        Cmd::Difference { payload } => payload_file(Kind::Difference, &payload, &opts),
        Cmd::Algebra { op, a, b } => {
            let payload = json!({ "op": op, "a": parse_interval(&a)?, "b": parse_interval(&b)? });
            let report = run_raw(Kind::Algebra, &payload.to_string(), "<args>", &opts)?;
            if let Some(p) = out {
                write_atomic(p, render(&report)?.as_bytes())?;
            }
            match report.results.get("result") {
                Some(r) => println!(
                    "{},{}",
                    fmt_sig(r["lo"].as_f64().unwrap_or(f64::NAN)),
                    fmt_sig(r["hi"].as_f64().unwrap_or(f64::NAN))
                ),
                None => eprintln!("error: {}", report.error.as_deref().unwrap_or("no result")),
            }
            Ok(exit_for(&report))
        }
        Cmd::Tail {
            spec,
            theta_grid,
            ell,
            mode,
            f,
            h,
            g,
        } => {
            let spec_text = read_text(&spec)?;
            let spec_value: serde_json::Value =
                converse_cli::scenario::parse_document(&spec_text, &spec.display().to_string())?;
            let payload = json!({
                "spec": spec_value,
                "f": f,
                "h": h,
                "g": g,
                "ell": ell,
                "theta": parse_grid(&theta_grid)?,
                "mode": mode,
            });
            let report = run_raw(
                Kind::Tail,
                &payload.to_string(),
                &spec.display().to_string(),
                &opts,
            )?;
            let csv = tail_csv(&report);
            match out {
                Some(p) => write_atomic(p, csv.as_bytes())?,
                None => print!("{csv}"),
            }
            if let Some(e) = &report.error {
                eprintln!("error: {e}");
            }
            Ok(exit_for(&report))
        }
        Cmd::Run { scenario } => {
            let (report, _) = run_scenario_file(&scenario, &opts)?;
            print!("{}", render(&report)?);
            Ok(exit_for(&report))
        }
        Cmd::Suite { dir } => {
            let suite = run_suite(&dir, &opts)?;
            let text = render(&suite)?;
            if let Some(p) = out {
                write_atomic(p, text.as_bytes())?;
            }
            print!("{text}");
            for e in suite.scenarios.iter().filter(|e| !e.pass) {
                eprintln!(
                    "FAIL {}: {}",
                    e.file,
                    e.error.as_deref().unwrap_or("check failed")
                );
            }
            Ok(suite.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_SCHEMA as u8)
        }
    }
}
