//! Scenario files and the per-kind payload schemas.

use std::path::PathBuf;

use converse_core::algebra::BoundInterval;
use converse_core::converse::{FFamily, Form, GSign};
use converse_core::operator::MatrixJson;
use converse_core::phi::PhiMap;
use converse_core::scalar::ScalarFunction;
use converse_core::tail::{EnsembleSpec, TailMode};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Kantorovich,
    Envelope,
    Certify,
    Ratio,
    Difference,
    Algebra,
    Tail,
}

/// A scenario whose payload still borrows the source text, so the report can
/// echo it byte for byte.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario<'a> {
    pub kind: Kind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(borrow)]
    pub payload: &'a RawValue,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KantorovichPayload {
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub r: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvelopePayload {
    pub f: ScalarFunction,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub degree: usize,
    /// Target sup gap; unlimited when absent.
    #[serde(default)]
    pub eps: Option<f64>,
}

/// An explicit matrix, a diagonal, or a seeded random operator with spectrum
/// spread over the member's `[m, M]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum OperatorSpec {
    Matrix(MatrixJson),
    Diag { diag: Vec<f64> },
    Random { random: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberSpec {
    #[serde(rename = "A")]
    pub a: OperatorSpec,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeMethod {
    Chord,
}

/// How the envelope of `f` is produced on each member interval.
///
/// `explicit` skips validation on purpose; it exists to feed inadmissible
/// envelopes to the certifier.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum EnvelopeSpec {
    Explicit {
        lower: Vec<f64>,
        upper: Vec<f64>,
        eps: f64,
    },
    Chebyshev {
        degree: usize,
        #[serde(default)]
        eps: Option<f64>,
    },
    Method {
        method: EnvelopeMethod,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyPayload {
    pub ensemble: Vec<MemberSpec>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub phi: Option<PhiMap>,
    pub f: ScalarFunction,
    pub envelope: EnvelopeSpec,
    #[serde(default)]
    pub g: Option<ScalarFunction>,
    #[serde(default, rename = "F")]
    pub family: Option<FFamily>,
}

/// Shared by `ratio` and `difference`; `sign` only matters for ratios.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConversePayload {
    pub ensemble: Vec<MemberSpec>,
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub phi: Option<PhiMap>,
    pub f: ScalarFunction,
    #[serde(default = "identity")]
    pub g: ScalarFunction,
    #[serde(default = "positive")]
    pub sign: GSign,
    #[serde(default = "example")]
    pub form: Form,
    #[serde(default)]
    pub envelope: Option<EnvelopeSpec>,
}

fn identity() -> ScalarFunction {
    ScalarFunction::identity()
}

fn positive() -> GSign {
    GSign::Positive
}

fn example() -> Form {
    Form::Example
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum IntervalOp {
    Add,
    Mul,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum AlgebraPayload {
    Intervals {
        op: IntervalOp,
        a: BoundInterval,
        b: BoundInterval,
    },
    Combined {
        ensemble: Vec<MemberSpec>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
        #[serde(default)]
        phi: Option<PhiMap>,
        f: ScalarFunction,
        h: ScalarFunction,
        #[serde(default = "identity")]
        g: ScalarFunction,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum ThetaSpec {
    List(Vec<f64>),
    Grid { lo: f64, hi: f64, steps: usize },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailPayload {
    pub spec: EnsembleSpec,
    pub f: ScalarFunction,
    pub h: ScalarFunction,
    #[serde(default = "identity")]
    pub g: ScalarFunction,
    pub ell: usize,
    pub theta: ThetaSpec,
    pub mode: TailMode,
}

#[derive(Debug, Clone)]
pub enum Payload {
    Kantorovich(KantorovichPayload),
    Envelope(EnvelopePayload),
    Certify(CertifyPayload),
    Ratio(ConversePayload),
    Difference(ConversePayload),
    Algebra(AlgebraPayload),
    Tail(TailPayload),
}

/// 1-based line and column of byte `offset` in `text`.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, col)
}

/// Deserializes `part`, a slice of `whole`, reporting positions in `whole`.
fn parse_part<'de, T: Deserialize<'de>>(whole: &str, part: &'de str, file: &str) -> CliResult<T> {
    let offset = (part.as_ptr() as usize).wrapping_sub(whole.as_ptr() as usize);
    let offset = if offset <= whole.len() { offset } else { 0 };
    let (base_line, base_col) = line_col(whole, offset);
    let schema = |path: String, e: serde_json::Error| {
        let (line, column) = if e.line() <= 1 {
            (base_line, base_col + e.column().saturating_sub(1))
        } else {
            (base_line + e.line() - 1, e.column())
        };
        CliError::Schema {
            file: file.to_string(),
            line,
            column,
            path,
            msg: strip_position(&e.to_string()),
        }
    };
    let mut de = serde_json::Deserializer::from_str(part);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        schema(path, e.into_inner())
    })?;
    de.end().map_err(|e| schema(".".into(), e))?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

pub fn parse_scenario<'a>(text: &'a str, file: &str) -> CliResult<Scenario<'a>> {
    parse_part(text, text, file)
}

/// Validates a raw payload against the schema of `kind`.
pub fn parse_payload(kind: Kind, whole: &str, raw: &RawValue, file: &str) -> CliResult<Payload> {
    let part = raw.get();
    Ok(match kind {
        Kind::Kantorovich => Payload::Kantorovich(parse_part(whole, part, file)?),
        Kind::Envelope => Payload::Envelope(parse_part(whole, part, file)?),
        Kind::Certify => Payload::Certify(parse_part(whole, part, file)?),
        Kind::Ratio => Payload::Ratio(parse_part(whole, part, file)?),
        Kind::Difference => Payload::Difference(parse_part(whole, part, file)?),
        Kind::Algebra => Payload::Algebra(parse_part(whole, part, file)?),
        Kind::Tail => Payload::Tail(parse_part(whole, part, file)?),
    })
}

/// Parses a whole document, e.g. a bare payload file.
pub fn parse_document<'a, T: Deserialize<'a>>(text: &'a str, file: &str) -> CliResult<T> {
    parse_part(text, text, file)
}
