//! Runs validated payloads against the core library.
//!
//! Input assembly (operators, weights, maps) fails with [`CliError::Invalid`];
//! anything raised afterwards is a computed rejection and lands in the report.

use converse_core::algebra::{certify_combined, interval_add, interval_mul};
use converse_core::converse::{
    difference_certify, difference_certify_example, general_bound, ratio_certify, ratio_certify_example,
    BoundCertificate, Form, Member, WeightedEnsemble,
};
use converse_core::kantorovich::{kantorovich, kantorovich_oracle};
use converse_core::operator::{apply_scalar_function, certify_leq, random_hermitian, HermitianOperator};
use converse_core::phi::{phi_apply, PhiMap};
use converse_core::sandwich::{build_sandwich, Side};
use converse_core::scalar::{
    build_envelope, chord_tangent_auto, Envelope, Interval, Polynomial, ScalarFunction,
};
use converse_core::tail::{tail_sweep, theta_grid};
use serde_json::{json, Value};

use crate::error::{CliError, CliResult};
use crate::scenario::{
    AlgebraPayload, ConversePayload, EnvelopeSpec, IntervalOp, MemberSpec, OperatorSpec, Payload, ThetaSpec,
};

/// Relative tolerance for the closed form against the chord-ratio oracle.
const ORACLE_REL_TOL: f64 = 1e-6;

type Computed = converse_core::Result<Value>;

fn invalid(file: &str, field: impl Into<String>) -> impl FnOnce(converse_core::Error) -> CliError + '_ {
    let field = field.into();
    move |source| CliError::Invalid {
        file: file.to_string(),
        field,
        source,
    }
}

fn build_operator(
    spec: &OperatorSpec,
    m: f64,
    big_m: f64,
    seed: u64,
) -> converse_core::Result<HermitianOperator> {
    match spec {
        OperatorSpec::Matrix(j) => j.to_operator(),
        OperatorSpec::Diag { diag } => Ok(HermitianOperator::diag(diag)),
        OperatorSpec::Random { random } => random_hermitian(*random, m, big_m, seed),
    }
}

/// Members draw random operators from `seed + index`.
pub fn build_ensemble(
    members: &[MemberSpec],
    weights: Option<&[f64]>,
    phi: Option<&PhiMap>,
    seed: u64,
    file: &str,
) -> CliResult<(WeightedEnsemble, PhiMap)> {
    let mut out = Vec::with_capacity(members.len());
    for (j, spec) in members.iter().enumerate() {
        let a = build_operator(&spec.a, spec.m, spec.big_m, seed.wrapping_add(j as u64))
            .map_err(invalid(file, format!("ensemble[{j}].A")))?;
        out.push(Member {
            a,
            m: spec.m,
            big_m: spec.big_m,
        });
    }
    let k = out.len();
    let w = match weights {
        Some(w) => w.to_vec(),
        None => vec![1.0 / k.max(1) as f64; k],
    };
    let ens = WeightedEnsemble::new(out, w).map_err(invalid(file, "ensemble"))?;
    let phi = match phi {
        Some(p) => p.clone(),
        None => PhiMap::identity(ens.dim()),
    };
    if phi.input_dim() != ens.dim() {
        return Err(invalid(file, "phi")(converse_core::Error::DimensionMismatch {
            expected: ens.dim(),
            got: phi.input_dim(),
        }));
    }
    Ok((ens, phi))
}

pub fn build_envelopes(
    spec: &EnvelopeSpec,
    f: &ScalarFunction,
    ens: &WeightedEnsemble,
) -> converse_core::Result<Vec<Envelope>> {
    ens.members()
        .iter()
        .map(|mem| {
            let (m, big_m) = (mem.m, mem.big_m);
            match spec {
                EnvelopeSpec::Chebyshev { degree, eps } => {
                    build_envelope(f, m, big_m, *degree, eps.unwrap_or(f64::INFINITY))
                }
                EnvelopeSpec::Method { .. } => {
                    Envelope::from_linear_bound(f.clone(), m, big_m, &chord_tangent_auto(f, m, big_m)?)
                }
                EnvelopeSpec::Explicit { lower, upper, eps } => Ok(Envelope::new_unchecked(
                    f.clone(),
                    Interval::new(m, big_m)?,
                    Polynomial::new(lower.clone()),
                    Polynomial::new(upper.clone()),
                    *eps,
                )),
            }
        })
        .collect()
}

fn to_value<T: serde::Serialize>(x: &T) -> Value {
    serde_json::to_value(x).unwrap_or(Value::Null)
}

fn kantorovich_results(m: f64, big_m: f64, r: f64) -> Computed {
    let value = kantorovich(m, big_m, r)?;
    let oracle = kantorovich_oracle(m, big_m, r)?;
    let rel = (value - oracle).abs() / value.abs().max(f64::MIN_POSITIVE);
    Ok(json!({
        "value": value,
        "oracle": oracle,
        "oracle_agreement": { "rel_diff": rel, "holds": rel <= ORACLE_REL_TOL },
    }))
}

fn sandwich_results(ens: &WeightedEnsemble, phi: &PhiMap, envs: &[Envelope]) -> Computed {
    let mut rows = Vec::new();
    for (j, (mem, env)) in ens.members().iter().zip(envs).enumerate() {
        let pair = build_sandwich(phi, env, &mem.a)?;
        let exact = phi_apply(phi, &apply_scalar_function(&env.f, &mem.a)?)?;
        rows.push(json!({
            "member": j,
            "eps": env.eps,
            "upper": to_value(&certify_leq(&exact, &pair.upper_op, 1.0)?),
            "lower": to_value(&certify_leq(&pair.lower_op, &exact, 1.0)?),
        }));
    }
    Ok(Value::Array(rows))
}

fn certificates(pair: (BoundCertificate, BoundCertificate)) -> Vec<Value> {
    vec![to_value(&pair.0), to_value(&pair.1)]
}

fn converse_results(p: &ConversePayload, ens: &WeightedEnsemble, phi: &PhiMap, ratio: bool) -> Computed {
    let pair = match (p.form, &p.envelope) {
        (Form::Example, _) if ratio => ratio_certify_example(ens, phi, &p.f, &p.g, p.sign)?,
        (Form::Example, _) => difference_certify_example(ens, phi, &p.f, &p.g)?,
        (Form::Theorem, None) => {
            return Err(converse_core::Error::InvalidInput(
                "theorem form needs an envelope".into(),
            ))
        }
        (Form::Theorem, Some(spec)) => {
            let envs = build_envelopes(spec, &p.f, ens)?;
            if ratio {
                ratio_certify(ens, phi, &envs, &p.g, p.sign)?
            } else {
                difference_certify(ens, phi, &envs, &p.g)?
            }
        }
    };
    let (c1, c2) = if ratio {
        ("alpha_1", "alpha_2")
    } else {
        ("beta_1", "beta_2")
    };
    Ok(json!({
        c1: pair.0.scalar_constant,
        c2: pair.1.scalar_constant,
        "x_star": [pair.0.x_star, pair.1.x_star],
        "certificates": certificates(pair),
    }))
}

/// Computes the results tree for one payload.
pub fn execute(payload: &Payload, seed: u64, file: &str) -> CliResult<Computed> {
    Ok(match payload {
        Payload::Kantorovich(p) => kantorovich_results(p.m, p.big_m, p.r),
        Payload::Envelope(p) => (|| {
            let env = build_envelope(&p.f, p.m, p.big_m, p.degree, p.eps.unwrap_or(f64::INFINITY))?;
            let check = match env.validate() {
                Ok(()) => json!({ "holds": true }),
                Err(e) => json!({ "holds": false, "reason": e.to_string() }),
            };
            let mut v = to_value(&env);
            v["validation"] = check;
            Ok(v)
        })(),
        Payload::Certify(p) => {
            if p.g.is_some() != p.family.is_some() {
                return Err(CliError::Usage(format!(
                    "{file}: `g` and `F` must be given together"
                )));
            }
            let (ens, phi) = build_ensemble(&p.ensemble, p.weights.as_deref(), p.phi.as_ref(), seed, file)?;
            (|| {
                let envs = build_envelopes(&p.envelope, &p.f, &ens)?;
                let sandwich = sandwich_results(&ens, &phi, &envs)?;
                let mut bounds = Vec::new();
                if let (Some(g), Some(family)) = (&p.g, p.family) {
                    for side in [Side::Upper, Side::Lower] {
                        bounds.push(to_value(&general_bound(&ens, &phi, &envs, g, family, side)?));
                    }
                }
                Ok(json!({ "sandwich": sandwich, "bounds": bounds }))
            })()
        }
        Payload::Ratio(p) | Payload::Difference(p) => {
            let (ens, phi) = build_ensemble(&p.ensemble, p.weights.as_deref(), p.phi.as_ref(), seed, file)?;
            converse_results(p, &ens, &phi, matches!(payload, Payload::Ratio(_)))
        }
        Payload::Algebra(AlgebraPayload::Intervals { op, a, b }) => (|| {
            let result = match op {
                IntervalOp::Add => interval_add(*a, *b),
                IntervalOp::Mul => interval_mul(*a, *b)?,
            };
            Ok(json!({ "op": to_value(op), "a": to_value(a), "b": to_value(b), "result": to_value(&result) }))
        })(),
        Payload::Algebra(AlgebraPayload::Combined {
            ensemble,
            weights,
            phi,
            f,
            h,
            g,
        }) => {
            let (ens, phi) = build_ensemble(ensemble, weights.as_deref(), phi.as_ref(), seed, file)?;
            certify_combined(&ens, &phi, f, h, g).map(|r| to_value(&r))
        }
        Payload::Tail(p) => {
            let mut spec = p.spec.clone();
            spec.seed = spec.seed.wrapping_add(seed);
            let thetas = match &p.theta {
                ThetaSpec::List(v) => v.clone(),
                ThetaSpec::Grid { lo, hi, steps } => theta_grid(*lo, *hi, *steps),
            };
            tail_sweep(&spec, &p.f, &p.h, &p.g, p.ell, &thetas, p.mode).map(|s| {
                let mut v = to_value(&s);
                v["domination"] = json!({ "holds": s.all_dominated() });
                v
            })
        }
    })
}
