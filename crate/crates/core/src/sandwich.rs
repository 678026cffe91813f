//! Kantorovich-weighted sandwich operators around `Phi(f(A))`.
//!
//! With envelope `p_L <= f <= p_U` the upper operator is
//!
//! ```text
//! sum_{a_i >= 0} a_i K(p_U, i) p_U(A)^i + sum_{a_i < 0} a_i K(p_L, i)^-1 p_L(A)^i
//! ```
//!
//! compressed by `V`, and the lower operator swaps the roles of the two sides.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kantorovich::kantorovich;
use crate::operator::{apply_polynomial, compress, HermitianOperator};
use crate::phi::PhiMap;
use crate::scalar::{function_range, Envelope, Interval, Polynomial, ScalarFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    #[serde(alias = "U", alias = "u")]
    Upper,
    #[serde(alias = "L", alias = "l")]
    Lower,
}

/// Where the Kantorovich factors take their endpoints from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KantoEndpoints {
    /// Scalar images of `p_U`, `p_L` over the envelope interval.
    #[default]
    Interval,
    /// Extreme eigenvalues of `p_U(A)`, `p_L(A)`.
    Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichPair {
    pub upper_op: HermitianOperator,
    pub lower_op: HermitianOperator,
    pub upper_raw: HermitianOperator,
    pub lower_raw: HermitianOperator,
    /// Factor multiplying `a_i` in the upper operator, per power.
    pub upper_weights: Vec<f64>,
    pub lower_weights: Vec<f64>,
    pub endpoints: KantoEndpoints,
}

impl SandwichPair {
    pub fn op(&self, side: Side) -> &HermitianOperator {
        match side {
            Side::Upper => &self.upper_op,
            Side::Lower => &self.lower_op,
        }
    }

    pub fn raw(&self, side: Side) -> &HermitianOperator {
        match side {
            Side::Upper => &self.upper_raw,
            Side::Lower => &self.lower_raw,
        }
    }
}

/// Sorted union of disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeSet {
    intervals: Vec<Interval>,
}

impl RangeSet {
    /// Sorts and merges overlapping intervals.
    pub fn new(mut intervals: Vec<Interval>) -> Self {
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        let mut merged: Vec<Interval> = Vec::with_capacity(intervals.len());
        for iv in intervals {
            match merged.last_mut() {
                Some(last) if iv.lo <= last.hi => last.hi = last.hi.max(iv.hi),
                _ => merged.push(iv),
            }
        }
        Self { intervals: merged }
    }

    pub fn single(iv: Interval) -> Self {
        Self { intervals: vec![iv] }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn hull(&self) -> Interval {
        let first = self.intervals.first().expect("nonempty range set");
        let last = self.intervals.last().expect("nonempty range set");
        Interval {
            lo: first.lo,
            hi: last.hi,
        }
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x, slack))
    }
}

/// Which envelope side feeds power `i` of the given sandwich side.
fn feeds_upper(side: Side, a_i: f64) -> bool {
    (side == Side::Upper) == (a_i >= 0.0)
}

fn check_positive(phi: &PhiMap, upper: Interval, lower: Interval) -> Result<()> {
    if !phi.has_nonlinear_terms() {
        return Ok(());
    }
    for (name, iv) in [("p_L", lower), ("p_U", upper)] {
        if !(iv.lo > 0.0) {
            return Err(Error::NonPositiveSpectrum {
                what: format!("{name} image"),
                min: iv.lo,
            });
        }
    }
    Ok(())
}

/// Per-power factors for one side given the spectral ranges of `p_U`, `p_L`.
fn side_weights(phi: &PhiMap, side: Side, upper: Interval, lower: Interval) -> Result<Vec<f64>> {
    phi.coeffs()
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            if i < 2 || a == 0.0 {
                return Ok(1.0);
            }
            let r = i as f64;
            if feeds_upper(side, a) {
                kantorovich(upper.lo, upper.hi, r)
            } else {
                Ok(1.0 / kantorovich(lower.lo, lower.hi, r)?)
            }
        })
        .collect()
}

fn combine_ops(
    phi: &PhiMap,
    side: Side,
    weights: &[f64],
    pu: &HermitianOperator,
    pl: &HermitianOperator,
) -> HermitianOperator {
    let n = pu.dim();
    let mut acc = HermitianOperator::zeros(n);
    let (mut pow_u, mut pow_l) = (HermitianOperator::identity(n), HermitianOperator::identity(n));
    for (i, &a) in phi.coeffs().iter().enumerate() {
        if i > 0 {
            pow_u = pow_u.sym_product(pu);
            pow_l = pow_l.sym_product(pl);
        }
        if a == 0.0 {
            continue;
        }
        let base = if feeds_upper(side, a) { &pow_u } else { &pow_l };
        acc = acc.add(&base.scale(a * weights[i]));
    }
    acc
}

fn combine_polys(phi: &PhiMap, side: Side, weights: &[f64], pu: &Polynomial, pl: &Polynomial) -> Polynomial {
    phi.coeffs()
        .iter()
        .enumerate()
        .filter(|(_, &a)| a != 0.0)
        .fold(Polynomial::zero(), |acc, (i, &a)| {
            let base = if feeds_upper(side, a) { pu } else { pl };
            &acc + &base.powi(i).scale(a * weights[i])
        })
}

fn check_spectrum_inside(a: &HermitianOperator, iv: Interval) -> Result<()> {
    let (lo, hi) = a.spectral_bounds()?;
    let slack = 1e-10 * 1f64.max(iv.lo.abs()).max(iv.hi.abs());
    if !iv.contains(lo, slack) || !iv.contains(hi, slack) {
        return Err(Error::DomainViolation(format!(
            "spectrum [{lo}, {hi}] is not inside [{}, {}]",
            iv.lo, iv.hi
        )));
    }
    Ok(())
}

/// Sandwich operators with Kantorovich endpoints from the envelope interval.
pub fn build_sandwich(phi: &PhiMap, env: &Envelope, a: &HermitianOperator) -> Result<SandwichPair> {
    build_sandwich_with(phi, env, a, KantoEndpoints::Interval)
}

pub fn build_sandwich_with(
    phi: &PhiMap,
    env: &Envelope,
    a: &HermitianOperator,
    endpoints: KantoEndpoints,
) -> Result<SandwichPair> {
    if a.dim() != phi.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: phi.input_dim(),
            got: a.dim(),
        });
    }
    check_spectrum_inside(a, env.interval)?;
    let pu = apply_polynomial(&env.upper, a);
    let pl = apply_polynomial(&env.lower, a);
    let (ru, rl) = match endpoints {
        KantoEndpoints::Interval => (
            poly_range(&env.upper, env.interval)?,
            poly_range(&env.lower, env.interval)?,
        ),
        KantoEndpoints::Operator => {
            let (ulo, uhi) = pu.spectral_bounds()?;
            let (llo, lhi) = pl.spectral_bounds()?;
            (Interval { lo: ulo, hi: uhi }, Interval { lo: llo, hi: lhi })
        }
    };
    check_positive(phi, ru, rl)?;
    let upper_weights = side_weights(phi, Side::Upper, ru, rl)?;
    let lower_weights = side_weights(phi, Side::Lower, ru, rl)?;
    let upper_raw = combine_ops(phi, Side::Upper, &upper_weights, &pu, &pl);
    let lower_raw = combine_ops(phi, Side::Lower, &lower_weights, &pu, &pl);
    Ok(SandwichPair {
        upper_op: compress(phi.v(), &upper_raw)?,
        lower_op: compress(phi.v(), &lower_raw)?,
        upper_raw,
        lower_raw,
        upper_weights,
        lower_weights,
        endpoints,
    })
}

fn poly_range(p: &Polynomial, iv: Interval) -> Result<Interval> {
    function_range(&ScalarFunction::Poly(p.clone()), iv.lo, iv.hi)
}

/// Scalar sandwich polynomial; Kantorovich endpoints are the images of
/// `p_U`, `p_L` over `[m, M]`.
pub fn sandwich_scalar_poly(
    phi: &PhiMap,
    env: &Envelope,
    m: f64,
    big_m: f64,
    side: Side,
) -> Result<ScalarFunction> {
    let iv = Interval::new(m, big_m)?;
    let (ru, rl) = (poly_range(&env.upper, iv)?, poly_range(&env.lower, iv)?);
    check_positive(phi, ru, rl)?;
    let w = side_weights(phi, side, ru, rl)?;
    Ok(ScalarFunction::Poly(combine_polys(
        phi, side, &w, &env.upper, &env.lower,
    )))
}

/// Image of [`sandwich_scalar_poly`] over `[m, M]`.
pub fn sandwich_range(phi: &PhiMap, env: &Envelope, m: f64, big_m: f64, side: Side) -> Result<RangeSet> {
    let s = sandwich_scalar_poly(phi, env, m, big_m, side)?;
    Ok(RangeSet::single(function_range(&s, m, big_m)?))
}
