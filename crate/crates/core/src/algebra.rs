//! Interval coefficients `[alpha_L, alpha_U]` with closed addition and
//! positive multiplication.

use serde::{Deserialize, Serialize};

use crate::converse::{ensemble_lhs, ensemble_phi, ratio_constant, GSign, WeightedEnsemble};
use crate::error::{Error, Result};
use crate::operator::{apply_scalar_function, certify_leq, HermitianOperator, OrderCertificate};
use crate::phi::{phi_is_normalized_positive_linear, PhiMap};
use crate::sandwich::Side;
use crate::scalar::{chord_tangent_auto, Interval, LinearBound, ScalarFunction};

const COMMUTE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInterval {
    pub lo: f64,
    pub hi: f64,
}

impl BoundInterval {
    pub const ZERO: Self = Self { lo: 0.0, hi: 0.0 };
    pub const ONE: Self = Self { lo: 1.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::InvalidInput(format!("bad bound interval [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }
}

impl std::str::FromStr for BoundInterval {
    type Err = Error;

    /// `"lo,hi"`
    fn from_str(s: &str) -> Result<Self> {
        let (lo, hi) = s
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("expected lo,hi, got {s:?}")))?;
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{t:?}: {e}")))
        };
        Self::new(num(lo)?, num(hi)?)
    }
}

/// `[min (a x + b')/g(x), max (a x + b)/g(x)]` over `[m, M]` for `g > 0`.
pub fn coeff_interval(line: &LinearBound, g: &ScalarFunction, m: f64, big_m: f64) -> Result<BoundInterval> {
    let iv = Interval::new(m, big_m)?;
    let chord = ScalarFunction::Affine { a: line.a, b: line.b };
    let tangent = ScalarFunction::Affine {
        a: line.a,
        b: line.b_prime,
    };
    let hi = ratio_constant(&chord, g, iv, GSign::Positive, Side::Upper)?;
    let lo = ratio_constant(&tangent, g, iv, GSign::Positive, Side::Lower)?;
    BoundInterval::new(lo.value, hi.value)
}

pub fn interval_add(p: BoundInterval, q: BoundInterval) -> BoundInterval {
    BoundInterval {
        lo: p.lo + q.lo,
        hi: p.hi + q.hi,
    }
}

/// Endpoint products; both intervals must be positive.
pub fn interval_mul(p: BoundInterval, q: BoundInterval) -> Result<BoundInterval> {
    for (name, iv) in [("left", p), ("right", q)] {
        if !(iv.lo > 0.0) {
            return Err(Error::PositivityViolation(format!(
                "{name} factor [{}, {}] is not positive",
                iv.lo, iv.hi
            )));
        }
    }
    Ok(BoundInterval {
        lo: p.lo * q.lo,
        hi: p.hi * q.hi,
    })
}

/// One side of `lo * G <= T <= hi * G`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalCertificate {
    pub side: Side,
    pub constant: f64,
    pub certificate: OrderCertificate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ProductStatus {
    /// All factors commute, so the product bracket is a valid claim.
    Certified,
    SkippedNonCommuting {
        commutator_norm: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedReport {
    pub f_interval: BoundInterval,
    pub h_interval: BoundInterval,
    pub sum_interval: BoundInterval,
    pub product_interval: BoundInterval,
    pub add: Vec<IntervalCertificate>,
    pub mul: Vec<IntervalCertificate>,
    pub mul_status: ProductStatus,
}

impl CombinedReport {
    pub fn holds(&self) -> bool {
        self.add.iter().chain(&self.mul).all(|c| c.certificate.holds)
    }
}

fn bracket(
    t: &HermitianOperator,
    g: &HermitianOperator,
    iv: BoundInterval,
) -> Result<Vec<IntervalCertificate>> {
    Ok(vec![
        IntervalCertificate {
            side: Side::Upper,
            constant: iv.hi,
            certificate: {
                let r = g.scale(iv.hi);
                certify_leq(t, &r, 1.0)?
            },
        },
        IntervalCertificate {
            side: Side::Lower,
            constant: iv.lo,
            certificate: {
                let r = g.scale(iv.lo);
                certify_leq(&r, t, 1.0)?
            },
        },
    ])
}

/// Certifies `T_f + T_h` against `[sum] g(X)` and, when every factor commutes,
/// `T_f T_h` against `[product] g(X)^2`, where `T_f = sum_j w_j Phi(f(A_j))`
/// and `X = sum_j w_j Phi(A_j)`. Chord and tangent lines come from the shared
/// member interval.
pub fn certify_combined(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    f: &ScalarFunction,
    h: &ScalarFunction,
    g: &ScalarFunction,
) -> Result<CombinedReport> {
    if !phi_is_normalized_positive_linear(phi) {
        return Err(Error::InvalidInput(
            "combined bounds need the linear map V^T X V".into(),
        ));
    }
    let iv = ens
        .common_interval()
        .ok_or_else(|| Error::InvalidInput("combined bounds need one shared [m, M]".into()))?;
    let f_interval = coeff_interval(&chord_tangent_auto(f, iv.lo, iv.hi)?, g, iv.lo, iv.hi)?;
    let h_interval = coeff_interval(&chord_tangent_auto(h, iv.lo, iv.hi)?, g, iv.lo, iv.hi)?;
    let sum_interval = interval_add(f_interval, h_interval);
    let product_interval = interval_mul(f_interval, h_interval)?;

    let tf = ensemble_lhs(ens, phi, f)?;
    let th = ensemble_lhs(ens, phi, h)?;
    let gx = apply_scalar_function(g, &ensemble_phi(ens, phi)?)?;
    let (gmin, _) = gx.spectral_bounds()?;
    if !(gmin > 0.0) {
        return Err(Error::NonPositiveG { min: gmin });
    }

    let add = bracket(&tf.add(&th), &gx, sum_interval)?;

    let scale = 1f64.max(tf.max_abs()).max(th.max_abs()).max(gx.max_abs());
    let commutator_norm = tf
        .commutator_norm(&th)
        .max(tf.commutator_norm(&gx))
        .max(th.commutator_norm(&gx));
    let (mul, mul_status) = if commutator_norm <= COMMUTE_TOL * scale * scale {
        let product = tf.sym_product(&th);
        (
            bracket(&product, &gx.sym_product(&gx), product_interval)?,
            ProductStatus::Certified,
        )
    } else {
        (Vec::new(), ProductStatus::SkippedNonCommuting { commutator_norm })
    };

    Ok(CombinedReport {
        f_interval,
        h_interval,
        sum_interval,
        product_interval,
        add,
        mul,
        mul_status,
    })
}
