//! Converse bound engines over weighted operator ensembles.
//!
//! Every engine returns a [`BoundCertificate`] whose order certificate
//! compares `lhs` against `rhs`: `lhs <= rhs` for upper kinds and
//! `rhs <= lhs` for lower kinds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{
    apply_scalar_function, certify_leq, spectral_decompose, HermitianOperator, OrderCertificate,
};
use crate::phi::{phi_apply, phi_is_normalized_positive_linear, PhiMap};
use crate::sandwich::{build_sandwich, sandwich_range, Side};
use crate::scalar::{
    chord_tangent_auto, function_range, optimize_fn, Envelope, Interval, Mode, Optimum, ScalarFunction,
};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const DEFINITE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Member {
    #[serde(rename = "A")]
    pub a: HermitianOperator,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
}

impl Member {
    pub fn interval(&self) -> Interval {
        Interval {
            lo: self.m,
            hi: self.big_m,
        }
    }
}

/// Operators `A_j` with spectra in `[m_j, M_j]` and a probability vector `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEnsemble {
    members: Vec<Member>,
    weights: Vec<f64>,
}

impl WeightedEnsemble {
    pub fn new(members: Vec<Member>, weights: Vec<f64>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidInput("ensemble has no members".into()));
        }
        if weights.len() != members.len() {
            return Err(Error::DimensionMismatch {
                expected: members.len(),
                got: weights.len(),
            });
        }
        if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "weights {weights:?} must be nonnegative"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        let n = members[0].a.dim();
        for mem in &members {
            if mem.a.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: mem.a.dim(),
                });
            }
            if !(mem.m < mem.big_m) {
                return Err(Error::DegenerateInterval {
                    m: mem.m,
                    big_m: mem.big_m,
                });
            }
            let (lo, hi) = mem.a.spectral_bounds()?;
            let slack = 1e-10 * 1f64.max(mem.m.abs()).max(mem.big_m.abs());
            if lo < mem.m - slack || hi > mem.big_m + slack {
                return Err(Error::DomainViolation(format!(
                    "spectrum [{lo}, {hi}] is not inside [{}, {}]",
                    mem.m, mem.big_m
                )));
            }
        }
        Ok(Self { members, weights })
    }

    pub fn single(a: HermitianOperator, m: f64, big_m: f64) -> Result<Self> {
        Self::new(vec![Member { a, m, big_m }], vec![1.0])
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members[0].a.dim()
    }

    /// The shared `[m, M]` when every member carries the same interval.
    pub fn common_interval(&self) -> Option<Interval> {
        let first = self.members[0].interval();
        self.members
            .iter()
            .all(|mem| mem.interval() == first)
            .then_some(first)
    }

    fn weighted_sum(
        &self,
        mut term: impl FnMut(usize, &Member) -> Result<HermitianOperator>,
    ) -> Result<HermitianOperator> {
        let mut acc: Option<HermitianOperator> = None;
        for (j, (mem, &w)) in self.members.iter().zip(&self.weights).enumerate() {
            let t = term(j, mem)?.scale(w);
            acc = Some(match acc {
                Some(a) => a.add(&t),
                None => t,
            });
        }
        Ok(acc.expect("nonempty ensemble"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FFamily {
    /// `F(u, v) = u - alpha v`
    #[serde(rename = "difference")]
    Difference(f64),
    /// `F(u, v) = v^-1/2 u v^-1/2`
    #[serde(rename = "congruence")]
    CongruenceRatio,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "general_UB")]
    GeneralUb,
    #[serde(rename = "general_LB")]
    GeneralLb,
    #[serde(rename = "alpha_UB")]
    AlphaUb,
    #[serde(rename = "alpha_LB")]
    AlphaLb,
    #[serde(rename = "ratio_UB")]
    RatioUb,
    #[serde(rename = "ratio_LB")]
    RatioLb,
    #[serde(rename = "diff_UB")]
    DiffUb,
    #[serde(rename = "diff_LB")]
    DiffLb,
}

impl BoundKind {
    fn pick(side: Side, upper: Self, lower: Self) -> Self {
        match side {
            Side::Upper => upper,
            Side::Lower => lower,
        }
    }
}

/// Theorem form bounds against the sandwich operators; example form against
/// `g(sum_j w_j Phi(A_j))` with chord and tangent numerators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Theorem,
    Example,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GSign {
    #[serde(rename = "g_positive", alias = "positive")]
    Positive,
    #[serde(rename = "g_negative", alias = "negative")]
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorollaryG {
    #[serde(rename = "power")]
    Power(f64),
    #[serde(rename = "log")]
    Log,
    #[serde(rename = "exp")]
    Exp,
}

impl CorollaryG {
    pub fn function(&self) -> ScalarFunction {
        match *self {
            CorollaryG::Power(q) => ScalarFunction::Power(q),
            CorollaryG::Log => ScalarFunction::Log,
            CorollaryG::Exp => ScalarFunction::Exp,
        }
    }

    pub fn part(&self) -> &'static str {
        match self {
            CorollaryG::Power(_) => "I",
            CorollaryG::Log => "II",
            CorollaryG::Exp => "III",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCertificate {
    pub kind: BoundKind,
    pub form: Form,
    pub side: Side,
    pub scalar_constant: f64,
    pub x_star: f64,
    pub lhs: HermitianOperator,
    pub rhs: HermitianOperator,
    pub certificate: OrderCertificate,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl BoundCertificate {
    fn new(
        kind: BoundKind,
        form: Form,
        side: Side,
        opt: Optimum,
        lhs: HermitianOperator,
        rhs: HermitianOperator,
    ) -> Result<Self> {
        let certificate = match side {
            Side::Upper => certify_leq(&lhs, &rhs, 1.0)?,
            Side::Lower => certify_leq(&rhs, &lhs, 1.0)?,
        };
        Ok(Self {
            kind,
            form,
            side,
            scalar_constant: opt.value,
            x_star: opt.x,
            lhs,
            rhs,
            certificate,
            note: None,
        })
    }

    pub fn holds(&self) -> bool {
        self.certificate.holds
    }

    fn relabel(mut self, kind: BoundKind) -> Self {
        self.kind = kind;
        self
    }
}

fn mode_for(side: Side) -> Mode {
    match side {
        Side::Upper => Mode::Max,
        Side::Lower => Mode::Min,
    }
}

fn check_envelopes(ens: &WeightedEnsemble, envs: &[Envelope]) -> Result<()> {
    if envs.len() != ens.len() {
        return Err(Error::DimensionMismatch {
            expected: ens.len(),
            got: envs.len(),
        });
    }
    if envs.iter().any(|e| e.f != envs[0].f) {
        return Err(Error::InvalidInput("envelopes must share one function f".into()));
    }
    Ok(())
}

/// `sum_j w_j Phi(f(A_j))`
pub fn ensemble_lhs(ens: &WeightedEnsemble, phi: &PhiMap, f: &ScalarFunction) -> Result<HermitianOperator> {
    ens.weighted_sum(|_, mem| phi_apply(phi, &apply_scalar_function(f, &mem.a)?))
}

/// `sum_j w_j Phi(A_j)`
pub fn ensemble_phi(ens: &WeightedEnsemble, phi: &PhiMap) -> Result<HermitianOperator> {
    ens.weighted_sum(|_, mem| phi_apply(phi, &mem.a))
}

/// Weighted sum of member sandwich operators and the weighted Minkowski sum
/// of their scalar ranges, which contains the spectrum of that sum.
pub fn ensemble_sandwich(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    envs: &[Envelope],
    side: Side,
) -> Result<(HermitianOperator, Interval)> {
    check_envelopes(ens, envs)?;
    let (mut lo, mut hi) = (0.0, 0.0);
    let op = ens.weighted_sum(|j, mem| {
        let env = &envs[j];
        let r = sandwich_range(phi, env, env.m(), env.big_m(), side)?.hull();
        let w = ens.weights[j];
        lo += w * r.lo;
        hi += w * r.hi;
        Ok(build_sandwich(phi, env, &mem.a)?.op(side).clone())
    })?;
    Ok((op, Interval { lo, hi: hi.max(lo) }))
}

/// `g(S)^-1/2` for `g > 0` on the spectrum of `S`.
fn g_inv_sqrt(g: &ScalarFunction, s: &HermitianOperator) -> Result<HermitianOperator> {
    let spec = spectral_decompose(s)?;
    let gmin = spec
        .values
        .iter()
        .map(|&x| g.eval(x))
        .fold(f64::INFINITY, f64::min);
    if !(gmin > 0.0) {
        return Err(Error::NonPositiveG { min: gmin });
    }
    Ok(spec.rebuild(|x| 1.0 / g.eval(x).sqrt()))
}

/// `F(LHS, g(S)) <= max F(x, g(x))` (upper, `S = S_U`) or `>= min` (lower,
/// `S = S_L`), optimized over the weighted sandwich range.
pub fn general_bound(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    envs: &[Envelope],
    g: &ScalarFunction,
    family: FFamily,
    side: Side,
) -> Result<BoundCertificate> {
    check_envelopes(ens, envs)?;
    let lhs = ensemble_lhs(ens, phi, &envs[0].f)?;
    let (s, range) = ensemble_sandwich(ens, phi, envs, side)?;
    g.check_interval(range.lo, range.hi)?;
    let mode = mode_for(side);
    let (expr, opt) = match family {
        FFamily::Difference(alpha) => {
            let gs = apply_scalar_function(g, &s)?;
            let opt = optimize_fn(|x| x - alpha * g.eval(x), &[range], mode)?;
            (lhs.sub(&gs.scale(alpha)), opt)
        }
        FFamily::CongruenceRatio => {
            let gr = function_range(g, range.lo, range.hi)?;
            if !(gr.lo > 0.0) {
                return Err(Error::NonPositiveG { min: gr.lo });
            }
            let k = g_inv_sqrt(g, &s)?;
            let opt = optimize_fn(|x| x / g.eval(x), &[range], mode)?;
            (
                HermitianOperator::symmetrized(k.matrix() * lhs.matrix() * k.matrix()),
                opt,
            )
        }
    };
    let bound = HermitianOperator::scalar(expr.dim(), opt.value);
    let kind = BoundKind::pick(side, BoundKind::GeneralUb, BoundKind::GeneralLb);
    BoundCertificate::new(kind, Form::Theorem, side, opt, expr, bound)
}

/// [`general_bound`] with `F(u, v) = u - alpha v`.
pub fn alpha_bound(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    envs: &[Envelope],
    g: &ScalarFunction,
    alpha: f64,
    side: Side,
) -> Result<BoundCertificate> {
    let cert = general_bound(ens, phi, envs, g, FFamily::Difference(alpha), side)?;
    Ok(cert.relabel(BoundKind::pick(side, BoundKind::AlphaUb, BoundKind::AlphaLb)))
}

/// [`alpha_bound`] for `g` a power, log or exp, after the sign gate on the
/// sandwich range: powers need it nonnegative, log strictly positive.
pub fn corollary_g_bounds(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    envs: &[Envelope],
    gtag: CorollaryG,
    alpha: f64,
    side: Side,
) -> Result<BoundCertificate> {
    let (_, range) = ensemble_sandwich(ens, phi, envs, side)?;
    match gtag {
        CorollaryG::Power(q) if range.lo < 0.0 => {
            return Err(Error::RangeSignViolation(format!(
                "power {q} needs a nonnegative range, got [{}, {}]",
                range.lo, range.hi
            )))
        }
        CorollaryG::Log if range.lo <= 0.0 => {
            return Err(Error::RangeSignViolation(format!(
                "log needs a positive range, got [{}, {}]",
                range.lo, range.hi
            )))
        }
        _ => {}
    }
    let mut cert = alpha_bound(ens, phi, envs, &gtag.function(), alpha, side)?;
    cert.note = Some(format!("corollary part {}", gtag.part()));
    Ok(cert)
}

/// Range of `g` over `iv`, failing unless it has the declared strict sign.
pub fn check_g_sign(g: &ScalarFunction, iv: Interval, sign: GSign) -> Result<Interval> {
    let r = function_range(g, iv.lo, iv.hi)?;
    let ok = match sign {
        GSign::Positive => r.lo > 0.0,
        GSign::Negative => r.hi < 0.0,
    };
    if !ok {
        return Err(Error::SignViolation(format!(
            "{g} has range [{}, {}] on [{}, {}], expected {}",
            r.lo,
            r.hi,
            iv.lo,
            iv.hi,
            match sign {
                GSign::Positive => "positive",
                GSign::Negative => "negative",
            }
        )));
    }
    Ok(r)
}

/// Ratio constant `num(x) / g(x)` optimized over `iv`. For positive `g` the
/// upper side takes the max and the lower side the min; negative `g` swaps
/// the two.
pub fn ratio_constant(
    num: &ScalarFunction,
    g: &ScalarFunction,
    iv: Interval,
    sign: GSign,
    side: Side,
) -> Result<Optimum> {
    num.check_interval(iv.lo, iv.hi)?;
    check_g_sign(g, iv, sign)?;
    let mode = match (sign, side) {
        (GSign::Positive, Side::Upper) | (GSign::Negative, Side::Lower) => Mode::Max,
        _ => Mode::Min,
    };
    optimize_fn(|x| num.eval(x) / g.eval(x), &[iv], mode)
}

/// Difference constant `num(x) - g(x)`, max or min over `iv`.
pub fn difference_constant(
    num: &ScalarFunction,
    g: &ScalarFunction,
    iv: Interval,
    mode: Mode,
) -> Result<Optimum> {
    num.check_interval(iv.lo, iv.hi)?;
    g.check_interval(iv.lo, iv.hi)?;
    optimize_fn(|x| num.eval(x) - g.eval(x), &[iv], mode)
}

fn check_definite(gs: &HermitianOperator, sign: GSign) -> Result<()> {
    let (lo, hi) = gs.spectral_bounds()?;
    let ok = match sign {
        GSign::Positive => lo > DEFINITE_TOL,
        GSign::Negative => hi < -DEFINITE_TOL,
    };
    if !ok {
        return Err(Error::SignViolation(format!(
            "g(S) has spectrum [{lo}, {hi}], not definite of the declared sign"
        )));
    }
    Ok(())
}

/// Ratio bounds `LHS <= alpha_1 g(S_U)` and `LHS >= alpha_2 g(S_L)` with the
/// constants taken over the weighted sandwich ranges.
pub fn ratio_certify(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    envs: &[Envelope],
    g: &ScalarFunction,
    sign: GSign,
) -> Result<(BoundCertificate, BoundCertificate)> {
    check_envelopes(ens, envs)?;
    let lhs = ensemble_lhs(ens, phi, &envs[0].f)?;
    let one = |side: Side| -> Result<BoundCertificate> {
        let (s, range) = ensemble_sandwich(ens, phi, envs, side)?;
        let opt = ratio_constant(&ScalarFunction::identity(), g, range, sign, side)?;
        let gs = apply_scalar_function(g, &s)?;
        check_definite(&gs, sign)?;
        let kind = BoundKind::pick(side, BoundKind::RatioUb, BoundKind::RatioLb);
        BoundCertificate::new(kind, Form::Theorem, side, opt, lhs.clone(), gs.scale(opt.value))
    };
    Ok((one(Side::Upper)?, one(Side::Lower)?))
}

/// Common `[m, M]` and the chord/tangent lines of `f` on it, for the example
/// forms. These need `Phi(X) = V^T X V` so that affine bounds pass through.
fn example_setup(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    f: &ScalarFunction,
) -> Result<(Interval, ScalarFunction, ScalarFunction)> {
    if !phi_is_normalized_positive_linear(phi) {
        return Err(Error::InvalidInput(
            "example-form bounds need the linear map V^T X V".into(),
        ));
    }
    let iv = ens
        .common_interval()
        .ok_or_else(|| Error::InvalidInput("example-form bounds need one shared [m, M]".into()))?;
    let lb = chord_tangent_auto(f, iv.lo, iv.hi)?;
    let chord = ScalarFunction::Affine { a: lb.a, b: lb.b };
    let tangent = ScalarFunction::Affine {
        a: lb.a,
        b: lb.b_prime,
    };
    Ok((iv, chord, tangent))
}

/// `LHS <= max (a x + b)/g(x) * g(X)` and `LHS >= min (a x + b')/g(x) * g(X)`
/// with `X = sum_j w_j Phi(A_j)`.
pub fn ratio_certify_example(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    f: &ScalarFunction,
    g: &ScalarFunction,
    sign: GSign,
) -> Result<(BoundCertificate, BoundCertificate)> {
    let (iv, chord, tangent) = example_setup(ens, phi, f)?;
    let lhs = ensemble_lhs(ens, phi, f)?;
    let gx = apply_scalar_function(g, &ensemble_phi(ens, phi)?)?;
    check_definite(&gx, sign)?;
    let up = ratio_constant(&chord, g, iv, sign, Side::Upper)?;
    let lo = ratio_constant(&tangent, g, iv, sign, Side::Lower)?;
    Ok((
        BoundCertificate::new(
            BoundKind::RatioUb,
            Form::Example,
            Side::Upper,
            up,
            lhs.clone(),
            gx.scale(up.value),
        )?,
        BoundCertificate::new(
            BoundKind::RatioLb,
            Form::Example,
            Side::Lower,
            lo,
            lhs,
            gx.scale(lo.value),
        )?,
    ))
}

/// `LHS - g(S_U) <= max (x - g(x))` and `LHS - g(S_L) >= min (x - g(x))`
/// over the weighted sandwich ranges.
pub fn difference_certify(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    envs: &[Envelope],
    g: &ScalarFunction,
) -> Result<(BoundCertificate, BoundCertificate)> {
    check_envelopes(ens, envs)?;
    let lhs = ensemble_lhs(ens, phi, &envs[0].f)?;
    let one = |side: Side| -> Result<BoundCertificate> {
        let (s, range) = ensemble_sandwich(ens, phi, envs, side)?;
        let opt = difference_constant(&ScalarFunction::identity(), g, range, mode_for(side))?;
        let expr = lhs.sub(&apply_scalar_function(g, &s)?);
        let bound = HermitianOperator::scalar(expr.dim(), opt.value);
        let kind = BoundKind::pick(side, BoundKind::DiffUb, BoundKind::DiffLb);
        BoundCertificate::new(kind, Form::Theorem, side, opt, expr, bound)
    };
    Ok((one(Side::Upper)?, one(Side::Lower)?))
}

/// `LHS - g(X)` between `min (a x + b' - g(x))` and `max (a x + b - g(x))`
/// with `X = sum_j w_j Phi(A_j)`.
pub fn difference_certify_example(
    ens: &WeightedEnsemble,
    phi: &PhiMap,
    f: &ScalarFunction,
    g: &ScalarFunction,
) -> Result<(BoundCertificate, BoundCertificate)> {
    let (iv, chord, tangent) = example_setup(ens, phi, f)?;
    let expr = ensemble_lhs(ens, phi, f)?.sub(&apply_scalar_function(g, &ensemble_phi(ens, phi)?)?);
    let up = difference_constant(&chord, g, iv, Mode::Max)?;
    let lo = difference_constant(&tangent, g, iv, Mode::Min)?;
    let n = expr.dim();
    Ok((
        BoundCertificate::new(
            BoundKind::DiffUb,
            Form::Example,
            Side::Upper,
            up,
            expr.clone(),
            HermitianOperator::scalar(n, up.value),
        )?,
        BoundCertificate::new(
            BoundKind::DiffLb,
            Form::Example,
            Side::Lower,
            lo,
            expr,
            HermitianOperator::scalar(n, lo.value),
        )?,
    ))
}
