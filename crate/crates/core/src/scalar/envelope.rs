use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::function::ScalarFunction;
use super::linear::LinearBound;
use super::optimize::{optimize_fn, Interval, Mode, DEGENERATE_WIDTH};
use super::polynomial::Polynomial;
use crate::error::{Error, Result};

/// Uniform shift factor over the measured interpolation error.
pub const MARGIN: f64 = 1.05;
const VALIDATION_GRID: usize = 2049;

/// Polynomials `lower <= f <= upper` on `[m, M]` with both gaps at most `eps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub f: ScalarFunction,
    pub interval: Interval,
    pub lower: Polynomial,
    pub upper: Polynomial,
    pub eps: f64,
}

impl Envelope {
    /// Builds an envelope after checking the sandwich on a dense grid.
    pub fn new(
        f: ScalarFunction,
        interval: Interval,
        lower: Polynomial,
        upper: Polynomial,
        eps: f64,
    ) -> Result<Self> {
        let env = Self::new_unchecked(f, interval, lower, upper, eps);
        env.validate()?;
        Ok(env)
    }

    /// No validation. Used to inject inadmissible envelopes as negative controls.
    pub fn new_unchecked(
        f: ScalarFunction,
        interval: Interval,
        lower: Polynomial,
        upper: Polynomial,
        eps: f64,
    ) -> Self {
        Self {
            f,
            interval,
            lower,
            upper,
            eps,
        }
    }

    /// Chord above, tangent below; `eps = b - b'`.
    pub fn from_linear_bound(f: ScalarFunction, m: f64, big_m: f64, lb: &LinearBound) -> Result<Self> {
        Self::new(
            f,
            Interval::new(m, big_m)?,
            lb.tangent(),
            lb.chord(),
            lb.b - lb.b_prime,
        )
    }

    pub fn m(&self) -> f64 {
        self.interval.lo
    }

    pub fn big_m(&self) -> f64 {
        self.interval.hi
    }

    /// Worst violations `(sandwich, eps)` on a uniform grid of `n` points.
    ///
    /// The first entry is `max(lower - f, f - upper)` (must be <= 0), the
    /// second `max(upper - f, f - lower) - eps` (must be <= 0).
    pub fn violations_on(&self, xs: impl IntoIterator<Item = f64>) -> (f64, f64) {
        let mut sandwich = f64::NEG_INFINITY;
        let mut width = f64::NEG_INFINITY;
        for x in xs {
            let fx = self.f.eval(x);
            let up = self.upper.eval(x) - fx;
            let lo = fx - self.lower.eval(x);
            sandwich = sandwich.max(-up).max(-lo);
            width = width.max(up - self.eps).max(lo - self.eps);
        }
        (sandwich, width)
    }

    pub fn validate(&self) -> Result<()> {
        self.f.check_interval(self.m(), self.big_m())?;
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidInput(format!("eps = {} is negative", self.eps)));
        }
        let (m, big_m) = (self.m(), self.big_m());
        let n = VALIDATION_GRID;
        let xs = (0..n).map(|i| m + (big_m - m) * i as f64 / (n - 1) as f64);
        let (sandwich, width) = self.violations_on(xs);
        let scale = 1.0 + self.f.eval(m).abs().max(self.f.eval(big_m).abs());
        let slack = 1e-12 * scale;
        if sandwich > slack {
            return Err(Error::InvalidInput(format!(
                "envelope does not sandwich {} on [{m}, {big_m}] (violation {sandwich:e})",
                self.f
            )));
        }
        if width > slack {
            return Err(Error::InvalidInput(format!(
                "envelope gap exceeds eps = {} by {width:e}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// Chebyshev interpolant of `f` with `degree + 1` nodes on `[m, M]`, in the monomial basis of x.
pub fn chebyshev_interpolant(f: &ScalarFunction, m: f64, big_m: f64, degree: usize) -> Polynomial {
    let n = degree + 1;
    let mid = 0.5 * (m + big_m);
    let half = 0.5 * (big_m - m);
    let nodes: Vec<f64> = (0..n).map(|k| (PI * (k as f64 + 0.5) / n as f64).cos()).collect();
    let values: Vec<f64> = nodes.iter().map(|&t| f.eval(mid + half * t)).collect();

    // Chebyshev coefficients by discrete orthogonality
    let cheb: Vec<f64> = (0..n)
        .map(|j| {
            let s: f64 = (0..n)
                .map(|k| values[k] * (PI * j as f64 * (k as f64 + 0.5) / n as f64).cos())
                .sum();
            let c = 2.0 * s / n as f64;
            if j == 0 {
                0.5 * c
            } else {
                c
            }
        })
        .collect();

    // sum c_j T_j(t) in monomials of t
    let t = Polynomial::monomial(1, 1.0);
    let mut t_prev = Polynomial::constant(1.0);
    let mut t_curr = t.clone();
    let mut in_t = t_prev.scale(cheb[0]);
    for (j, &c) in cheb.iter().enumerate().skip(1) {
        if j > 1 {
            let next = &(&t * &t_curr).scale(2.0) - &t_prev;
            t_prev = std::mem::replace(&mut t_curr, next);
        }
        in_t = &in_t + &t_curr.scale(c);
    }

    // t = (x - mid) / half
    in_t.compose(&Polynomial::linear(-mid / half, 1.0 / half))
}

/// Sup of `|f - p|` on `[m, M]`, grid scan plus golden refinement.
pub fn sup_error(f: &ScalarFunction, p: &Polynomial, m: f64, big_m: f64) -> Result<f64> {
    let iv = [Interval::new(m, big_m)?];
    let above = optimize_fn(|x| f.eval(x) - p.eval(x), &iv, Mode::Max)?;
    let below = optimize_fn(|x| p.eval(x) - f.eval(x), &iv, Mode::Max)?;
    Ok(above.value.max(below.value).max(0.0))
}

/// Envelope from a Chebyshev interpolant shifted up and down by `MARGIN` times
/// its measured sup error; `eps = 2 * MARGIN * error`.
pub fn build_envelope(
    f: &ScalarFunction,
    m: f64,
    big_m: f64,
    degree: usize,
    target_eps: f64,
) -> Result<Envelope> {
    if !(big_m - m >= DEGENERATE_WIDTH) {
        return Err(Error::DegenerateInterval { m, big_m });
    }
    f.check_interval(m, big_m)?;
    let p = chebyshev_interpolant(f, m, big_m, degree);
    let err = sup_error(f, &p, m, big_m)?;
    let shift = MARGIN * err;
    let eps = 2.0 * shift;
    if eps > target_eps {
        return Err(Error::EpsNotAchievable {
            achieved: eps,
            target: target_eps,
        });
    }
    Ok(Envelope::new_unchecked(
        f.clone(),
        Interval::new(m, big_m)?,
        &p - &Polynomial::constant(shift),
        &p + &Polynomial::constant(shift),
        eps,
    ))
}
