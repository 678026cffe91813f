use serde::{Deserialize, Serialize};

use super::function::ScalarFunction;
use super::optimize::DEGENERATE_WIDTH;
use super::polynomial::Polynomial;
use crate::error::{Error, Result};

pub const MAX_COMPOSE_DEGREE: usize = 30;
const BISECTION_TOL: f64 = 1e-12;

/// Chord `a x + b` above and parallel tangent `a x + b'` below a convex `f` on `[m, M]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearBound {
    pub a: f64,
    pub b: f64,
    pub b_prime: f64,
    pub x0: f64,
}

impl LinearBound {
    pub fn chord(&self) -> Polynomial {
        Polynomial::linear(self.b, self.a)
    }

    pub fn tangent(&self) -> Polynomial {
        Polynomial::linear(self.b_prime, self.a)
    }

    /// Largest violation of `a x + b' <= f(x) <= a x + b` on an `n`-point grid.
    pub fn max_violation(&self, f: &ScalarFunction, m: f64, big_m: f64, n: usize) -> f64 {
        (0..n)
            .map(|i| {
                let x = m + (big_m - m) * i as f64 / (n - 1).max(1) as f64;
                let fx = f.eval(x);
                let above = fx - (self.a * x + self.b);
                let below = (self.a * x + self.b_prime) - fx;
                above.max(below)
            })
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Chord and tangent lines of a convex differentiable `f` on `[m, M]`.
///
/// The tangent point solves `f'(x0) = a` by bisection, which relies on `f'`
/// being nondecreasing.
pub fn chord_tangent(f: &ScalarFunction, fprime: &ScalarFunction, m: f64, big_m: f64) -> Result<LinearBound> {
    if !(big_m - m >= DEGENERATE_WIDTH) {
        return Err(Error::DegenerateInterval { m, big_m });
    }
    f.check_interval(m, big_m)?;
    fprime.check_interval(m, big_m)?;
    let (fm, f_big_m) = (f.eval(m), f.eval(big_m));
    let a = (f_big_m - fm) / (big_m - m);
    let b = (big_m * fm - m * f_big_m) / (big_m - m);

    let (dm, d_big_m) = (fprime.eval(m), fprime.eval(big_m));
    let tol = 1e-12 * (1.0 + a.abs());
    if dm > a + tol || d_big_m < a - tol {
        return Err(Error::NoTangentPoint {
            fprime_m: dm,
            fprime_big_m: d_big_m,
            slope: a,
        });
    }
    if (d_big_m - dm).abs() <= tol {
        // f is affine on [m, M]; the line is its own envelope
        return Ok(LinearBound {
            a,
            b,
            b_prime: b,
            x0: 0.5 * (m + big_m),
        });
    }

    let (mut lo, mut hi) = (m, big_m);
    while hi - lo > BISECTION_TOL * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if fprime.eval(mid) < a {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x0 = 0.5 * (lo + hi);
    Ok(LinearBound {
        a,
        b,
        b_prime: f.eval(x0) - a * x0,
        x0,
    })
}

/// Same as [`chord_tangent`] with the registry derivative of `f`.
pub fn chord_tangent_auto(f: &ScalarFunction, m: f64, big_m: f64) -> Result<LinearBound> {
    chord_tangent(f, &f.derivative(), m, big_m)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Monomial coefficients of `sum_i a_i K_i (alpha0 + alpha1 x)^i`.
///
/// `c_i = sum_j C(i+j, i) a_{i+j} K_{i+j} alpha1^i alpha0^j`.
pub fn affine_compose_coefficients(
    a: &[f64],
    alpha0: f64,
    alpha1: f64,
    kanto_weights: &[f64],
) -> Result<Polynomial> {
    if a.is_empty() {
        return Ok(Polynomial::zero());
    }
    let degree = a.len() - 1;
    if degree > MAX_COMPOSE_DEGREE {
        return Err(Error::InvalidInput(format!(
            "degree {degree} exceeds {MAX_COMPOSE_DEGREE}"
        )));
    }
    if kanto_weights.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: kanto_weights.len(),
        });
    }
    let coeffs: Vec<f64> = (0..=degree)
        .map(|i| {
            (0..=degree - i)
                .filter(|&j| a[i + j] != 0.0)
                .map(|j| {
                    binomial(i + j, i)
                        * a[i + j]
                        * kanto_weights[i + j]
                        * alpha1.powi(i as i32)
                        * alpha0.powi(j as i32)
                })
                .sum()
        })
        .collect();
    Ok(Polynomial::new(coeffs))
}
