//! The Kantorovich function
//!
//! ```text
//! K(m, M, r) = (m M^r - M m^r) / ((r - 1)(M - m))
//!              * [ (r - 1)(M^r - m^r) / (r (m M^r - M m^r)) ]^r
//! ```
//!
//! for `0 < m < M`. The exponents `r = 0` and `r = 1` and the degenerate
//! interval `M = m` take the limit value 1.

use crate::error::{Error, Result};
use crate::scalar::{optimize_fn, Interval, Mode};

const EXPONENT_BAND: f64 = 1e-12;

fn degenerate(m: f64, big_m: f64) -> bool {
    (big_m - m).abs() < 1e-12 * big_m.abs().max(1.0)
}

fn check_args(m: f64, big_m: f64, r: f64) -> Result<()> {
    if !(m.is_finite() && big_m.is_finite() && r.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite Kantorovich argument ({m}, {big_m}, {r})"
        )));
    }
    if m <= 0.0 {
        return Err(Error::NonPositiveSpectrum {
            what: "Kantorovich lower endpoint".into(),
            min: m,
        });
    }
    if big_m < m && !degenerate(m, big_m) {
        return Err(Error::InvalidInput(format!("M = {big_m} < m = {m}")));
    }
    Ok(())
}

/// `K(m, M, r)`.
pub fn kantorovich(m: f64, big_m: f64, r: f64) -> Result<f64> {
    check_args(m, big_m, r)?;
    if degenerate(m, big_m) || r.abs() < EXPONENT_BAND || (r - 1.0).abs() < EXPONENT_BAND {
        return Ok(1.0);
    }
    let (mr, big_mr) = (m.powf(r), big_m.powf(r));
    let cross = m * big_mr - big_m * mr;
    if cross == 0.0 || !cross.is_finite() {
        return Err(Error::KantorovichDegenerate { m, big_m, r });
    }
    let lead = cross / ((r - 1.0) * (big_m - m));
    let bracket = (r - 1.0) * (big_mr - mr) / (r * cross);
    let k = lead * bracket.powf(r);
    debug_assert!(k > 0.0, "K({m}, {big_m}, {r}) = {k}");
    Ok(k)
}

/// Independent route to `K(m, M, r)`: the interior extremum over `[m, M]` of
/// `chord(x) / x^r`, where `chord` is the secant of `x^r`.
///
/// The extremum is a maximum when `x^r` is convex (`r < 0` or `r > 1`) and a
/// minimum when it is concave (`0 < r < 1`).
pub fn kantorovich_oracle(m: f64, big_m: f64, r: f64) -> Result<f64> {
    check_args(m, big_m, r)?;
    if r == 0.0 || r == 1.0 {
        return Err(Error::InvalidInput(format!("oracle is undefined for r = {r}")));
    }
    let (mr, big_mr) = (m.powf(r), big_m.powf(r));
    let slope = (big_mr - mr) / (big_m - m);
    let intercept = (big_m * mr - m * big_mr) / (big_m - m);
    let mode = if r > 0.0 && r < 1.0 { Mode::Min } else { Mode::Max };
    let opt = optimize_fn(
        |x| (slope * x + intercept) / x.powf(r),
        &[Interval::new(m, big_m)?],
        mode,
    )?;
    Ok(opt.value)
}

/// Per-power weights `K(lo, hi, i)` for `i = 0..=degree`.
pub fn kantorovich_weights(lo: f64, hi: f64, degree: usize) -> Result<Vec<f64>> {
    (0..=degree).map(|i| kantorovich(lo, hi, i as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        assert!((kantorovich(1.0, 2.0, 2.0).unwrap() - 1.125).abs() < 1e-12);
        assert!((kantorovich(1.0, 2.0, -1.0).unwrap() - 1.125).abs() < 1e-12);
        assert!((kantorovich(1.0, 4.0, 2.0).unwrap() - 1.5625).abs() < 1e-12);
        assert!((kantorovich(2.0, 3.0, 2.0).unwrap() - 25.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn limit_exponents_and_degenerate_interval() {
        assert_eq!(kantorovich(0.3, 7.0, 0.0).unwrap(), 1.0);
        assert_eq!(kantorovich(0.3, 7.0, 1.0).unwrap(), 1.0);
        assert_eq!(kantorovich(2.0, 2.0, 5.0).unwrap(), 1.0);
        for r in [1.0 - 1e-6, 1.0 + 1e-6, 1e-6, -1e-6] {
            assert!((kantorovich(0.5, 3.0, r).unwrap() - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn rejects_non_positive_spectrum() {
        assert!(matches!(
            kantorovich(0.0, 2.0, 2.0),
            Err(Error::NonPositiveSpectrum { .. })
        ));
        assert!(kantorovich(3.0, 2.0, 2.0).is_err());
    }

    #[test]
    fn oracle_agrees() {
        assert!((kantorovich_oracle(1.0, 2.0, 2.0).unwrap() - 1.125).abs() < 1e-10);
        assert!((kantorovich_oracle(1.0, 2.0, -1.0).unwrap() - 1.125).abs() < 1e-10);
        assert!((kantorovich_oracle(2.0, 3.0, 2.0).unwrap() - 25.0 / 24.0).abs() < 1e-10);
        let k = kantorovich(1.0, 4.0, 0.5).unwrap();
        assert!((kantorovich_oracle(1.0, 4.0, 0.5).unwrap() - k).abs() < 1e-10);
    }

    #[test]
    fn concave_exponent_is_a_minimum_not_a_maximum() {
        // for 0 < r < 1 the chord ratio peaks at 1 on the endpoints
        let k = kantorovich(1.0, 4.0, 0.5).unwrap();
        assert!(k < 1.0);
        let literal_max = optimize_fn(
            |x| (x + 2.0) / (3.0 * x.sqrt()),
            &[Interval::new(1.0, 4.0).unwrap()],
            Mode::Max,
        )
        .unwrap()
        .value;
        assert!((literal_max - 1.0).abs() < 1e-12);
        assert!((literal_max - k).abs() > 0.05);
    }

    #[test]
    fn integer_weights_at_least_one() {
        let w = kantorovich_weights(0.7, 3.1, 6).unwrap();
        assert_eq!(w[0], 1.0);
        assert_eq!(w[1], 1.0);
        assert!(w.iter().skip(2).all(|&k| k >= 1.0));
    }
}
