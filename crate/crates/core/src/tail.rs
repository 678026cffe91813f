//! Monte Carlo tail probabilities of Ky Fan norms for random ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{coeff_interval, interval_add, interval_mul};
use crate::error::{Error, Result};
use crate::operator::{apply_scalar_function, random_orthogonal, with_spectrum, HermitianOperator};
use crate::scalar::{chord_tangent_auto, ScalarFunction};

const WILSON_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisMode {
    /// All members of a draw share one eigenbasis, so they commute.
    #[default]
    Shared,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TailMode {
    Add,
    Mul,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub n: usize,
    pub k: usize,
    pub weights: Vec<f64>,
    pub m: f64,
    #[serde(rename = "M")]
    pub big_m: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub basis: BasisMode,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.k == 0 || self.trials == 0 {
            return Err(Error::InvalidInput("n, k and trials must be at least 1".into()));
        }
        if self.weights.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: self.weights.len(),
            });
        }
        if self.weights.iter().any(|&w| !(w >= 0.0)) {
            return Err(Error::InvalidInput("weights must be nonnegative".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
        }
        if !(self.m < self.big_m) {
            return Err(Error::DegenerateInterval {
                m: self.m,
                big_m: self.big_m,
            });
        }
        Ok(())
    }

    /// Members of draw `trial`; the RNG is ChaCha8 at `seed` on stream `trial`.
    pub fn draw(&self, trial: u64, basis: BasisMode) -> Vec<HermitianOperator> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        let shared = match basis {
            BasisMode::Shared => Some(random_orthogonal(&mut rng, self.n)),
            BasisMode::Independent => None,
        };
        (0..self.k)
            .map(|_| {
                let values: Vec<f64> = (0..self.n)
                    .map(|_| rng.random_range(self.m..=self.big_m))
                    .collect();
                match &shared {
                    Some(q) => with_spectrum(q, &values),
                    None => with_spectrum(&random_orthogonal(&mut rng, self.n), &values),
                }
            })
            .collect()
    }

    fn weighted(&self, ops: impl Iterator<Item = HermitianOperator>) -> HermitianOperator {
        ops.zip(&self.weights)
            .map(|(a, &w)| a.scale(w))
            .reduce(|a, b| a.add(&b))
            .expect("k >= 1")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub theta: f64,
    pub p_lhs: f64,
    pub p_rhs: f64,
    pub ci_halfwidth: f64,
    pub dominated: bool,
}

/// A theta sweep over one set of draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailSweep {
    pub mode: TailMode,
    pub ell: usize,
    pub trials: usize,
    /// `alpha_f,U` and `alpha_h,U`.
    pub alpha_f: f64,
    pub alpha_h: f64,
    /// Draws where the left statistic exceeded the right one.
    pub per_draw_violations: usize,
    pub reports: Vec<TailReport>,
}

impl TailSweep {
    pub fn all_dominated(&self) -> bool {
        self.reports.iter().all(|r| r.dominated)
    }
}

/// Sum of the `ell` largest absolute eigenvalues.
pub fn ky_fan_norm(a: &HermitianOperator, ell: usize) -> Result<f64> {
    if ell == 0 || ell > a.dim() {
        return Err(Error::BadEll { ell, dim: a.dim() });
    }
    let mut abs: Vec<f64> = a.eigenvalues()?.into_iter().map(f64::abs).collect();
    abs.sort_by(|x, y| y.total_cmp(x));
    Ok(abs[..ell].iter().sum())
}

/// 95% Wilson score half-width for `p_hat` out of `n` trials.
pub fn wilson_halfwidth(p_hat: f64, n: usize) -> f64 {
    let n = n as f64;
    let z2 = WILSON_Z * WILSON_Z;
    WILSON_Z / (1.0 + z2 / n) * (p_hat * (1.0 - p_hat) / n + z2 / (4.0 * n * n)).sqrt()
}

struct DrawStats {
    lhs: f64,
    /// Compared against theta directly (add) or through `sqrt(theta / alpha)` (mul).
    rhs_norm: f64,
    dominated: bool,
}

/// Samples once and evaluates every theta in `thetas`.
///
/// Addition compares `||T_f + T_h||` with `||(alpha_f + alpha_h) g(X)||`;
/// multiplication compares `||T_f T_h||` with the event
/// `||g(X)|| >= sqrt(theta / (alpha_f alpha_h))` on commuting draws. Here
/// `T_f = sum_j w_j f(A_j)` and `X = sum_j w_j A_j`.
#[allow(clippy::too_many_arguments)]
pub fn tail_sweep(
    spec: &EnsembleSpec,
    f: &ScalarFunction,
    h: &ScalarFunction,
    g: &ScalarFunction,
    ell: usize,
    thetas: &[f64],
    mode: TailMode,
) -> Result<TailSweep> {
    spec.validate()?;
    if ell == 0 || ell > spec.n {
        return Err(Error::BadEll { ell, dim: spec.n });
    }
    let (m, big_m) = (spec.m, spec.big_m);
    let fi = coeff_interval(&chord_tangent_auto(f, m, big_m)?, g, m, big_m)?;
    let hi = coeff_interval(&chord_tangent_auto(h, m, big_m)?, g, m, big_m)?;
    let (basis, alpha) = match mode {
        TailMode::Add => (spec.basis, interval_add(fi, hi).hi),
        TailMode::Mul => {
            interval_mul(fi, hi)?;
            (BasisMode::Shared, fi.hi * hi.hi)
        }
    };

    let stats: Vec<DrawStats> = (0..spec.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<DrawStats> {
            let ops = spec.draw(t, basis);
            let tf = spec.weighted(
                ops.iter()
                    .map(|a| apply_scalar_function(f, a))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter(),
            );
            let th = spec.weighted(
                ops.iter()
                    .map(|a| apply_scalar_function(h, a))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter(),
            );
            let gx = apply_scalar_function(g, &spec.weighted(ops.into_iter()))?;
            let gnorm = ky_fan_norm(&gx, ell)?;
            let (lhs, rhs_norm, bound) = match mode {
                TailMode::Add => {
                    let rhs = ky_fan_norm(&gx.scale(alpha), ell)?;
                    (ky_fan_norm(&tf.add(&th), ell)?, rhs, rhs)
                }
                TailMode::Mul => (
                    ky_fan_norm(&tf.sym_product(&th), ell)?,
                    gnorm,
                    alpha * gnorm * gnorm,
                ),
            };
            let slack = 1e-9 * 1f64.max(bound);
            Ok(DrawStats {
                lhs,
                rhs_norm,
                dominated: lhs <= bound + slack,
            })
        })
        .collect::<Result<_>>()?;

    let trials = spec.trials;
    let reports = thetas
        .iter()
        .map(|&theta| {
            let rhs_hit = |s: &DrawStats| match mode {
                TailMode::Add => s.rhs_norm >= theta,
                TailMode::Mul => s.rhs_norm >= (theta / alpha).max(0.0).sqrt(),
            };
            let n_lhs = stats.iter().filter(|s| s.lhs >= theta).count();
            let n_rhs = stats.iter().filter(|s| rhs_hit(s)).count();
            let p_lhs = n_lhs as f64 / trials as f64;
            let p_rhs = n_rhs as f64 / trials as f64;
            let ci_halfwidth = wilson_halfwidth(p_lhs, trials);
            TailReport {
                theta,
                p_lhs,
                p_rhs,
                ci_halfwidth,
                dominated: p_lhs <= p_rhs + ci_halfwidth,
            }
        })
        .collect();

    Ok(TailSweep {
        mode,
        ell,
        trials,
        alpha_f: fi.hi,
        alpha_h: hi.hi,
        per_draw_violations: stats.iter().filter(|s| !s.dominated).count(),
        reports,
    })
}

pub fn tail_addition(
    spec: &EnsembleSpec,
    f: &ScalarFunction,
    h: &ScalarFunction,
    g: &ScalarFunction,
    ell: usize,
    theta: f64,
) -> Result<TailReport> {
    Ok(tail_sweep(spec, f, h, g, ell, &[theta], TailMode::Add)?.reports[0])
}

pub fn tail_multiplication(
    spec: &EnsembleSpec,
    f: &ScalarFunction,
    h: &ScalarFunction,
    g: &ScalarFunction,
    ell: usize,
    theta: f64,
) -> Result<TailReport> {
    Ok(tail_sweep(spec, f, h, g, ell, &[theta], TailMode::Mul)?.reports[0])
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn theta_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(trials: usize) -> EnsembleSpec {
        EnsembleSpec {
            n: 4,
            k: 2,
            weights: vec![0.5, 0.5],
            m: 1.0,
            big_m: 2.0,
            trials,
            seed: 7,
            basis: BasisMode::Shared,
        }
    }

    fn sq() -> ScalarFunction {
        ScalarFunction::Power(2.0)
    }

    #[test]
    fn ky_fan_examples() {
        assert_eq!(
            ky_fan_norm(&HermitianOperator::diag(&[3.0, 1.0, 2.0]), 2).unwrap(),
            5.0
        );
        assert_eq!(
            ky_fan_norm(&HermitianOperator::diag(&[3.0, -4.0, 2.0]), 1).unwrap(),
            4.0
        );
        assert_eq!(
            ky_fan_norm(&HermitianOperator::diag(&[-3.0, 1.0]), 2).unwrap(),
            4.0
        );
        assert!(matches!(
            ky_fan_norm(&HermitianOperator::identity(2), 3),
            Err(Error::BadEll { .. })
        ));
        assert!(ky_fan_norm(&HermitianOperator::identity(2), 0).is_err());
    }

    #[test]
    fn wilson_values() {
        // p = 0.5, n = 100
        assert!((wilson_halfwidth(0.5, 100) - 0.0962).abs() < 1e-3);
        assert!(wilson_halfwidth(0.0, 10_000) > 0.0);
    }

    #[test]
    fn extreme_thresholds() {
        let id = ScalarFunction::identity();
        for mode in [TailMode::Add, TailMode::Mul] {
            let s = tail_sweep(&spec(200), &sq(), &sq(), &id, 1, &[0.0, 1e7], mode).unwrap();
            assert_eq!((s.reports[0].p_lhs, s.reports[0].p_rhs), (1.0, 1.0));
            assert_eq!((s.reports[1].p_lhs, s.reports[1].p_rhs), (0.0, 0.0));
        }
    }

    #[test]
    fn squares_are_dominated() {
        let id = ScalarFunction::identity();
        let grid = theta_grid(1.0, 8.0, 20);
        let add = tail_sweep(&spec(500), &sq(), &sq(), &id, 1, &grid, TailMode::Add).unwrap();
        assert_eq!(add.per_draw_violations, 0);
        assert!(add.reports.iter().all(|r| r.p_lhs <= r.p_rhs));
        let mul = tail_sweep(&spec(500), &sq(), &sq(), &id, 1, &grid, TailMode::Mul).unwrap();
        assert_eq!((mul.alpha_f, mul.alpha_h), (2.0, 2.0));
        assert_eq!(mul.per_draw_violations, 0);
        assert!(mul.reports.iter().all(|r| r.p_lhs <= r.p_rhs));
    }

    #[test]
    fn identity_tautology() {
        let id = ScalarFunction::identity();
        let grid = theta_grid(1.0, 4.0, 7);
        let s = tail_sweep(&spec(300), &id, &id, &id, 1, &grid, TailMode::Mul).unwrap();
        for r in &s.reports {
            assert_eq!(r.p_lhs, r.p_rhs);
        }
    }

    #[test]
    fn reproducible() {
        let id = ScalarFunction::identity();
        let a = tail_addition(&spec(100), &sq(), &ScalarFunction::Exp, &id, 2, 5.0).unwrap();
        let b = tail_addition(&spec(100), &sq(), &ScalarFunction::Exp, &id, 2, 5.0).unwrap();
        assert_eq!(a, b);
        let mut ind = spec(100);
        ind.basis = BasisMode::Independent;
        assert!(tail_addition(&ind, &sq(), &sq(), &id, 1, 3.0).unwrap().dominated);
    }

    #[test]
    fn draws_respect_the_interval() {
        let s = spec(1);
        for basis in [BasisMode::Shared, BasisMode::Independent] {
            for a in s.draw(3, basis) {
                let (lo, hi) = a.spectral_bounds().unwrap();
                assert!(lo >= 1.0 - 1e-10 && hi <= 2.0 + 1e-10);
            }
        }
        let shared = s.draw(0, BasisMode::Shared);
        assert!(shared[0].commutator_norm(&shared[1]) < 1e-10);
    }

    #[test]
    fn grid() {
        assert_eq!(theta_grid(1.0, 3.0, 3), vec![1.0, 2.0, 3.0]);
        assert_eq!(theta_grid(1.0, 3.0, 1), vec![1.0]);
    }
}
