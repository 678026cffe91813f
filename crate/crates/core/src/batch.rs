//! Seeded random instances for certification batches.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::converse::{Member, WeightedEnsemble};
use crate::error::{Error, Result};
use crate::operator::{random_hermitian, random_isometry};
use crate::phi::PhiMap;
use crate::sandwich::build_sandwich;
use crate::scalar::{build_envelope, chord_tangent_auto, Envelope, ScalarFunction};

const MAX_ATTEMPTS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceConfig {
    pub min_dim: usize,
    pub max_dim: usize,
    pub max_members: usize,
    pub max_phi_degree: usize,
    /// Allow rectangular isometries.
    pub compress: bool,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        Self {
            min_dim: 2,
            max_dim: 8,
            max_members: 4,
            max_phi_degree: 3,
            compress: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub seed: u64,
    pub ens: WeightedEnsemble,
    pub phi: PhiMap,
    pub f: ScalarFunction,
    /// One envelope of `f` per member, on the member's interval.
    pub envs: Vec<Envelope>,
}

/// `f` from {x^2, exp, x^4, log} with a matching envelope on `[m, M]`.
fn sample_function(rng: &mut ChaCha8Rng) -> (ScalarFunction, f64) {
    let choices = [
        (ScalarFunction::Power(2.0), 0.5),
        (ScalarFunction::Exp, 0.2),
        (ScalarFunction::Power(4.0), 0.5),
        (ScalarFunction::Log, 1.5),
    ];
    choices.choose(rng).cloned().expect("nonempty")
}

fn sample_envelope(rng: &mut ChaCha8Rng, f: &ScalarFunction, m: f64, big_m: f64) -> Result<Envelope> {
    let chord = matches!(f, ScalarFunction::Power(_) | ScalarFunction::Exp) && rng.random_bool(0.3);
    if chord {
        let lb = chord_tangent_auto(f, m, big_m)?;
        return Envelope::from_linear_bound(f.clone(), m, big_m, &lb);
    }
    let degree = match f {
        ScalarFunction::Power(q) if *q == 4.0 => rng.random_range(2..=4),
        ScalarFunction::Power(_) => 2,
        _ => rng.random_range(1..=3),
    };
    build_envelope(f, m, big_m, degree, f64::INFINITY)
}

fn sample_phi(rng: &mut ChaCha8Rng, n: usize, cfg: &InstanceConfig) -> Result<PhiMap> {
    let degree = rng.random_range(1..=cfg.max_phi_degree.max(1));
    let mut coeffs: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..=1.0)).collect();
    if coeffs[degree].abs() < 0.1 {
        coeffs[degree] = 0.5;
    }
    let cols = if cfg.compress { rng.random_range(1..=n) } else { n };
    PhiMap::new(random_isometry(n, cols, rng.random())?, coeffs)
}

fn try_sample(rng: &mut ChaCha8Rng, seed: u64, cfg: &InstanceConfig) -> Result<Instance> {
    let n = rng.random_range(cfg.min_dim..=cfg.max_dim);
    let k = rng.random_range(1..=cfg.max_members.max(1));
    let (f, m_floor) = sample_function(rng);
    let phi = sample_phi(rng, n, cfg)?;

    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let rest: f64 = weights[1..].iter().sum();
    weights[0] = 1.0 - rest;

    let mut members = Vec::with_capacity(k);
    let mut envs = Vec::with_capacity(k);
    for _ in 0..k {
        let m = rng.random_range(m_floor..m_floor + 1.5);
        let big_m = m + rng.random_range(0.1..1.5);
        let env = sample_envelope(rng, &f, m, big_m)?;
        let a = random_hermitian(n, m, big_m, rng.random())?;
        build_sandwich(&phi, &env, &a)?;
        members.push(Member { a, m, big_m });
        envs.push(env);
    }
    Ok(Instance {
        seed,
        ens: WeightedEnsemble::new(members, weights)?,
        phi,
        f,
        envs,
    })
}

/// First instance in the seed's stream passing the sandwich preconditions.
pub fn sample_instance(seed: u64, cfg: &InstanceConfig) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut last = None;
    for _ in 0..MAX_ATTEMPTS {
        match try_sample(&mut rng, seed, cfg) {
            Ok(inst) => return Ok(inst),
            Err(e) if e.is_precondition() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::InvalidInput("no admissible instance".into())))
}

/// Runs `job` over `seeds` in parallel; output order follows `seeds`.
pub fn run_batch<T, F>(seeds: impl IntoParallelIterator<Item = u64>, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    seeds.into_par_iter().map(job).collect()
}
