use converse_core::algebra::{certify_combined, coeff_interval, interval_add, interval_mul, BoundInterval};
use converse_core::batch::{sample_instance, InstanceConfig};
use converse_core::converse::{
    alpha_bound, corollary_g_bounds, difference_certify, ensemble_sandwich, general_bound, ratio_constant,
    CorollaryG, FFamily, GSign, Member, WeightedEnsemble,
};
use converse_core::kantorovich::{kantorovich, kantorovich_oracle};
use converse_core::operator::{
    apply_polynomial, apply_scalar_function, certify_leq, compress, isometry_residual, loewner_leq,
    random_hermitian, random_isometry, random_orthogonal, with_spectrum, HermitianOperator,
};
use converse_core::phi::{phi_apply, phi_is_normalized_positive_linear, PhiMap};
use converse_core::sandwich::{build_sandwich, sandwich_range, Side};
use converse_core::scalar::{
    build_envelope, chord_tangent_auto, Envelope, Interval, Polynomial, ScalarFunction,
};
use converse_core::tail::{ky_fan_norm, tail_sweep, theta_grid, BasisMode, EnsembleSpec, TailMode};
use converse_core::Error;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn cases(n: u32) -> ProptestConfig {
    ProptestConfig::with_cases(n)
}

fn coeffs(max_deg: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 1..=max_deg + 1)
}

fn sq() -> ScalarFunction {
    ScalarFunction::Power(2.0)
}

proptest! {
    #![proptest_config(cases(200))]

    #[test]
    fn polynomial_arithmetic_matches_pointwise(a in coeffs(5), b in coeffs(5), x in -3.0..3.0f64) {
        let (p, q) = (Polynomial::new(a), Polynomial::new(b));
        let tol = 1e-9 * (1.0 + p.eval(x).abs() * q.eval(x).abs() + p.eval(x).abs() + q.eval(x).abs());
        prop_assert!(((&p + &q).eval(x) - (p.eval(x) + q.eval(x))).abs() <= tol);
        prop_assert!(((&p * &q).eval(x) - p.eval(x) * q.eval(x)).abs() <= tol);
        prop_assert!((p.compose(&q).eval(x) - p.eval(q.eval(x))).abs() <= 1e-8 * (1.0 + p.compose(&q).eval(x).abs()));
    }

    #[test]
    fn chord_above_tangent_below(m in 0.1..3.0f64, w in 0.05..3.0f64, which in 0usize..4) {
        let f = [sq(), ScalarFunction::Exp, ScalarFunction::Power(4.0), ScalarFunction::Power(-1.0)][which].clone();
        let lb = chord_tangent_auto(&f, m, m + w).unwrap();
        let scale = 1.0 + f.eval(m).abs().max(f.eval(m + w).abs());
        prop_assert!(lb.max_violation(&f, m, m + w, 1001) <= 1e-9 * scale);
        prop_assert!(lb.b_prime <= lb.b + 1e-12 * scale);
        prop_assert!((f.derivative().eval(lb.x0) - lb.a).abs() <= 1e-6 * (1.0 + lb.a.abs()));
    }

    #[test]
    fn envelopes_sandwich_on_the_grid(m in 0.2..3.0f64, w in 0.1..2.0f64, degree in 1usize..6, which in 0usize..3) {
        let f = [ScalarFunction::Exp, ScalarFunction::Log, ScalarFunction::Power(0.5)][which].clone();
        let env = build_envelope(&f, m, m + w, degree, f64::INFINITY).unwrap();
        prop_assert!(env.validate().is_ok());
    }

    #[test]
    fn kantorovich_scale_invariant_and_oracle(m in 0.1..5.0f64, ratio in 1.01..20.0f64, r in -3.0..3.0f64, c in 0.1..10.0f64) {
        prop_assume!(r.abs() > 1e-3 && (r - 1.0).abs() > 1e-3);
        let k = kantorovich(m, m * ratio, r).unwrap();
        prop_assert!((kantorovich(c * m, c * m * ratio, r).unwrap() - k).abs() <= 1e-9 * k);
        if r > 0.0 && r < 1.0 {
            prop_assert!(k <= 1.0 + 1e-12);
        } else {
            prop_assert!(k >= 1.0 - 1e-12);
        }
        prop_assert!((kantorovich_oracle(m, m * ratio, r).unwrap() - k).abs() <= 1e-6 * k);
    }

    #[test]
    fn kantorovich_increasing_in_ratio(m in 0.1..5.0f64, r1 in 1.01..10.0f64, extra in 0.01..10.0f64, q in 2u32..6) {
        let r = q as f64;
        prop_assert!(kantorovich(m, m * r1, r).unwrap() <= kantorovich(m, m * (r1 + extra), r).unwrap() * (1.0 + 1e-12));
    }
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn spectral_mapping(seed in any::<u64>(), n in 1usize..9, c in coeffs(4)) {
        let a = random_hermitian(n, -2.0, 2.0, seed).unwrap();
        let p = Polynomial::new(c);
        let mut mapped: Vec<f64> = a.eigenvalues().unwrap().iter().map(|&x| p.eval(x)).collect();
        mapped.sort_by(f64::total_cmp);
        let got = apply_polynomial(&p, &a).eigenvalues().unwrap();
        for (x, y) in got.iter().zip(&mapped) {
            prop_assert!((x - y).abs() <= 1e-8 * 1f64.max(y.abs()));
        }
        let fc = apply_scalar_function(&ScalarFunction::Poly(p.clone()), &a).unwrap();
        prop_assert!(fc.sub(&apply_polynomial(&p, &a)).max_abs() <= 1e-9);
    }

    #[test]
    fn loewner_antisymmetry(seed in any::<u64>(), n in 1usize..7, shift in 0.0..1e-8f64) {
        let a = random_hermitian(n, -1.0, 1.0, seed).unwrap();
        let b = a.add(&HermitianOperator::scalar(n, shift));
        let tol = 1e-8;
        let (ab, ba) = (loewner_leq(&a, &b, tol).unwrap(), loewner_leq(&b, &a, tol).unwrap());
        prop_assert!(ab.holds);
        if ba.holds {
            let d = b.sub(&a).eigenvalues().unwrap();
            prop_assert!(d.iter().all(|x| x.abs() <= 2.0 * tol));
        }
    }

    #[test]
    fn isometries(seed in any::<u64>(), rows in 1usize..10, cols_frac in 0.0..1.0f64) {
        let cols = 1 + ((rows - 1) as f64 * cols_frac) as usize;
        prop_assert!(isometry_residual(&random_isometry(rows, cols, seed).unwrap()) <= 1e-10);
    }

    #[test]
    fn phi_output_is_self_adjoint(seed in any::<u64>(), n in 1usize..7, c in coeffs(3)) {
        let v = random_isometry(n, 1 + (seed as usize % n), seed).unwrap();
        let phi = PhiMap::new(v, c).unwrap();
        let x = random_hermitian(n, -1.0, 1.0, seed ^ 1).unwrap();
        let out = phi_apply(&phi, &x).unwrap();
        let m = out.matrix();
        prop_assert!((m - m.transpose()).amax() <= 1e-10);
    }

    #[test]
    fn linear_phi_is_compression_and_monotone(seed in any::<u64>(), n in 1usize..7) {
        let v = random_isometry(n, 1 + (seed as usize % n), seed).unwrap();
        let phi = PhiMap::new(v.clone(), vec![0.0, 1.0]).unwrap();
        prop_assert!(phi_is_normalized_positive_linear(&phi));
        let x = random_hermitian(n, -1.0, 1.0, seed ^ 2).unwrap();
        prop_assert_eq!(phi_apply(&phi, &x).unwrap(), compress(&v, &x).unwrap());
        let gap = random_hermitian(n, 0.0, 1.0, seed ^ 3).unwrap();
        let y = x.add(&gap);
        let c = certify_leq(&phi_apply(&phi, &x).unwrap(), &phi_apply(&phi, &y).unwrap(), 1.0).unwrap();
        prop_assert!(c.holds);
    }

    #[test]
    fn nonlinear_phi_is_not_additive(seed in any::<u64>(), n in 1usize..5, a2 in 0.5..2.0f64) {
        let phi = PhiMap::with_identity(n, vec![0.0, 1.0, a2]).unwrap();
        let x = random_hermitian(n, 0.5, 1.5, seed).unwrap();
        let y = random_hermitian(n, 0.5, 1.5, seed ^ 9).unwrap();
        let sum = phi_apply(&phi, &x.add(&y)).unwrap();
        let parts = phi_apply(&phi, &x).unwrap().add(&phi_apply(&phi, &y).unwrap());
        prop_assert!(sum.sub(&parts).max_abs() > 1e-6);
    }

    #[test]
    fn ky_fan_monotone_and_triangle(seed in any::<u64>(), n in 1usize..7) {
        let a = random_hermitian(n, -3.0, 3.0, seed).unwrap();
        let b = random_hermitian(n, -3.0, 3.0, seed ^ 5).unwrap();
        let mut prev = 0.0;
        for ell in 1..=n {
            let k = ky_fan_norm(&a, ell).unwrap();
            prop_assert!(k >= prev - 1e-12);
            prev = k;
            let lhs = ky_fan_norm(&a.add(&b), ell).unwrap();
            prop_assert!(lhs <= ky_fan_norm(&a, ell).unwrap() + ky_fan_norm(&b, ell).unwrap() + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(cases(60))]

    #[test]
    fn lemma_sandwich_and_range_soundness(seed in any::<u64>()) {
        let cfg = InstanceConfig { max_members: 1, ..InstanceConfig::default() };
        let inst = sample_instance(seed, &cfg).unwrap();
        let (mem, env) = (&inst.ens.members()[0], &inst.envs[0]);
        let s = build_sandwich(&inst.phi, env, &mem.a).unwrap();
        let lhs = phi_apply(&inst.phi, &apply_scalar_function(&inst.f, &mem.a).unwrap()).unwrap();
        prop_assert!(certify_leq(&lhs, &s.upper_op, 1.0).unwrap().holds);
        prop_assert!(certify_leq(&s.lower_op, &lhs, 1.0).unwrap().holds);
        for side in [Side::Upper, Side::Lower] {
            let range = sandwich_range(&inst.phi, env, env.m(), env.big_m(), side).unwrap();
            let slack = 1e-8 * 1f64.max(range.hull().lo.abs()).max(range.hull().hi.abs());
            for x in s.raw(side).eigenvalues().unwrap() {
                prop_assert!(range.contains(x, slack), "{x} outside {:?}", range);
            }
        }
    }

    #[test]
    fn exact_envelopes_collapse(seed in any::<u64>(), n in 1usize..7, c in coeffs(3)) {
        let p = Polynomial::new(c);
        let f = ScalarFunction::Poly(p.clone());
        let env = build_envelope(&f, -1.0, 2.0, p.degree().max(1), 1e-9).unwrap();
        let v = random_isometry(n, 1 + (seed as usize % n), seed).unwrap();
        let phi = PhiMap::new(v, vec![0.0, 1.0]).unwrap();
        let a = random_hermitian(n, -1.0, 2.0, seed ^ 4).unwrap();
        let s = build_sandwich(&phi, &env, &a).unwrap();
        let exact = phi_apply(&phi, &apply_scalar_function(&f, &a).unwrap()).unwrap();
        prop_assert!(s.upper_op.sub(&exact).max_abs() <= 1e-9);
        prop_assert!(s.lower_op.sub(&exact).max_abs() <= 1e-9);
    }

    #[test]
    fn general_bounds_hold(seed in any::<u64>(), gi in 0usize..4, alpha in -2.0..2.0f64, congruence in any::<bool>()) {
        let inst = sample_instance(seed, &InstanceConfig::default()).unwrap();
        let g = [ScalarFunction::identity(), sq(), ScalarFunction::Exp, ScalarFunction::Log][gi].clone();
        let family = if congruence { FFamily::CongruenceRatio } else { FFamily::Difference(alpha) };
        for side in [Side::Upper, Side::Lower] {
            match general_bound(&inst.ens, &inst.phi, &inst.envs, &g, family, side) {
                Ok(c) => prop_assert!(c.holds(), "{:?}", c.certificate),
                Err(e) => prop_assert!(e.is_precondition(), "{e}"),
            }
        }
    }

    #[test]
    fn alpha_bound_is_general_bound(seed in any::<u64>(), alpha in -2.0..2.0f64) {
        let inst = sample_instance(seed, &InstanceConfig::default()).unwrap();
        for side in [Side::Upper, Side::Lower] {
            let a = alpha_bound(&inst.ens, &inst.phi, &inst.envs, &ScalarFunction::Exp, alpha, side);
            let g = general_bound(&inst.ens, &inst.phi, &inst.envs, &ScalarFunction::Exp, FFamily::Difference(alpha), side);
            match (a, g) {
                (Ok(a), Ok(g)) => {
                    prop_assert_eq!(&a.lhs, &g.lhs);
                    prop_assert_eq!(&a.rhs, &g.rhs);
                    prop_assert_eq!(a.scalar_constant.to_bits(), g.scalar_constant.to_bits());
                    prop_assert_eq!(a.certificate, g.certificate);
                }
                (Err(a), Err(g)) => prop_assert_eq!(a, g),
                _ => prop_assert!(false, "one side failed"),
            }
        }
    }

    #[test]
    fn corollary_gates_match_range_signs(seed in any::<u64>(), which in 0usize..3) {
        let inst = sample_instance(seed, &InstanceConfig::default()).unwrap();
        let tag = [CorollaryG::Power(2.0), CorollaryG::Log, CorollaryG::Exp][which];
        for side in [Side::Upper, Side::Lower] {
            let (_, range) = ensemble_sandwich(&inst.ens, &inst.phi, &inst.envs, side).unwrap();
            let violates = match tag {
                CorollaryG::Power(_) => range.lo < 0.0,
                CorollaryG::Log => range.lo <= 0.0,
                CorollaryG::Exp => false,
            };
            match corollary_g_bounds(&inst.ens, &inst.phi, &inst.envs, tag, 1.0, side) {
                Err(Error::RangeSignViolation(_)) => prop_assert!(violates),
                Err(e) => prop_assert!(!violates && e.is_precondition(), "{e}"),
                Ok(c) => prop_assert!(!violates && c.holds()),
            }
        }
    }

    #[test]
    fn difference_constant_with_identity_g(seed in any::<u64>()) {
        let inst = sample_instance(seed, &InstanceConfig::default()).unwrap();
        let (u, l) = difference_certify(&inst.ens, &inst.phi, &inst.envs, &ScalarFunction::identity()).unwrap();
        prop_assert!(u.scalar_constant >= 0.0 && u.holds() && l.holds());
    }
}

proptest! {
    #![proptest_config(cases(100))]

    #[test]
    fn ratio_constants_monotone_in_interval(m in 0.5..2.0f64, w in 0.1..2.0f64, grow_lo in 0.0..0.4f64, grow_hi in 0.0..2.0f64) {
        let id = ScalarFunction::identity();
        let inner = Interval::new(m, m + w).unwrap();
        let outer = Interval::new(m - grow_lo, m + w + grow_hi).unwrap();
        let num = sq();
        let a1 = |iv| ratio_constant(&num, &id, iv, GSign::Positive, Side::Upper).unwrap().value;
        let a2 = |iv| ratio_constant(&num, &id, iv, GSign::Positive, Side::Lower).unwrap().value;
        prop_assert!(a1(outer) >= a1(inner) - 1e-12);
        prop_assert!(a2(outer) <= a2(inner) + 1e-12);
    }

    #[test]
    fn monoid_laws(l in prop::array::uniform3(0.01..10.0f64), w in prop::array::uniform3(0.0..10.0f64)) {
        let [p, q, r] = [0, 1, 2].map(|i| BoundInterval::new(l[i], l[i] + w[i]).unwrap());
        prop_assert_eq!(interval_add(p, q), interval_add(q, p));
        let (x, y) = (interval_add(interval_add(p, q), r), interval_add(p, interval_add(q, r)));
        prop_assert!((x.lo - y.lo).abs() <= 1e-12 && (x.hi - y.hi).abs() <= 1e-12);
        prop_assert_eq!(interval_add(p, BoundInterval::ZERO), p);
        let mul = |a, b| interval_mul(a, b).unwrap();
        prop_assert_eq!(mul(p, q), mul(q, p));
        let (x, y) = (mul(mul(p, q), r), mul(p, mul(q, r)));
        prop_assert!((x.lo - y.lo).abs() <= 1e-12 * x.lo && (x.hi - y.hi).abs() <= 1e-12 * x.hi);
        prop_assert_eq!(mul(p, BoundInterval::ONE), p);
    }

    #[test]
    fn coeff_interval_ordered(m in 0.2..3.0f64, w in 0.1..2.0f64, which in 0usize..3, gi in 0usize..3) {
        let f = [sq(), ScalarFunction::Exp, ScalarFunction::Power(3.0)][which].clone();
        let g = [ScalarFunction::identity(), sq(), ScalarFunction::Exp][gi].clone();
        let lb = chord_tangent_auto(&f, m, m + w).unwrap();
        let c = coeff_interval(&lb, &g, m, m + w).unwrap();
        prop_assert!(c.lo <= c.hi);
    }
}

proptest! {
    #![proptest_config(cases(40))]

    #[test]
    fn combined_addition_sound(seed in any::<u64>(), n in 1usize..6, k in 1usize..4, shared in any::<bool>(), fi in 0usize..3, hi in 0usize..3) {
        let fs = [sq(), ScalarFunction::Exp, ScalarFunction::identity()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_orthogonal(&mut rng, n);
        let members: Vec<Member> = (0..k)
            .map(|j| {
                let a = if shared {
                    let base = random_hermitian(n, 1.0, 2.0, seed ^ j as u64).unwrap();
                    with_spectrum(&q, &base.eigenvalues().unwrap())
                } else {
                    random_hermitian(n, 1.0, 2.0, seed ^ j as u64).unwrap()
                };
                Member { a, m: 1.0, big_m: 2.0 }
            })
            .collect();
        let ens = WeightedEnsemble::new(members, vec![1.0 / k as f64; k]).unwrap();
        let r = certify_combined(&ens, &PhiMap::identity(n), &fs[fi], &fs[hi], &ScalarFunction::identity()).unwrap();
        prop_assert!(r.add.iter().all(|c| c.certificate.holds));
        prop_assert!(r.mul.iter().all(|c| c.certificate.holds));
    }
}

#[test]
fn tail_reports_are_reproducible() {
    let spec = EnsembleSpec {
        n: 3,
        k: 2,
        weights: vec![0.3, 0.7],
        m: 1.0,
        big_m: 2.0,
        trials: 300,
        seed: 11,
        basis: BasisMode::Independent,
    };
    let grid = theta_grid(1.0, 10.0, 10);
    let run = || {
        tail_sweep(
            &spec,
            &sq(),
            &ScalarFunction::Exp,
            &ScalarFunction::identity(),
            2,
            &grid,
            TailMode::Add,
        )
        .unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn chord_envelope_matches_validation() {
    let lb = chord_tangent_auto(&sq(), 1.0, 2.0).unwrap();
    let env = Envelope::from_linear_bound(sq(), 1.0, 2.0, &lb).unwrap();
    assert!(env.validate().is_ok());
}
