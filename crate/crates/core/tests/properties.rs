//! Property tests for the algebraic invariants on small grids.

use num_rational::Rational64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use conecycle::admissibility::{antisymmetrize, t_functional, PhaseCochain};
use conecycle::classify::{normal_form, sign_normalize};
use conecycle::cocycle::{coboundary_from, make_u, verify_two_cocycle, CoherentSection, TwoCocycle};
use conecycle::fock::elog::{elog_ratio_residual, LeftCoherentSection};
use conecycle::fock::{ccr_product, exp_vector_inner, random_exp_vector, weyl_exp, weyl_phase, WeylConvention};
use conecycle::reports::record::fmt_float;
use conecycle::{Cone, LatticePoint, LatticeSample, ModelSpec, PSpaceModel, ShiftRep, C64};

fn c1() -> ShiftRep {
    ShiftRep::new(PSpaceModel::new(ModelSpec::c1(3, Rational64::new(1, 3), 24)).unwrap())
}

fn point() -> impl Strategy<Value = LatticePoint> {
    prop::collection::vec(0i64..=2, 3).prop_map(LatticePoint)
}

fn nonzero_point() -> impl Strategy<Value = LatticePoint> {
    point().prop_filter("nonzero", |p| !p.is_zero())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A vector in the kernel of `V_a*`.
fn kernel_vector(rep: &ShiftRep, a: &LatticePoint, seed: u64) -> conecycle::GridVector {
    random_exp_vector(rep, a, 0.5, &mut rng(seed)).xi
}

/// `s·(1,0,−1) + t·(0,1,−1)`.
fn in_lh(s: f64, t: f64) -> Vec<f64> {
    vec![s, t, -s - t]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn cone_order_is_compatible_with_addition(a in point(), b in point(), c in point()) {
        let cone = Cone::orthant(3);
        prop_assert!(cone.leq_lattice(&a, &a).unwrap());
        prop_assert!(cone.leq_lattice(&a, &(&a + &b)).unwrap());
        let le = cone.leq_lattice(&a, &b).unwrap();
        prop_assert_eq!(le, cone.leq_lattice(&(&a + &c), &(&b + &c)).unwrap());
    }

    #[test]
    fn shifts_compose(a in point(), b in point(), c in nonzero_point(), seed in any::<u64>()) {
        let rep = c1();
        let v = kernel_vector(&rep, &c, seed);
        let two = rep.apply_v(&a, &rep.apply_v(&b, &v).unwrap()).unwrap();
        let one = rep.apply_v(&(&a + &b), &v).unwrap();
        prop_assert!((&two - &one).max_abs() == 0.0);
        prop_assert!((rep.apply_v(&a, &v).unwrap().norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
        prop_assert!((&rep.apply_vstar(&a, &rep.apply_v(&a, &v).unwrap()).unwrap() - &v).max_abs() == 0.0);
    }

    #[test]
    fn kernel_projection_is_an_orthogonal_projection(a in nonzero_point(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let rep = c1();
        let top = LatticePoint(vec![2, 2, 2]);
        let v = kernel_vector(&rep, &top, s1);
        let w = kernel_vector(&rep, &top, s2);
        let p = rep.ker_proj(&a, &v);
        prop_assert!((&rep.ker_proj(&a, &p) - &p).max_abs() == 0.0);
        prop_assert!(rep.apply_vstar(&a, &p).unwrap().max_abs() == 0.0);
        let lhs = p.inner(&w);
        let rhs = v.inner(&rep.ker_proj(&a, &w));
        prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    }

    #[test]
    fn u_cocycles_satisfy_the_identity(s1 in -2.0f64..2.0, t1 in -2.0f64..2.0, s2 in -2.0f64..2.0, t2 in -2.0f64..2.0,
                                       a in point(), b in point(), c in point()) {
        let rep = c1();
        let u = make_u(rep.model(), &in_lh(s1, t1), &in_lh(s2, t2)).unwrap();
        let r = verify_two_cocycle(&rep, &u, &[(a, b, c)], 1e-10).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn coboundaries_satisfy_the_identity(seed in any::<u64>(), a in point(), b in point(), c in point()) {
        let rep = c1();
        let xi = CoherentSection::from_vector(kernel_vector(&rep, &LatticePoint(vec![0, 0, 24]), seed));
        let sample = LatticeSample::new(rep.model().cone(), rep.model().step(), 2).unwrap();
        let g = coboundary_from(&rep, &xi, &sample, 1e-12).unwrap();
        let r = verify_two_cocycle(&rep, &g, &[(a, b, c)], 1e-10).unwrap();
        prop_assert!(r.pass, "{:?}", r);
    }

    #[test]
    fn multiplier_coboundaries_have_no_antisymmetric_part(
        seed in any::<u64>(), a in nonzero_point(), b in nonzero_point(), c in nonzero_point()
    ) {
        use rand::Rng;
        let sample = LatticeSample::new(&Cone::orthant(3), Rational64::new(1, 3), 6).unwrap();
        let mut r = rng(seed);
        let beta = PhaseCochain::from_fn(&sample.pairs(), |_, _| r.gen_range(-3.0..3.0));
        let v = antisymmetrize(|x, y, z| beta.delta(x, y, z).unwrap(), &a, &b, &c);
        prop_assert!(v.abs() <= 1e-12);
    }

    #[test]
    fn t_is_quadratic_and_vanishes_on_dependent_pairs(s in -2.0f64..2.0, t in -2.0f64..2.0, k in -3.0f64..3.0,
                                                     a in point(), b in point(), c in point()) {
        let rep = c1();
        let l = in_lh(s, t);
        let lk: Vec<f64> = l.iter().map(|x| k * x).collect();
        let dep = make_u(rep.model(), &l, &lk).unwrap();
        prop_assert!(t_functional(&rep, &dep, &a, &b, &c).unwrap().abs() <= 1e-12);
        let u = make_u(rep.model(), &l, &in_lh(t, -s)).unwrap();
        let t1 = t_functional(&rep, &u, &a, &b, &c).unwrap();
        let t3 = t_functional(&rep, &u.scaled(C64::new(k, 0.0)), &a, &b, &c).unwrap();
        prop_assert!((t3 - k * k * t1).abs() <= 1e-10 * (1.0 + t1.abs()));
    }

    #[test]
    fn weyl_relation_and_unitarity(a in nonzero_point(), seed in any::<u64>()) {
        let rep = c1();
        let mut r = rng(seed);
        let u = random_exp_vector(&rep, &a, 0.3, &mut r);
        let v = random_exp_vector(&rep, &a, 0.3, &mut r);
        let z1 = random_exp_vector(&rep, &a, 0.3, &mut r).xi;
        let z2 = random_exp_vector(&rep, &a, 0.3, &mut r).xi;
        let conv = WeylConvention::Standard;
        let lhs = weyl_exp(&z1, &weyl_exp(&z2, &u, conv), conv);
        let rhs = weyl_exp(&(&z1 + &z2), &u, conv);
        prop_assert!((lhs.scalar - weyl_phase(&z1, &z2, conv) * rhs.scalar).norm() <= 1e-12 * lhs.scalar.norm());
        let before = exp_vector_inner(&u, &v).unwrap();
        let after = exp_vector_inner(&weyl_exp(&z1, &u, conv), &weyl_exp(&z1, &v, conv)).unwrap();
        prop_assert!((after - before).norm() <= 1e-12 * before.norm());
    }

    #[test]
    fn ccr_product_is_multiplicative_on_pairings(a in nonzero_point(), b in nonzero_point(), seed in any::<u64>()) {
        let rep = c1();
        let mut r = rng(seed);
        let (u1, u2) = (random_exp_vector(&rep, &a, 0.3, &mut r), random_exp_vector(&rep, &a, 0.3, &mut r));
        let (v1, v2) = (random_exp_vector(&rep, &b, 0.3, &mut r), random_exp_vector(&rep, &b, 0.3, &mut r));
        let lhs = exp_vector_inner(&ccr_product(&rep, &u1, &v1).unwrap(), &ccr_product(&rep, &u2, &v2).unwrap()).unwrap();
        let rhs = exp_vector_inner(&u1, &u2).unwrap() * exp_vector_inner(&v1, &v2).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * rhs.norm());
    }

    #[test]
    fn exponential_gram_matrices_are_positive_definite(a in nonzero_point(), seed in any::<u64>()) {
        let rep = c1();
        let mut r = rng(seed);
        let us: Vec<_> = (0..5).map(|_| random_exp_vector(&rep, &a, 0.5, &mut r)).collect();
        let g = nalgebra::DMatrix::from_fn(5, 5, |i, j| exp_vector_inner(&us[j], &us[i]).unwrap());
        let min = g.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min > 0.0, "{}", min);
    }

    #[test]
    fn elog_reproduces_the_normalized_pairing(a in nonzero_point(), seed in any::<u64>()) {
        let rep = c1();
        let mut r = rng(seed);
        let f = LeftCoherentSection::new(CoherentSection::from_vector(
            random_exp_vector(&rep, &LatticePoint(vec![0, 0, 24]), 0.2, &mut r).xi,
        ));
        let u = random_exp_vector(&rep, &a, 0.3, &mut r);
        let v = random_exp_vector(&rep, &a, 0.3, &mut r);
        prop_assert!(elog_ratio_residual(&rep, &f, &a, &u, &v).unwrap() <= 1e-12);
    }

    #[test]
    fn normal_form_identifies_opposite_signs(s in -3.0f64..3.0, t in -3.0f64..3.0) {
        prop_assume!(s.abs() + t.abs() > 1e-3);
        let l = in_lh(s, t);
        let neg: Vec<f64> = l.iter().map(|x| -x).collect();
        let zero = vec![0.0; 3];
        prop_assert_eq!(normal_form(&l, &zero, 1e-12), normal_form(&neg, &zero, 1e-12));
        prop_assert_eq!(normal_form(&l, &zero, 1e-12), normal_form(&zero, &neg, 1e-12));
        let n = sign_normalize(&l, 1e-12);
        prop_assert_eq!(sign_normalize(&n, 1e-12), n);
    }

    #[test]
    fn record_floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let text = fmt_float(x);
        prop_assert_eq!(text.parse::<f64>().unwrap(), x);
    }
}

#[test]
fn zero_cocycle_has_zero_residual() {
    let rep = c1();
    let t = (LatticePoint(vec![1, 0, 0]), LatticePoint(vec![0, 1, 0]), LatticePoint(vec![0, 0, 1]));
    let r = verify_two_cocycle(&rep, &TwoCocycle::zero(), &[t], 0.0).unwrap();
    assert_eq!((r.max_residual, r.kernel_residual), (0.0, 0.0));
}
