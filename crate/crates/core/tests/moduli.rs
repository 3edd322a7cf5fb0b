use kmrate_core::exact::rational_from_f64;
use kmrate_core::modulus::{
    cat0_modulus, check_modulus_inequalities, combination_bound, combination_bound_rescaled, eval_modulus,
    verify_factorization, verify_modulus, verify_monotone, Modulus, EPS_GRID, R_GRID,
};
use kmrate_core::space::{seeded_sampler, Euclidean, GeodesicSpace, PoincareDisk};
use num_rational::BigRational;
use proptest::prelude::*;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

proptest! {
    // Parallelogram law: |m - a|² = (|x - a|² + |y - a|²)/2 - |x - y|²/4, so
    // d(x,a), d(y,a) ≤ r and d(x,y) ≥ εr give |m - a| ≤ r√(1 - ε²/4) ≤ (1 - ε²/8) r.
    #[test]
    fn euclidean_midpoints_obey_cat0_modulus(
        x in prop::collection::vec(-5.0f64..5.0, 3),
        y in prop::collection::vec(-5.0f64..5.0, 3),
        a in prop::collection::vec(-5.0f64..5.0, 3),
    ) {
        let e = Euclidean::new(3).unwrap();
        let m = e.combine(&x, &y, 0.5);
        let (dx, dy, dxy) = (norm(&sub(&x, &a)), norm(&sub(&y, &a)), norm(&sub(&x, &y)));
        let r = dx.max(dy);
        prop_assume!(r > 1e-6 && dxy > 1e-9);
        let eps = (dxy / r).min(2.0);
        let by_law = ((dx * dx + dy * dy) / 2.0 - dxy * dxy / 4.0).max(0.0).sqrt();
        prop_assert!((e.dist(&m, &a) - by_law).abs() < 1e-9);
        let eta = eval_modulus(&cat0_modulus(), r, eps).unwrap();
        prop_assert!((eta - eps * eps / 8.0).abs() < 1e-15);
        prop_assert!(by_law <= (1.0 - eta) * r + 1e-9);
    }

    #[test]
    fn combination_bounds_match_closed_forms(
        r in 0.01f64..100.0, eps in 0.01f64..2.0, lambda in 0.0f64..=1.0, stretch in 1.0f64..10.0,
    ) {
        let m = cat0_modulus();
        let c = combination_bound(&m, r, eps, lambda).unwrap();
        prop_assert!((c - (1.0 - lambda * (1.0 - lambda) * eps * eps / 4.0) * r).abs() < 1e-12 * r.max(1.0));
        let s = r * stretch;
        let e2 = eps * r / s;
        let cr = combination_bound_rescaled(&m, r, eps, lambda, s).unwrap();
        prop_assert!((cr - (1.0 - lambda * (1.0 - lambda) * e2 * e2 / 4.0) * s).abs() < 1e-12 * s.max(1.0));
    }
}

#[test]
fn custom_expression_reproduces_cat0_exactly() {
    let custom = Modulus::custom("same", "eps*eps/8", Some("eps/8"), true).unwrap();
    let cat0 = cat0_modulus();
    for &r in &R_GRID {
        for &e in &EPS_GRID {
            let (rq, eq) = (rational_from_f64(r).unwrap(), rational_from_f64(e).unwrap());
            let oracle = &eq * &eq / BigRational::from_integer(8.into());
            assert_eq!(custom.eval_rational(&rq, &eq).unwrap(), oracle);
            assert_eq!(cat0.eval_rational(&rq, &eq).unwrap(), oracle);
        }
    }
    assert!(verify_factorization(&custom, &R_GRID, &EPS_GRID).unwrap());
    assert!(verify_monotone(&cat0, &R_GRID, &EPS_GRID));
}

#[test]
fn bad_moduli_are_caught() {
    // increasing in r
    let grows = Modulus::custom("grows", "r*eps/1000", None, true).unwrap();
    assert!(!verify_monotone(&grows, &R_GRID, &EPS_GRID));
    // η̃ that does not factor η
    let wrong = Modulus::custom("wrong", "eps^2/8", Some("eps/4"), true).unwrap();
    assert!(!verify_factorization(&wrong, &R_GRID, &EPS_GRID).unwrap());
    // values above 1 are clamped and flagged
    let big = Modulus::custom("big", "10*eps", None, true).unwrap();
    let v = big.eval(1.0, 1.0).unwrap();
    assert!(v.clamped && v.value == 1.0);
    assert!(big.eval(1.0, 2.5).is_err());
    assert!(big.eval(0.0, 1.0).is_err());
}

#[test]
fn disk_is_uniformly_convex_with_cat0_modulus_and_rejects_eps_over_2() {
    let disk = PoincareDisk::new();
    let reports = check_modulus_inequalities(&disk, &cat0_modulus(), &mut seeded_sampler(5), 2_000, 1e-9);
    assert!(reports.iter().all(|r| r.pass && r.premise_satisfying == 2_000), "{reports:#?}");
    let loose = Modulus::custom("half-eps", "eps/2", None, true).unwrap();
    let r = verify_modulus(&disk, &loose, &mut seeded_sampler(5), 2_000, 1e-9);
    assert!(!r.pass);
    let w = r.witness.unwrap();
    assert!(w.lhs > w.rhs);
}
