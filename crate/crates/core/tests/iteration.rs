use kmrate_core::iteration::{
    km_iterate, read_csv_rows, trace_inequality_audit, validate_mapping, AnchorPoint, KSequence, MappingSpace,
    Schedule,
};
use kmrate_core::space::{seeded_sampler, Euclidean, MetricTree, PoincareDisk};
use kmrate_core::Error;
use proptest::prelude::*;

fn rotate(p: [f64; 2], t: f64) -> [f64; 2] {
    let (s, c) = t.sin_cos();
    [c * p[0] - s * p[1], s * p[0] + c * p[1]]
}

proptest! {
    // x_{n+1} = (1 - λ) x_n + λ R^{nφ} x_n, computed with plain arithmetic
    #[test]
    fn euclidean_rotation_orbit_matches_direct_recursion(
        phi in -3.0f64..3.0, lambda in 0.1f64..0.9, x in -4.0f64..4.0, y in -4.0f64..4.0,
    ) {
        let e = Euclidean::new(2).unwrap();
        let t = e.rotation(phi).unwrap();
        let sched = Schedule::constant(lambda, 20);
        let tr = km_iterate(&e, &t, &sched, &vec![x, y], 40, None).unwrap();
        let mut p = [x, y];
        for n in 0..=40 {
            let got = &tr.points[n];
            prop_assert!((got[0] - p[0]).abs() < 1e-9 && (got[1] - p[1]).abs() < 1e-9, "step {}", n);
            let tp = rotate(p, phi);
            let res = ((tp[0] - p[0]).powi(2) + (tp[1] - p[1]).powi(2)).sqrt();
            prop_assert!((tr.residuals[n] - res).abs() < 1e-9);
            let q = rotate(p, n as f64 * phi);
            p = [(1.0 - lambda) * p[0] + lambda * q[0], (1.0 - lambda) * p[1] + lambda * q[1]];
        }
    }
}

#[test]
fn residuals_shrink_and_the_audit_is_clean_on_every_space() {
    let sched = Schedule::constant(0.5, 2);
    let e = Euclidean::new(2).unwrap();
    let t = e.rotation(1.0).unwrap().declare(KSequence::halving(), 1.0);
    let p = AnchorPoint::new(&e, &t, &vec![1.0, 1.0], vec![0.0, 0.0], 2.0, 0.0).unwrap();
    let tr = km_iterate(&e, &t, &sched, &vec![1.0, 1.0], 300, Some(&p)).unwrap();
    assert!(tr.residuals[300] < 1e-3 * tr.residuals[0]);
    let audit = trace_inequality_audit(&e, &t, &tr, &p, 1.0, &[0.1, 0.01], 1e-9).unwrap();
    assert!(audit.pass, "{audit:#?}");

    let d = PoincareDisk::new();
    let t = d.toward([0.0, 0.0], 0.25).unwrap();
    let p = AnchorPoint::new(&d, &t, &[0.6, 0.3], [0.0, 0.0], 2.0, 0.0).unwrap();
    let tr = km_iterate(&d, &t, &sched, &[0.6, 0.3], 300, Some(&p)).unwrap();
    assert!(tr.residuals[300] < 1e-9);
    assert!(trace_inequality_audit(&d, &t, &tr, &p, 0.0, &[0.1], 1e-9).unwrap().pass);

    let tree = MetricTree::new(
        vec!["c".into(), "a".into(), "b".into()],
        vec![(0, 1, 1.0), (0, 2, 1.0)],
    )
    .unwrap();
    let x0 = tree.vertex(1);
    let t = tree.toward(tree.vertex(0), 0.25).unwrap();
    let p = AnchorPoint::new(&tree, &t, &x0, tree.vertex(0), 1.0, 0.0).unwrap();
    let tr = km_iterate(&tree, &t, &sched, &x0, 100, Some(&p)).unwrap();
    assert!(tr.residuals[100] < 1e-12);
    assert!(trace_inequality_audit(&tree, &t, &tr, &p, 0.0, &[0.1], 1e-9).unwrap().pass);
}

#[test]
fn csv_round_trips_exactly() {
    let e = Euclidean::new(2).unwrap();
    let t = e.rotation(0.7).unwrap();
    let tr = km_iterate(&e, &t, &Schedule::constant(0.3, 4), &vec![0.3, -1.1], 50, None).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert!(text.starts_with("n,lambda_n,k_n,residual,power_residual,dist_to_anchor\n"));
    let rows = read_csv_rows(buf.as_slice()).unwrap();
    assert_eq!(rows, tr.rows().collect::<Vec<_>>());
}

#[test]
fn hypotheses_are_enforced() {
    let e = Euclidean::new(2).unwrap();
    // λ outside [1/L, 1 - 1/L]
    let err = Schedule::constant(0.9, 4).check(10).unwrap_err();
    assert!(matches!(err, Error::Hypothesis(_)), "{err}");
    assert!(Schedule::constant(0.25, 4).check(10).is_ok());
    // an expanding map fails its declared nonexpansiveness
    let t = e.scaling(1.5).unwrap();
    let r = validate_mapping(&e, &t, &mut seeded_sampler(3), 4, 32, 1e-9);
    assert!(!r.pass);
    let t = e.scaling(0.5).unwrap();
    assert!(validate_mapping(&e, &t, &mut seeded_sampler(3), 4, 32, 1e-9).pass);
    // an anchor that is not almost fixed
    let t = e.rotation(1.0).unwrap();
    assert!(AnchorPoint::new(&e, &t, &vec![0.0, 0.0], vec![1.0, 0.0], 2.0, 1e-6).is_err());
}
