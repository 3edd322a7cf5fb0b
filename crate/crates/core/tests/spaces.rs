use kmrate_core::space::{
    build_space, check_ball_convexity, check_convexity_axioms, seeded_sampler, AnySpace, Euclidean,
    GeodesicSpace, MetricTree, PoincareDisk, SpaceConfig, TreePoint,
};
use proptest::prelude::*;
use rand::Rng;

fn ten_vertex_tree() -> MetricTree {
    let cfg = SpaceConfig::metric_tree(
        &["c", "a1", "a2", "a3", "b1", "b2", "b3", "d1", "d2", "d3"],
        &[
            ("c", "a1", 1.0),
            ("a1", "a2", 0.5),
            ("a2", "a3", 2.0),
            ("c", "b1", 1.0),
            ("b1", "b2", 0.5),
            ("b2", "b3", 2.0),
            ("c", "d1", 1.0),
            ("d1", "d2", 0.5),
            ("d2", "d3", 2.0),
        ],
    );
    match build_space(&cfg).unwrap() {
        AnySpace::MetricTree(t) => t,
        _ => unreachable!(),
    }
}

/// Distance along the Poincaré metric `2|dz|/(1-|z|²)` on the segment
/// `[0, r]`, by composite Simpson quadrature.
fn integrate_diameter(r: f64) -> f64 {
    let n = 20_000;
    let h = r / n as f64;
    let f = |t: f64| 2.0 / (1.0 - t * t);
    let mut s = f(0.0) + f(r);
    for i in 1..n {
        let t = i as f64 * h;
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(t);
    }
    s * h / 3.0
}

#[test]
fn disk_distance_matches_closed_form_and_quadrature() {
    let h = PoincareDisk;
    let r: f64 = 0.5;
    let closed = (1.0 + 2.0 * r * r / (1.0 - r * r)).acosh();
    let quad = integrate_diameter(r);
    let got = h.dist(&[0.0, 0.0], &[r, 0.0]);
    assert!((closed - quad).abs() < 1e-12, "{closed} vs {quad}");
    assert!((got - closed).abs() < 1e-14, "{got} vs {closed}");
    assert!((got - 1.0986122886681098).abs() < 1e-14); // ln 3
}

/// Distance between tree points through an explicit vertex metric: the
/// geodesic leaves each point's edge through one of its endpoints.
struct TreeOracle {
    vdist: Vec<Vec<f64>>,
    edges: Vec<(usize, usize, f64)>,
}

impl TreeOracle {
    fn new(t: &MetricTree) -> Self {
        let n = t.vertex_count();
        let edges = t.edges().to_vec();
        let mut vdist = vec![vec![f64::INFINITY; n]; n];
        for (s, row) in vdist.iter_mut().enumerate() {
            row[s] = 0.0;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(a, b, w) in &edges {
                    for (x, y) in [(a, b), (b, a)] {
                        if x == u && row[y].is_infinite() {
                            row[y] = row[u] + w;
                            stack.push(y);
                        }
                    }
                }
            }
        }
        Self { vdist, edges }
    }

    /// (edge, offset from edge's first endpoint) of a point, via JSON.
    fn decode(&self, t: &MetricTree, p: &TreePoint) -> (usize, usize, f64, f64) {
        let v = t.point_to_json(p);
        let names = t.names();
        let idx = |s: &serde_json::Value| names.iter().position(|n| n == s.as_str().unwrap()).unwrap();
        let a = idx(&v["edge"][0]);
        let b = idx(&v["edge"][1]);
        let off = v["offset"].as_f64().unwrap();
        let len = self
            .edges
            .iter()
            .find(|&&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a))
            .unwrap()
            .2;
        (a, b, off, len)
    }

    fn dist(&self, t: &MetricTree, p: &TreePoint, q: &TreePoint) -> f64 {
        let (a1, b1, s1, l1) = self.decode(t, p);
        let (a2, b2, s2, l2) = self.decode(t, q);
        if (a1, b1) == (a2, b2) {
            return (s1 - s2).abs();
        }
        if (a1, b1) == (b2, a2) {
            return (s1 - (l2 - s2)).abs();
        }
        let mut best = f64::INFINITY;
        for (u, du) in [(a1, s1), (b1, l1 - s1)] {
            for (v, dv) in [(a2, s2), (b2, l2 - s2)] {
                best = best.min(du + self.vdist[u][v] + dv);
            }
        }
        best
    }
}

#[test]
fn tree_metric_and_geodesics_agree_with_vertex_path_oracle() {
    let t = ten_vertex_tree();
    let oracle = TreeOracle::new(&t);
    let mut rng = seeded_sampler(2024);
    for _ in 0..5000 {
        let p = t.sample_point(&mut rng);
        let q = t.sample_point(&mut rng);
        let d = oracle.dist(&t, &p, &q);
        assert!((t.dist(&p, &q) - d).abs() < 1e-12);
        let lambda: f64 = rng.gen();
        let m = t.combine(&p, &q, lambda);
        // the geodesic point is the unique one splitting d in ratio λ : 1-λ
        assert!((oracle.dist(&t, &p, &m) - lambda * d).abs() < 1e-12);
        assert!((oracle.dist(&t, &q, &m) - (1.0 - lambda) * d).abs() < 1e-12);
    }
}

#[test]
fn convexity_axioms_hold_on_all_instances() {
    let spaces: Vec<(&str, Box<dyn Fn(u64) -> Vec<kmrate_core::space::SampleReport>>)> = vec![
        ("euclidean(3)", Box::new(|s| {
            check_convexity_axioms(&Euclidean::new(3).unwrap(), &mut seeded_sampler(s), 10_000, 1e-9)
        })),
        ("hyperbolic", Box::new(|s| {
            check_convexity_axioms(&PoincareDisk, &mut seeded_sampler(s), 10_000, 1e-7)
        })),
        ("tree", Box::new(|s| {
            check_convexity_axioms(&ten_vertex_tree(), &mut seeded_sampler(s), 10_000, 1e-9)
        })),
    ];
    for (name, run) in spaces {
        let reports = run(7);
        assert_eq!(reports.len(), 5);
        for r in reports {
            assert!(r.pass, "{name}: {r:?}");
            assert_eq!(r.samples, 10_000);
        }
    }
}

#[test]
fn balls_are_convex() {
    let r = check_ball_convexity(&Euclidean::new(2).unwrap(), &mut seeded_sampler(1), 5000, 1e-9);
    assert!(r.pass, "{r:?}");
    let r = check_ball_convexity(&PoincareDisk, &mut seeded_sampler(2), 5000, 1e-7);
    assert!(r.pass, "{r:?}");
    let r = check_ball_convexity(&ten_vertex_tree(), &mut seeded_sampler(3), 5000, 1e-9);
    assert!(r.pass, "{r:?}");
}

fn disk_point() -> impl Strategy<Value = [f64; 2]> {
    (0.0f64..0.99, 0.0f64..std::f64::consts::TAU).prop_map(|(r, a)| [r * a.cos(), r * a.sin()])
}

proptest! {
    #[test]
    fn disk_metric_axioms(x in disk_point(), y in disk_point(), z in disk_point()) {
        let h = PoincareDisk;
        prop_assert!((h.dist(&x, &y) - h.dist(&y, &x)).abs() <= 1e-9);
        prop_assert!(h.dist(&x, &z) <= h.dist(&x, &y) + h.dist(&y, &z) + 1e-9);
        prop_assert_eq!(h.dist(&x, &x), 0.0);
    }

    #[test]
    fn disk_geodesic_splits_distance(x in disk_point(), y in disk_point(), lambda in 0.0f64..=1.0) {
        let h = PoincareDisk;
        let m = h.combine(&x, &y, lambda);
        let d = h.dist(&x, &y);
        prop_assert!(m[0] * m[0] + m[1] * m[1] < 1.0);
        prop_assert!((h.dist(&x, &m) - lambda * d).abs() <= 1e-7);
        prop_assert!((h.dist(&y, &m) - (1.0 - lambda) * d).abs() <= 1e-7);
    }

    #[test]
    fn euclidean_metric_axioms(
        x in prop::collection::vec(-100.0f64..100.0, 4),
        y in prop::collection::vec(-100.0f64..100.0, 4),
        z in prop::collection::vec(-100.0f64..100.0, 4),
    ) {
        let e = Euclidean::new(4).unwrap();
        prop_assert_eq!(e.dist(&x, &y), e.dist(&y, &x));
        prop_assert!(e.dist(&x, &z) <= e.dist(&x, &y) + e.dist(&y, &z) + 1e-9);
    }
}
