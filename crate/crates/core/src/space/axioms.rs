use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{sample_lambda, GeodesicSpace};

/// Outcome of one sampled inequality check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub label: String,
    pub samples: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl SampleReport {
    pub fn new(label: impl Into<String>, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            samples: 0,
            max_violation: 0.0,
            tolerance,
            pass: true,
        }
    }

    /// Records `lhs - rhs` for an inequality `lhs ≤ rhs`.
    pub fn record(&mut self, excess: f64) {
        self.samples += 1;
        // NaN counts as an unbounded violation
        let v = if excess.is_nan() { f64::INFINITY } else { excess.max(0.0) };
        if v > self.max_violation {
            self.max_violation = v;
        }
        self.pass = self.max_violation <= self.tolerance;
    }
}

/// Draws `x`, occasionally very close to `y` so the coincident regime is covered.
fn sample_pair<S: GeodesicSpace, R: Rng + ?Sized>(space: &S, rng: &mut R) -> (S::Point, S::Point) {
    let x = space.sample_point(rng);
    let y = space.sample_point(rng);
    if rng.gen_bool(0.05) {
        let t = 10f64.powf(rng.gen_range(-14.0..-3.0));
        let near = space.combine(&x, &y, t);
        (x, near)
    } else {
        (x, y)
    }
}

/// Samples tuples and measures the worst violation of (W1)-(W4) and of the
/// identity `d(x, W(x,y,λ)) = λ d(x,y)`, `d(y, W(x,y,λ)) = (1-λ) d(x,y)`.
///
/// Returns the five reports in the order W1, W2, W3, W4, geodesic-identity.
pub fn check_convexity_axioms<S: GeodesicSpace, R: Rng + ?Sized>(
    space: &S,
    rng: &mut R,
    n: usize,
    tol: f64,
) -> Vec<SampleReport> {
    let mut w1 = SampleReport::new("W1", tol);
    let mut w2 = SampleReport::new("W2", tol);
    let mut w3 = SampleReport::new("W3", tol);
    let mut w4 = SampleReport::new("W4", tol);
    let mut identity = SampleReport::new("geodesic-identity", tol);
    for _ in 0..n {
        let (x, y) = sample_pair(space, rng);
        let (z, w) = sample_pair(space, rng);
        let lambda = sample_lambda(rng);
        let mu = sample_lambda(rng);
        let d = |a: &S::Point, b: &S::Point| space.dist(a, b);

        let p = space.combine(&x, &y, lambda);
        let dxy = d(&x, &y);

        w1.record(d(&z, &p) - ((1.0 - lambda) * d(&z, &x) + lambda * d(&z, &y)));

        let q = space.combine(&x, &y, mu);
        w2.record((d(&p, &q) - (lambda - mu).abs() * dxy).abs());

        let rev = space.combine(&y, &x, 1.0 - lambda);
        w3.record(d(&p, &rev));

        let a = space.combine(&x, &z, lambda);
        let b = space.combine(&y, &w, lambda);
        w4.record(d(&a, &b) - ((1.0 - lambda) * d(&x, &y) + lambda * d(&z, &w)));

        let e1 = (d(&x, &p) - lambda * dxy).abs();
        let e2 = (d(&y, &p) - (1.0 - lambda) * dxy).abs();
        identity.record(e1.max(e2));
    }
    vec![w1, w2, w3, w4, identity]
}

/// Closed balls are convex: `d(W(x,y,λ), a) ≤ max(d(x,a), d(y,a))`.
pub fn check_ball_convexity<S: GeodesicSpace, R: Rng + ?Sized>(
    space: &S,
    rng: &mut R,
    n: usize,
    tol: f64,
) -> SampleReport {
    let mut report = SampleReport::new("ball-convexity", tol);
    for _ in 0..n {
        let (x, y) = sample_pair(space, rng);
        let a = space.sample_point(rng);
        let lambda = sample_lambda(rng);
        let p = space.combine(&x, &y, lambda);
        report.record(space.dist(&p, &a) - space.dist(&x, &a).max(space.dist(&y, &a)));
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{seeded_sampler, Euclidean, SpaceKind};
    use serde_json::Value;

    #[test]
    fn report_pass_tracks_violation() {
        let mut r = SampleReport::new("x", 1e-9);
        r.record(-3.0);
        assert!(r.pass && r.max_violation == 0.0);
        r.record(1e-3);
        assert!(!r.pass);
        assert_eq!(r.samples, 2);
        let mut r = SampleReport::new("nan", 1.0);
        r.record(f64::NAN);
        assert!(!r.pass);
    }

    /// Straight-line space whose W moves λ² of the way: violates W2.
    struct SquaredLambda(Euclidean);

    impl GeodesicSpace for SquaredLambda {
        type Point = Vec<f64>;
        fn kind(&self) -> SpaceKind {
            SpaceKind::Euclidean
        }
        fn tolerance(&self) -> f64 {
            1e-9
        }
        fn validate(&self, x: &Vec<f64>) -> crate::Result<()> {
            self.0.validate(x)
        }
        fn dist(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
            self.0.dist(x, y)
        }
        fn combine(&self, x: &Vec<f64>, y: &Vec<f64>, lambda: f64) -> Vec<f64> {
            self.0.combine(x, y, lambda * lambda)
        }
        fn base_point(&self) -> Vec<f64> {
            self.0.base_point()
        }
        fn scale(&self) -> f64 {
            self.0.scale()
        }
        fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
            self.0.sample_point(rng)
        }
        fn is_finite(&self, x: &Vec<f64>) -> bool {
            self.0.is_finite(x)
        }
        fn point_from_json(&self, v: &Value) -> crate::Result<Vec<f64>> {
            self.0.point_from_json(v)
        }
        fn point_to_json(&self, x: &Vec<f64>) -> Value {
            self.0.point_to_json(x)
        }
    }

    #[test]
    fn squared_lambda_interpolation_fails_w2() {
        let space = SquaredLambda(Euclidean::new(2).unwrap());
        let reports = check_convexity_axioms(&space, &mut seeded_sampler(1), 2000, 1e-9);
        let w2 = reports.iter().find(|r| r.label == "W2").unwrap();
        assert!(!w2.pass);
        // oracle: |λ² - μ²| vs |λ - μ| differ by a visible fraction of d(x,y)
        assert!(w2.max_violation > 0.1, "{}", w2.max_violation);
        let identity = reports.iter().find(|r| r.label == "geodesic-identity").unwrap();
        assert!(!identity.pass);
    }

    #[test]
    fn deterministic_given_seed() {
        let e = Euclidean::new(3).unwrap();
        let a = check_convexity_axioms(&e, &mut seeded_sampler(77), 500, 1e-9);
        let b = check_convexity_axioms(&e, &mut seeded_sampler(77), 500, 1e-9);
        assert_eq!(a, b);
        assert_eq!(a.len(), 5);
    }
}
