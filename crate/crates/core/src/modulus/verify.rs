use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Modulus;
use crate::space::{sample_lambda, GeodesicSpace, COINCIDENT};

/// The worst sampled tuple of a modulus check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub a: Value,
    pub x: Value,
    pub y: Value,
    pub r: f64,
    pub eps: f64,
    pub lambda: f64,
    /// `d(W(x, y, λ), a)`.
    pub lhs: f64,
    /// The claimed bound, or NaN when the modulus could not be evaluated.
    pub rhs: f64,
}

/// Outcome of a sampled modulus inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusReport {
    pub label: String,
    pub samples: usize,
    pub premise_satisfying: usize,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub witness: Option<Witness>,
}

impl ModulusReport {
    fn new(label: &str, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            samples: 0,
            premise_satisfying: 0,
            max_violation: 0.0,
            tolerance,
            pass: true,
            witness: None,
        }
    }

    fn record(&mut self, lhs: f64, rhs: Option<f64>, w: impl FnOnce() -> Witness) {
        self.premise_satisfying += 1;
        let excess = match rhs {
            Some(rhs) if !(lhs - rhs).is_nan() => (lhs - rhs).max(0.0),
            _ => f64::INFINITY,
        };
        if excess > self.max_violation || (excess > 0.0 && self.witness.is_none()) {
            self.max_violation = excess;
            self.witness = Some(w());
        }
        self.pass = self.max_violation <= self.tolerance;
    }
}

struct Tuple<P> {
    a: P,
    x: P,
    y: P,
    r: f64,
    eps: f64,
}

/// Draws `(a, x, y, r, ε)` with `d(x,a), d(y,a) ≤ r` and `d(x,y) ≥ εr` by
/// construction. `None` when the pair came out coincident.
fn premise_tuple<S: GeodesicSpace, R: Rng + ?Sized>(space: &S, rng: &mut R) -> Option<Tuple<S::Point>> {
    let a = space.sample_point(rng);
    let r0 = space.scale() * 10f64.powf(rng.gen_range(-2.0..0.3));
    let (x, y) = space.ball_pair(&a, r0, rng);
    let r = r0.max(space.dist(&x, &a)).max(space.dist(&y, &a));
    let dxy = space.dist(&x, &y);
    if dxy < COINCIDENT.max(1e-9 * r) {
        return None;
    }
    // boundary separation a third of the time, otherwise anywhere below it
    let u = if rng.gen_bool(0.3) { 1.0 } else { 1.0 - rng.gen::<f64>() };
    let eps = ((dxy / r).min(2.0) * u * (1.0 - 1e-12)).min(2.0);
    if !(eps > 0.0) {
        return None;
    }
    Some(Tuple { a, x, y, r, eps })
}

fn witness<S: GeodesicSpace>(space: &S, t: &Tuple<S::Point>, eps: f64, lambda: f64, lhs: f64, rhs: Option<f64>) -> Witness {
    Witness {
        a: space.point_to_json(&t.a),
        x: space.point_to_json(&t.x),
        y: space.point_to_json(&t.y),
        r: t.r,
        eps,
        lambda,
        lhs,
        rhs: rhs.unwrap_or(f64::NAN),
    }
}

fn bound(m: &Modulus, r: f64, eps: f64, lambda: f64) -> Option<f64> {
    m.eval(r, eps)
        .ok()
        .map(|e| (1.0 - 2.0 * lambda * (1.0 - lambda) * e.value) * r)
}

/// Samples premise-satisfying tuples until `n` of them have been checked and
/// tests `d(W(x,y,λ), a) ≤ (1 - 2λ(1-λ)η(r,ε)) r + tol` on each.
pub fn verify_modulus<S: GeodesicSpace, R: Rng + ?Sized>(
    space: &S,
    m: &Modulus,
    rng: &mut R,
    n: usize,
    tol: f64,
) -> ModulusReport {
    check_modulus_inequalities(space, m, rng, n, tol).swap_remove(0)
}

/// Runs the four sampled modulus inequalities on the same tuples:
///
/// - `combination`: `d(W(x,y,λ), a) ≤ (1 - 2λ(1-λ)η(r,ε)) r`;
/// - `midpoint`: `d(½x ⊕ ½y, a) ≤ (1 - η(r,ε)) r`, the defining implication;
/// - `weaker-separation`: the combination bound with `η(r,ψ)` for some `ψ ≤ ε`;
/// - `rescaled-radius`: `(1 - 2λ(1-λ)η(s, εr/s)) s` for some `s ≥ r`.
pub fn check_modulus_inequalities<S: GeodesicSpace, R: Rng + ?Sized>(
    space: &S,
    m: &Modulus,
    rng: &mut R,
    n: usize,
    tol: f64,
) -> Vec<ModulusReport> {
    let mut comb = ModulusReport::new("combination", tol);
    let mut mid = ModulusReport::new("midpoint", tol);
    let mut weak = ModulusReport::new("weaker-separation", tol);
    let mut resc = ModulusReport::new("rescaled-radius", tol);
    let mut drawn = 0;
    let max_draws = n.saturating_mul(20).max(100);
    while comb.premise_satisfying < n && drawn < max_draws {
        drawn += 1;
        let Some(t) = premise_tuple(space, rng) else {
            continue;
        };
        let lambda = sample_lambda(rng);
        let w = space.combine(&t.x, &t.y, lambda);
        let lhs = space.dist(&w, &t.a);

        let rhs = bound(m, t.r, t.eps, lambda);
        comb.record(lhs, rhs, || witness(space, &t, t.eps, lambda, lhs, rhs));

        let half = space.combine(&t.x, &t.y, 0.5);
        let lhs_mid = space.dist(&half, &t.a);
        let rhs_mid = m.eval(t.r, t.eps).ok().map(|e| (1.0 - e.value) * t.r);
        mid.record(lhs_mid, rhs_mid, || witness(space, &t, t.eps, 0.5, lhs_mid, rhs_mid));

        let psi = t.eps * (1.0 - rng.gen::<f64>());
        let rhs_weak = bound(m, t.r, psi, lambda);
        weak.record(lhs, rhs_weak, || witness(space, &t, psi, lambda, lhs, rhs_weak));

        let s = t.r * 10f64.powf(rng.gen::<f64>());
        let rhs_resc = bound(m, s, t.eps * t.r / s, lambda);
        resc.record(lhs, rhs_resc, || witness(space, &t, t.eps, lambda, lhs, rhs_resc));
    }
    for rep in [&mut comb, &mut mid, &mut weak, &mut resc] {
        rep.samples = drawn;
        // starving the premise counts as a failure rather than a vacuous pass
        if rep.premise_satisfying < n {
            rep.pass = false;
        }
    }
    vec![comb, mid, weak, resc]
}
