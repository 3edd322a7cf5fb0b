//! Geodesic spaces with a convexity mapping `W`.
//!
//! A space here is a metric `d` together with a map `W(x, y, λ)` returning the
//! point `(1-λ)x ⊕ λy` on the chosen geodesic from `x` to `y`. Three concrete
//! CAT(0) instances are provided: Euclidean space, the hyperbolic plane in
//! Poincaré disk coordinates and finite weighted metric trees.

mod axioms;
mod config;
mod euclidean;
mod poincare;
mod tree;

pub use axioms::{check_ball_convexity, check_convexity_axioms, SampleReport};
pub use config::{build_space, AnySpace, SpaceConfig, SpaceKind, VertexRef};
pub use euclidean::Euclidean;
pub use poincare::PoincareDisk;
pub use tree::{MetricTree, TreePoint};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use std::fmt::Debug;

use crate::error::{Error, Result};

/// Coincident-point guard: below this distance `W(x, y, λ) = x`.
pub const COINCIDENT: f64 = 1e-12;

/// Deterministic sampler used by every randomized check in the crate.
pub type Sampler = ChaCha8Rng;

pub fn seeded_sampler(seed: u64) -> Sampler {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A metric space `(X, d)` with a convexity mapping `W`.
///
/// `dist` and `combine` assume valid points; use the free functions [`dist`]
/// and [`combine`] for checked access.
pub trait GeodesicSpace: Send + Sync {
    type Point: Clone + Debug + PartialEq + Send + Sync + 'static;

    fn kind(&self) -> SpaceKind;

    /// Default tolerance for axiom and identity checks on this space.
    fn tolerance(&self) -> f64;

    fn validate(&self, x: &Self::Point) -> Result<()>;

    fn dist(&self, x: &Self::Point, y: &Self::Point) -> f64;

    /// `W(x, y, λ)` for `λ ∈ [0, 1]`. Returns `x` at `λ = 0` and `y` at `λ = 1`.
    fn combine(&self, x: &Self::Point, y: &Self::Point, lambda: f64) -> Self::Point;

    /// A canonical base point (Euclidean origin, disk center, tree root).
    fn base_point(&self) -> Self::Point;

    /// Typical length scale, used to pick ball radii in samplers.
    fn scale(&self) -> f64;

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::Point;

    /// A point at distance at most `radius` from `a`, exactly `radius` when the
    /// space extends that far in the randomly chosen direction.
    fn ray_point<R: Rng + ?Sized>(&self, a: &Self::Point, radius: f64, rng: &mut R) -> Self::Point {
        let target = self.sample_point(rng);
        let d = self.dist(a, &target);
        if d < COINCIDENT {
            return a.clone();
        }
        self.combine(a, &target, (radius / d).min(1.0))
    }

    /// Two points in the closed ball of radius `radius` around `a`.
    fn ball_pair<R: Rng + ?Sized>(
        &self,
        a: &Self::Point,
        radius: f64,
        rng: &mut R,
    ) -> (Self::Point, Self::Point) {
        let s1 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
        let s2 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
        (
            self.ray_point(a, radius * s1, rng),
            self.ray_point(a, radius * s2, rng),
        )
    }

    fn is_finite(&self, x: &Self::Point) -> bool;

    fn point_from_json(&self, value: &Value) -> Result<Self::Point>;

    fn point_to_json(&self, x: &Self::Point) -> Value;
}

/// Checked distance.
pub fn dist<S: GeodesicSpace>(space: &S, x: &S::Point, y: &S::Point) -> Result<f64> {
    space.validate(x)?;
    space.validate(y)?;
    Ok(space.dist(x, y))
}

/// Checked convexity mapping `(1-λ)x ⊕ λy`.
pub fn combine<S: GeodesicSpace>(
    space: &S,
    x: &S::Point,
    y: &S::Point,
    lambda: f64,
) -> Result<S::Point> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("lambda {lambda} outside [0, 1]")));
    }
    space.validate(x)?;
    space.validate(y)?;
    Ok(space.combine(x, y, lambda))
}

/// Draws `λ` from `[0, 1]`, hitting the endpoints now and then.
pub fn sample_lambda<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.gen_range(0..20) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.gen(),
    }
}
