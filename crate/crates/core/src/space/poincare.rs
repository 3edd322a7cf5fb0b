use rand::Rng;
use serde_json::Value;
use std::f64::consts::PI;

use super::{GeodesicSpace, SpaceKind, COINCIDENT};
use crate::error::{Error, Result};

/// Sampled points stay inside this Euclidean radius.
const SAMPLE_RADIUS: f64 = 0.999;

/// The hyperbolic plane in Poincaré disk coordinates.
///
/// Geodesics are computed by translating `x` to the origin with a Möbius map,
/// moving radially by the requested fraction of hyperbolic length and
/// translating back.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PoincareDisk;

type C = [f64; 2];

fn sub(a: C, b: C) -> C {
    [a[0] - b[0], a[1] - b[1]]
}

fn add(a: C, b: C) -> C {
    [a[0] + b[0], a[1] + b[1]]
}

fn mul(a: C, b: C) -> C {
    [a[0] * b[0] - a[1] * b[1], a[0] * b[1] + a[1] * b[0]]
}

fn div(a: C, b: C) -> C {
    let n = b[0] * b[0] + b[1] * b[1];
    [(a[0] * b[0] + a[1] * b[1]) / n, (a[1] * b[0] - a[0] * b[1]) / n]
}

fn conj(a: C) -> C {
    [a[0], -a[1]]
}

fn abs(a: C) -> f64 {
    a[0].hypot(a[1])
}

fn scale(a: C, s: f64) -> C {
    [a[0] * s, a[1] * s]
}

/// `z ↦ (z - a) / (1 - ā z)`, carrying `a` to the origin.
fn to_origin(a: C, z: C) -> C {
    div(sub(z, a), sub([1.0, 0.0], mul(conj(a), z)))
}

/// Inverse of [`to_origin`].
fn from_origin(a: C, w: C) -> C {
    div(add(w, a), add([1.0, 0.0], mul(conj(a), w)))
}

impl PoincareDisk {
    pub fn new() -> Self {
        PoincareDisk
    }

    /// Distance by the arccosh closed form
    /// `arccosh(1 + 2|x-y|² / ((1-|x|²)(1-|y|²)))`.
    ///
    /// [`GeodesicSpace::dist`] uses the equivalent `2·artanh` form, which
    /// keeps full precision for nearby points.
    pub fn dist_arccosh(&self, x: &C, y: &C) -> f64 {
        let d = sub(*x, *y);
        let num = 2.0 * (d[0] * d[0] + d[1] * d[1]);
        let den = (1.0 - x[0] * x[0] - x[1] * x[1]) * (1.0 - y[0] * y[0] - y[1] * y[1]);
        (1.0 + num / den).acosh()
    }

    fn polar(radius_hyp: f64, angle: f64) -> C {
        let t = (radius_hyp / 2.0).tanh();
        [t * angle.cos(), t * angle.sin()]
    }
}

impl GeodesicSpace for PoincareDisk {
    type Point = C;

    fn kind(&self) -> SpaceKind {
        SpaceKind::HyperbolicPlane
    }

    fn tolerance(&self) -> f64 {
        1e-7
    }

    fn validate(&self, x: &C) -> Result<()> {
        if !(x[0].is_finite() && x[1].is_finite()) {
            return Err(Error::domain("disk point has a non-finite coordinate"));
        }
        if x[0] * x[0] + x[1] * x[1] >= 1.0 {
            return Err(Error::domain(format!(
                "point ({}, {}) is not inside the open unit disk",
                x[0], x[1]
            )));
        }
        Ok(())
    }

    fn dist(&self, x: &C, y: &C) -> f64 {
        let num = abs(sub(*x, *y));
        if num == 0.0 {
            return 0.0;
        }
        let den = abs(sub([1.0, 0.0], mul(conj(*x), *y)));
        2.0 * (num / den).min(1.0 - f64::EPSILON).atanh()
    }

    fn combine(&self, x: &C, y: &C, lambda: f64) -> C {
        if lambda == 0.0 {
            return *x;
        }
        if lambda == 1.0 {
            return *y;
        }
        let w = to_origin(*x, *y);
        let rho = abs(w);
        if 2.0 * rho.min(1.0 - f64::EPSILON).atanh() < COINCIDENT {
            return *x;
        }
        let target = (lambda * rho.atanh()).tanh();
        from_origin(*x, scale(w, target / rho))
    }

    fn base_point(&self) -> C {
        [0.0, 0.0]
    }

    fn scale(&self) -> f64 {
        1.5
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> C {
        loop {
            let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            if p[0] * p[0] + p[1] * p[1] <= SAMPLE_RADIUS * SAMPLE_RADIUS {
                return p;
            }
        }
    }

    fn ray_point<R: Rng + ?Sized>(&self, a: &C, radius: f64, rng: &mut R) -> C {
        let angle = rng.gen_range(0.0..2.0 * PI);
        from_origin(*a, Self::polar(radius, angle))
    }

    fn ball_pair<R: Rng + ?Sized>(&self, a: &C, radius: f64, rng: &mut R) -> (C, C) {
        let s1 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
        let s2 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
        let t1 = rng.gen_range(0.0..2.0 * PI);
        let t2 = if rng.gen_bool(0.3) {
            t1 + PI + rng.gen_range(-0.05..0.05)
        } else {
            rng.gen_range(0.0..2.0 * PI)
        };
        (
            from_origin(*a, Self::polar(radius * s1, t1)),
            from_origin(*a, Self::polar(radius * s2, t2)),
        )
    }

    fn is_finite(&self, x: &C) -> bool {
        x[0].is_finite() && x[1].is_finite()
    }

    fn point_from_json(&self, value: &Value) -> Result<C> {
        let coords: Vec<f64> = serde_json::from_value(value.clone())
            .map_err(|e| Error::config(format!("disk point {value}: {e}")))?;
        if coords.len() != 2 {
            return Err(Error::config(format!("disk point {value} must have two coordinates")));
        }
        let p = [coords[0], coords[1]];
        self.validate(&p)?;
        Ok(p)
    }

    fn point_to_json(&self, x: &C) -> Value {
        Value::from(x.to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{combine, dist, seeded_sampler};

    #[test]
    fn coincident_points_have_zero_distance() {
        let h = PoincareDisk;
        assert_eq!(dist(&h, &[0.3, 0.1], &[0.3, 0.1]).unwrap(), 0.0);
    }

    #[test]
    fn rejects_points_on_or_outside_the_boundary() {
        let h = PoincareDisk;
        assert!(matches!(dist(&h, &[1.0, 0.0], &[0.0, 0.0]), Err(Error::Domain(_))));
        assert!(dist(&h, &[0.8, 0.7], &[0.0, 0.0]).is_err());
        assert!(combine(&h, &[0.0, 0.0], &[0.5, 0.0], -0.1).is_err());
    }

    #[test]
    fn artanh_and_arccosh_forms_agree() {
        let h = PoincareDisk;
        let mut rng = seeded_sampler(11);
        for _ in 0..1000 {
            let x = h.sample_point(&mut rng);
            let y = h.sample_point(&mut rng);
            let a = h.dist(&x, &y);
            let b = h.dist_arccosh(&x, &y);
            assert!((a - b).abs() <= 1e-7 * (1.0 + a), "{a} vs {b}");
        }
    }

    #[test]
    fn geodesic_through_origin_is_a_diameter() {
        let h = PoincareDisk;
        let m = h.combine(&[-0.5, 0.0], &[0.5, 0.0], 0.5);
        assert!(abs(m) < 1e-15);
    }

    #[test]
    fn combine_endpoints_exact() {
        let h = PoincareDisk;
        let x = [0.2, -0.4];
        let y = [-0.6, 0.1];
        assert_eq!(h.combine(&x, &y, 0.0), x);
        assert_eq!(h.combine(&x, &y, 1.0), y);
    }

    #[test]
    fn ray_point_distance() {
        let h = PoincareDisk;
        let mut rng = seeded_sampler(5);
        let a = [0.4, 0.3];
        for _ in 0..200 {
            let p = h.ray_point(&a, 1.7, &mut rng);
            assert!((h.dist(&a, &p) - 1.7).abs() < 1e-10);
        }
    }
}
