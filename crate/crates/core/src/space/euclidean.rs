use rand::Rng;
use serde_json::Value;

use super::{GeodesicSpace, SpaceKind, COINCIDENT};
use crate::error::{Error, Result};

const SAMPLE_HALF_WIDTH: f64 = 5.0;

/// `ℝⁿ` with the Euclidean norm and straight-line interpolation.
#[derive(Debug, Clone, PartialEq)]
pub struct Euclidean {
    dim: usize,
}

impl Euclidean {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Construction("euclidean dimension must be at least 1".into()));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

impl GeodesicSpace for Euclidean {
    type Point = Vec<f64>;

    fn kind(&self) -> SpaceKind {
        SpaceKind::Euclidean
    }

    fn tolerance(&self) -> f64 {
        1e-9
    }

    fn validate(&self, x: &Vec<f64>) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::domain(format!(
                "point has dimension {}, space has dimension {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::domain("point has a non-finite coordinate"));
        }
        Ok(())
    }

    fn dist(&self, x: &Vec<f64>, y: &Vec<f64>) -> f64 {
        x.iter()
            .zip(y)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    fn combine(&self, x: &Vec<f64>, y: &Vec<f64>, lambda: f64) -> Vec<f64> {
        if lambda == 0.0 {
            return x.clone();
        }
        if lambda == 1.0 {
            return y.clone();
        }
        if self.dist(x, y) < COINCIDENT {
            return x.clone();
        }
        x.iter().zip(y).map(|(a, b)| a + lambda * (b - a)).collect()
    }

    fn base_point(&self) -> Vec<f64> {
        vec![0.0; self.dim]
    }

    fn scale(&self) -> f64 {
        SAMPLE_HALF_WIDTH
    }

    fn sample_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        (0..self.dim)
            .map(|_| rng.gen_range(-SAMPLE_HALF_WIDTH..=SAMPLE_HALF_WIDTH))
            .collect()
    }

    fn ray_point<R: Rng + ?Sized>(&self, a: &Vec<f64>, radius: f64, rng: &mut R) -> Vec<f64> {
        let dir = unit_vector(self.dim, rng);
        a.iter().zip(&dir).map(|(c, u)| c + radius * u).collect()
    }

    fn ball_pair<R: Rng + ?Sized>(
        &self,
        a: &Vec<f64>,
        radius: f64,
        rng: &mut R,
    ) -> (Vec<f64>, Vec<f64>) {
        let s1 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
        let s2 = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
        let u = unit_vector(self.dim, rng);
        // Nearly antipodal pairs probe the separated end of the modulus.
        let v = if rng.gen_bool(0.3) {
            let jitter = unit_vector(self.dim, rng);
            let mut w: Vec<f64> = u.iter().zip(&jitter).map(|(a, b)| -a + 0.05 * b).collect();
            normalize(&mut w);
            w
        } else {
            unit_vector(self.dim, rng)
        };
        let x = a.iter().zip(&u).map(|(c, d)| c + radius * s1 * d).collect();
        let y = a.iter().zip(&v).map(|(c, d)| c + radius * s2 * d).collect();
        (x, y)
    }

    fn is_finite(&self, x: &Vec<f64>) -> bool {
        x.iter().all(|c| c.is_finite())
    }

    fn point_from_json(&self, value: &Value) -> Result<Vec<f64>> {
        let coords = match value {
            Value::Number(n) => vec![n.as_f64().unwrap_or(f64::NAN)],
            Value::Array(items) => items
                .iter()
                .map(|v| {
                    v.as_f64()
                        .ok_or_else(|| Error::config(format!("coordinate {v} is not a number")))
                })
                .collect::<Result<Vec<_>>>()?,
            other => return Err(Error::config(format!("expected coordinate array, got {other}"))),
        };
        self.validate(&coords)?;
        Ok(coords)
    }

    fn point_to_json(&self, x: &Vec<f64>) -> Value {
        Value::from(x.clone())
    }
}

fn unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n2: f64 = v.iter().map(|c| c * c).sum();
        if n2 > 1e-6 && n2 <= 1.0 {
            normalize(&mut v);
            return v;
        }
    }
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
    for c in v.iter_mut() {
        *c /= n;
    }
}
