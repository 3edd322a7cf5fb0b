use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::sync::Arc;

use super::{Fixed, KSequence, Mapping};
use crate::error::{Error, Result};
use crate::space::{Euclidean, GeodesicSpace, MetricTree, PoincareDisk, VertexRef, COINCIDENT};

/// Built-in mapping rules as they appear in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum MappingConfig {
    Identity,
    Constant {
        point: Value,
    },
    /// Rotation about the base point by `angle` (plane and disk), or the tree
    /// automorphism given by vertex `cycles`.
    Rotation {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        angle: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cycles: Option<Vec<Vec<VertexRef>>>,
    },
    /// Moves `min(d(x, point), step)` along the geodesic toward `point`
    /// (the base point when omitted).
    Toward {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        point: Option<Value>,
        step: f64,
    },
    /// `x ↦ factor · x` in Euclidean space.
    Scaling {
        factor: f64,
    },
}

/// A mapping rule with its declared `(k_n)` and cap `K` (default `Σ k_n`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSpec {
    #[serde(flatten)]
    pub rule: MappingConfig,
    #[serde(default)]
    pub k: KSequence,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub cap: Option<f64>,
}

impl MapSpec {
    pub fn new(rule: MappingConfig, k: KSequence, cap: Option<f64>) -> Self {
        Self { rule, k, cap }
    }
}

/// Spaces that can instantiate the built-in mappings.
pub trait MappingSpace: GeodesicSpace + Clone + 'static {
    fn rotation(&self, angle: f64) -> Result<Mapping<Self::Point>> {
        let _ = angle;
        Err(Error::config(format!("{:?} has no rotation by angle", self.kind())))
    }

    fn automorphism(&self, cycles: &[Vec<VertexRef>]) -> Result<Mapping<Self::Point>> {
        let _ = cycles;
        Err(Error::config(format!("{:?} has no vertex automorphisms", self.kind())))
    }

    fn scaling(&self, factor: f64) -> Result<Mapping<Self::Point>> {
        let _ = factor;
        Err(Error::config(format!("scaling is only defined on euclidean space, not {:?}", self.kind())))
    }

    /// Moves `min(d(x, v), step)` toward `v`. Nonexpansive, fixing only `v`.
    fn toward(&self, v: Self::Point, step: f64) -> Result<Mapping<Self::Point>> {
        if !(step > 0.0) {
            return Err(Error::config(format!("toward: step {step} must be positive")));
        }
        self.validate(&v)?;
        let space = self.clone();
        let target = v.clone();
        Ok(Mapping::new(
            "toward",
            move |x: &Self::Point| {
                let d = space.dist(x, &target);
                if d <= step || d < COINCIDENT {
                    target.clone()
                } else {
                    space.combine(x, &target, step / d)
                }
            },
            KSequence::Zero,
            0.0,
            Fixed::At(v),
        ))
    }

    fn build_mapping(&self, spec: &MapSpec) -> Result<Mapping<Self::Point>> {
        let m = match &spec.rule {
            MappingConfig::Identity => Mapping::identity(),
            MappingConfig::Constant { point } => Mapping::constant(self.point_from_json(point)?),
            MappingConfig::Rotation {
                angle: Some(a),
                cycles: None,
            } => self.rotation(*a)?,
            MappingConfig::Rotation {
                angle: None,
                cycles: Some(c),
            } => self.automorphism(c)?,
            MappingConfig::Rotation { .. } => {
                return Err(Error::config("rotation needs exactly one of `angle` or `cycles`"))
            }
            MappingConfig::Toward { point, step } => {
                let v = match point {
                    Some(p) => self.point_from_json(p)?,
                    None => self.base_point(),
                };
                self.toward(v, *step)?
            }
            MappingConfig::Scaling { factor } => self.scaling(*factor)?,
        };
        let cap = spec.cap.unwrap_or_else(|| spec.k.total());
        Ok(m.declare(spec.k.clone(), cap))
    }
}

impl MappingSpace for Euclidean {
    /// Rotation in the first coordinate plane about the origin.
    fn rotation(&self, angle: f64) -> Result<Mapping<Vec<f64>>> {
        if self.dim() < 2 {
            return Err(Error::config("rotation needs dimension at least 2"));
        }
        let (s, c) = angle.sin_cos();
        Ok(Mapping::new(
            format!("rotation({angle})"),
            move |x: &Vec<f64>| {
                let mut y = x.clone();
                y[0] = c * x[0] - s * x[1];
                y[1] = s * x[0] + c * x[1];
                y
            },
            KSequence::Zero,
            0.0,
            Fixed::At(self.base_point()),
        ))
    }

    fn scaling(&self, factor: f64) -> Result<Mapping<Vec<f64>>> {
        Ok(Mapping::new(
            format!("scaling({factor})"),
            move |x: &Vec<f64>| x.iter().map(|v| factor * v).collect(),
            KSequence::Zero,
            0.0,
            Fixed::At(self.base_point()),
        ))
    }
}

impl MappingSpace for PoincareDisk {
    /// Rotation about the disk center, a hyperbolic isometry.
    fn rotation(&self, angle: f64) -> Result<Mapping<[f64; 2]>> {
        let (s, c) = angle.sin_cos();
        Ok(Mapping::new(
            format!("rotation({angle})"),
            move |x: &[f64; 2]| [c * x[0] - s * x[1], s * x[0] + c * x[1]],
            KSequence::Zero,
            0.0,
            Fixed::At([0.0, 0.0]),
        ))
    }
}

impl MappingSpace for MetricTree {
    /// The isometry induced by a weight-preserving vertex permutation given
    /// in cycle notation; unlisted vertices are fixed.
    fn automorphism(&self, cycles: &[Vec<VertexRef>]) -> Result<Mapping<crate::space::TreePoint>> {
        let n = self.vertex_count();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut seen = vec![false; n];
        for cycle in cycles {
            let idx = cycle.iter().map(|r| self.vertex_index(r)).collect::<Result<Vec<_>>>()?;
            for (i, &v) in idx.iter().enumerate() {
                if std::mem::replace(&mut seen[v], true) {
                    return Err(Error::config(format!("vertex {:?} appears in two cycles", self.names()[v])));
                }
                perm[v] = idx[(i + 1) % idx.len()];
            }
        }
        self.check_automorphism(&perm)?;
        let fixed = self.center();
        let tree = Arc::new(self.clone());
        let label = cycles
            .iter()
            .map(|c| {
                let names: Vec<String> = c
                    .iter()
                    .map(|r| match r {
                        VertexRef::Name(s) => s.clone(),
                        VertexRef::Index(i) => i.to_string(),
                    })
                    .collect();
                format!("({})", names.join(" "))
            })
            .collect::<String>();
        Ok(Mapping::new(
            format!("automorphism{label}"),
            move |p| tree.permute(&perm, p),
            KSequence::Zero,
            0.0,
            Fixed::At(fixed),
        ))
    }
}

impl MetricTree {
    /// Midpoint of a longest vertex path, fixed by every isometry of the tree.
    pub fn center(&self) -> crate::space::TreePoint {
        let far = |from: usize| {
            let p = self.vertex(from);
            (0..self.vertex_count())
                .map(|v| (v, self.dist(&p, &self.vertex(v))))
                .fold((from, 0.0), |best, c| if c.1 > best.1 { c } else { best })
                .0
        };
        let a = far(0);
        let b = far(a);
        self.combine(&self.vertex(a), &self.vertex(b), 0.5)
    }
}
