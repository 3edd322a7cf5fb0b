use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bounds::{Constant, CounterexampleFn};
use crate::error::{Error, Result};
use crate::iteration::{KSequence, MapSpec, MappingConfig, Schedule};
use crate::modulus::ModulusConfig;
use crate::space::{SpaceConfig, VertexRef};

/// Where the anchor `p` comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AnchorSpec {
    /// `"origin"` (the space's base point) or `"fixed"` (the mapping's known fixed point).
    Named(String),
    Point {
        point: Value,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b: Option<f64>,
    },
}

impl Default for AnchorSpec {
    fn default() -> Self {
        AnchorSpec::Named("fixed".into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub audit: f64,
    pub mapping: f64,
    /// Axiom slack; the space's own default when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axioms: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            audit: 1e-9,
            mapping: 1e-9,
            axioms: None,
        }
    }
}

/// Sample sizes of the hypothesis checks run before iterating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub axiom_samples: usize,
    pub mapping_pairs: usize,
    pub mapping_powers: usize,
}

impl Default for Checks {
    fn default() -> Self {
        Self {
            axiom_samples: 1000,
            mapping_pairs: 64,
            mapping_powers: 32,
        }
    }
}

fn default_g() -> Vec<String> {
    vec!["zero".into()]
}

fn default_variants() -> Vec<Constant> {
    vec![Constant::Paper, Constant::Strict]
}

/// One experiment, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub space: SpaceConfig,
    pub mapping: MapSpec,
    pub schedule: Schedule,
    /// Starting point; drawn from the seeded sampler when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Value>,
    #[serde(default)]
    pub anchor: AnchorSpec,
    pub eps: Vec<f64>,
    #[serde(default = "default_g")]
    pub g: Vec<String>,
    pub steps: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_variants")]
    pub variants: Vec<Constant>,
    #[serde(default)]
    pub modulus: ModulusConfig,
    #[serde(default)]
    pub eta_tilde: bool,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub checks: Checks,
    /// Step budget for iterating bound step functions.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("experiment config: {e}")))
    }

    pub fn id(&self) -> &str {
        self.id.as_deref().unwrap_or("experiment")
    }

    /// Parsed counterexample functions, in order.
    pub fn g_functions(&self) -> Result<Vec<CounterexampleFn>> {
        self.g.iter().map(|s| generate_g(s)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.eps.is_empty() {
            return Err(Error::config("eps list is empty"));
        }
        if let Some(e) = self.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::config(format!("ε = {e} is outside (0, 1]")));
        }
        if self.steps == 0 {
            return Err(Error::config("steps must be at least 1"));
        }
        if self.g.is_empty() {
            return Err(Error::config("g list is empty"));
        }
        if self.variants.is_empty() {
            return Err(Error::config("no bound variant requested"));
        }
        self.g_functions()?;
        if let AnchorSpec::Named(n) = &self.anchor {
            if n != "origin" && n != "fixed" {
                return Err(Error::config(format!(
                    "anchor {n:?} must be \"origin\", \"fixed\" or {{\"point\": …}}"
                )));
            }
        }
        Ok(())
    }
}

/// Parses the counterexample-function mini-language.
pub fn generate_g(spec: &str) -> Result<CounterexampleFn> {
    CounterexampleFn::parse(spec)
}

/// The 10-vertex tree: three identical arms `c–x1–x2–x3` of lengths 1, 0.5, 2.
pub fn ten_vertex_tree() -> SpaceConfig {
    SpaceConfig::metric_tree(
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
    )
}

fn arm_rotation() -> MappingConfig {
    let cyc = |xs: [&str; 3]| xs.iter().map(|s| VertexRef::Name(s.to_string())).collect();
    MappingConfig::Rotation {
        angle: None,
        cycles: Some(vec![cyc(["a1", "b1", "d1"]), cyc(["a2", "b2", "d2"]), cyc(["a3", "b3", "d3"])]),
    }
}

/// The soundness matrix: euclidean(2), the hyperbolic plane and the 10-vertex
/// tree, each with a rotation-type isometry (declared `k_n = 2^{-n-1}`, `K = 1`)
/// and a contraction toward a point (`k ≡ 0`); `ε ∈ {0.1, 0.01}`,
/// `g ∈ {zero, linear:1,0}`, `λ_n ≡ 1/2`.
pub fn default_matrix() -> Vec<ExperimentConfig> {
    let spaces = [
        ("euclidean2", SpaceConfig::euclidean(2)),
        ("hyperbolic", SpaceConfig::hyperbolic_plane()),
        ("tree10", ten_vertex_tree()),
    ];
    let mut out = Vec::new();
    for (i, (sname, space)) in spaces.into_iter().enumerate() {
        let rotation = if sname == "tree10" {
            arm_rotation()
        } else {
            MappingConfig::Rotation {
                angle: Some(1.0),
                cycles: None,
            }
        };
        let maps = [
            ("rotation", MapSpec::new(rotation, KSequence::halving(), Some(1.0))),
            (
                "toward",
                MapSpec::new(MappingConfig::Toward { point: None, step: 0.25 }, KSequence::Zero, Some(0.0)),
            ),
        ];
        for (j, (mname, mapping)) in maps.into_iter().enumerate() {
            out.push(ExperimentConfig {
                id: Some(format!("{sname}-{mname}")),
                space: space.clone(),
                mapping,
                schedule: Schedule::constant(0.5, 2),
                start: None,
                anchor: AnchorSpec::default(),
                eps: vec![0.1, 0.01],
                g: vec!["zero".into(), "linear:1,0".into()],
                steps: 2000,
                seed: 1000 + 10 * i as u64 + j as u64,
                variants: default_variants(),
                modulus: ModulusConfig::default(),
                eta_tilde: false,
                tolerances: Tolerances::default(),
                checks: Checks::default(),
                budget: None,
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json() {
        let cfg = ExperimentConfig::from_json(
            r#"{"space": {"kind": "euclidean", "dim": 2},
                "mapping": {"name": "rotation", "angle": 1.0, "k": {"geometric": {"first": 0.5, "ratio": 0.5}}, "K": 1.0},
                "schedule": {"lambda": 0.5, "L": 2},
                "eps": [0.1], "steps": 100}"#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.anchor, AnchorSpec::Named("fixed".into()));
        assert_eq!(cfg.variants, vec![Constant::Paper, Constant::Strict]);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = default_matrix().remove(0);
        cfg.eps = vec![1.5];
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = default_matrix().remove(0);
        cfg.g = vec!["linear:1".into()];
        assert!(matches!(cfg.validate(), Err(Error::Parse { .. })));
        let mut cfg = default_matrix().remove(0);
        cfg.anchor = AnchorSpec::Named("somewhere".into());
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::from_json(r#"{"space": 3}"#).is_err());
    }

    #[test]
    fn matrix_shape() {
        let m = default_matrix();
        assert_eq!(m.len(), 6);
        assert_eq!(m.iter().map(|c| c.eps.len()).sum::<usize>(), 12);
        for c in &m {
            c.validate().unwrap();
        }
        assert_eq!(generate_g("linear:2,3").unwrap().eval_u64(5), 13u32.into());
    }
}
