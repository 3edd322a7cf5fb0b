use serde::{Deserialize, Serialize};

use super::{Euclidean, MetricTree, PoincareDisk};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceKind {
    Euclidean,
    HyperbolicPlane,
    MetricTree,
}

/// A vertex named either by string or by index into the vertex list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexRef {
    Index(usize),
    Name(String),
}

/// JSON space description.
///
/// ```json
/// {"kind": "metric-tree", "vertices": ["A", "B", "C"], "edges": [["A", "B", 1.0], ["B", "C", 2.0]]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub kind: SpaceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<(VertexRef, VertexRef, f64)>>,
}

impl SpaceConfig {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            kind: SpaceKind::Euclidean,
            dim: Some(dim),
            vertices: None,
            edges: None,
        }
    }

    pub fn hyperbolic_plane() -> Self {
        Self {
            kind: SpaceKind::HyperbolicPlane,
            dim: None,
            vertices: None,
            edges: None,
        }
    }

    pub fn metric_tree(vertices: &[&str], edges: &[(&str, &str, f64)]) -> Self {
        Self {
            kind: SpaceKind::MetricTree,
            dim: None,
            vertices: Some(vertices.iter().map(|s| s.to_string()).collect()),
            edges: Some(
                edges
                    .iter()
                    .map(|(u, v, w)| (VertexRef::Name(u.to_string()), VertexRef::Name(v.to_string()), *w))
                    .collect(),
            ),
        }
    }
}

/// One of the three built-in spaces.
#[derive(Debug, Clone)]
pub enum AnySpace {
    Euclidean(Euclidean),
    HyperbolicPlane(PoincareDisk),
    MetricTree(MetricTree),
}

pub fn build_space(config: &SpaceConfig) -> Result<AnySpace> {
    match config.kind {
        SpaceKind::Euclidean => {
            let dim = config
                .dim
                .ok_or_else(|| Error::Construction("euclidean space needs `dim`".into()))?;
            Ok(AnySpace::Euclidean(Euclidean::new(dim)?))
        }
        SpaceKind::HyperbolicPlane => Ok(AnySpace::HyperbolicPlane(PoincareDisk)),
        SpaceKind::MetricTree => {
            let edges = config
                .edges
                .as_ref()
                .ok_or_else(|| Error::Construction("metric tree needs `edges`".into()))?;
            let mut names: Vec<String> = config.vertices.clone().unwrap_or_default();
            let infer = config.vertices.is_none();
            let mut resolve = |r: &VertexRef| -> Result<usize> {
                match r {
                    VertexRef::Index(i) if *i < names.len() => Ok(*i),
                    VertexRef::Index(i) => Err(Error::Construction(format!(
                        "edge references vertex index {i}, only {} vertices",
                        names.len()
                    ))),
                    VertexRef::Name(s) => match names.iter().position(|n| n == s) {
                        Some(i) => Ok(i),
                        None if infer => {
                            names.push(s.clone());
                            Ok(names.len() - 1)
                        }
                        None => Err(Error::Construction(format!("edge references unknown vertex {s:?}"))),
                    },
                }
            };
            let mut resolved = Vec::with_capacity(edges.len());
            for (u, v, w) in edges {
                resolved.push((resolve(u)?, resolve(v)?, *w));
            }
            Ok(AnySpace::MetricTree(MetricTree::new(names, resolved)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::GeodesicSpace;

    #[test]
    fn parses_the_documented_shapes() {
        let cfg: SpaceConfig = serde_json::from_str(
            r#"{"kind": "metric-tree", "vertices": ["A","B","C"], "edges": [["A","B",1.0],["B","C",2.0]]}"#,
        )
        .unwrap();
        let AnySpace::MetricTree(t) = build_space(&cfg).unwrap() else { panic!() };
        assert_eq!(t.dist(&t.vertex(0), &t.vertex(2)), 3.0);

        let cfg: SpaceConfig = serde_json::from_str(r#"{"kind": "euclidean", "dim": 2}"#).unwrap();
        assert!(matches!(build_space(&cfg).unwrap(), AnySpace::Euclidean(_)));

        let cfg: SpaceConfig = serde_json::from_str(r#"{"kind": "hyperbolic-plane"}"#).unwrap();
        assert!(matches!(build_space(&cfg).unwrap(), AnySpace::HyperbolicPlane(_)));
    }

    #[test]
    fn index_edges_and_inferred_vertices() {
        let cfg: SpaceConfig =
            serde_json::from_str(r#"{"kind": "metric-tree", "edges": [["x","y",1.5],["y","z",0.5]]}"#)
                .unwrap();
        let AnySpace::MetricTree(t) = build_space(&cfg).unwrap() else { panic!() };
        assert_eq!(t.vertex_count(), 3);
        let cfg: SpaceConfig = serde_json::from_str(
            r#"{"kind": "metric-tree", "vertices": ["a","b"], "edges": [[0, 1, 2.0]]}"#,
        )
        .unwrap();
        assert!(build_space(&cfg).is_ok());
    }

    #[test]
    fn zero_weight_is_rejected() {
        let cfg = SpaceConfig::metric_tree(&["A", "B"], &[("A", "B", 0.0)]);
        assert!(matches!(build_space(&cfg), Err(Error::Construction(_))));
        let cfg = SpaceConfig::metric_tree(&["A", "B"], &[("A", "Q", 1.0)]);
        assert!(build_space(&cfg).is_err());
        assert!(build_space(&SpaceConfig { dim: None, ..SpaceConfig::euclidean(1) }).is_err());
    }
}
