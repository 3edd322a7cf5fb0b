//! Single-purpose checks behind the command-line subcommands.

use serde::Serialize;
use std::io::Write;

use super::{setup, ExperimentConfig};
use crate::error::Result;
use crate::iteration::km_iterate;
use crate::modulus::{check_modulus_inequalities, ModulusConfig, ModulusReport};
use crate::space::{
    build_space, check_ball_convexity, check_convexity_axioms, seeded_sampler, AnySpace, GeodesicSpace, SampleReport,
    SpaceConfig,
};

macro_rules! with_space {
    ($cfg:expr, $s:ident => $body:expr) => {
        match build_space($cfg)? {
            AnySpace::Euclidean($s) => $body,
            AnySpace::HyperbolicPlane($s) => $body,
            AnySpace::MetricTree($s) => $body,
        }
    };
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceCheck {
    pub reports: Vec<SampleReport>,
    pub pass: bool,
}

/// (W1)-(W4), the geodesic identity and ball convexity on `samples` draws.
pub fn check_space(space: &SpaceConfig, seed: u64, samples: usize, tol: Option<f64>) -> Result<SpaceCheck> {
    let reports = with_space!(space, s => {
        let tol = tol.unwrap_or_else(|| s.tolerance());
        let mut rng = seeded_sampler(seed);
        let mut r = check_convexity_axioms(&s, &mut rng, samples, tol);
        r.push(check_ball_convexity(&s, &mut rng, samples, tol));
        r
    });
    let pass = reports.iter().all(|r| r.pass);
    Ok(SpaceCheck { reports, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusCheck {
    pub modulus: String,
    pub reports: Vec<ModulusReport>,
    pub pass: bool,
}

/// The sampled modulus inequalities on one space.
pub fn check_modulus(
    space: &SpaceConfig,
    modulus: &ModulusConfig,
    seed: u64,
    samples: usize,
    tol: f64,
) -> Result<ModulusCheck> {
    let m = modulus.build()?;
    let reports = with_space!(space, s => check_modulus_inequalities(&s, &m, &mut seeded_sampler(seed), samples, tol));
    let pass = reports.iter().all(|r| r.pass);
    Ok(ModulusCheck {
        modulus: m.name,
        reports,
        pass,
    })
}

/// Declaration and sampled Lipschitz check of the configured mapping.
/// A failing sample check is returned as a hypothesis error.
pub fn check_mapping(cfg: &ExperimentConfig) -> Result<SampleReport> {
    cfg.validate()?;
    with_space!(&cfg.space, s => setup(&s, cfg).map(|st| st.mapping))
}

/// Runs the configured iteration and writes its residual CSV; returns the
/// number of rows.
pub fn iterate_to_csv<W: Write>(cfg: &ExperimentConfig, out: W) -> Result<usize> {
    cfg.validate()?;
    with_space!(&cfg.space, s => {
        let st = setup(&s, cfg)?;
        let trace = km_iterate(&s, &st.t, &cfg.schedule, &st.x0, cfg.steps, Some(&st.anchor))?;
        trace.write_csv(out)?;
        Ok(trace.points.len())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{default_matrix, ten_vertex_tree};

    #[test]
    fn spaces_and_moduli() {
        let r = check_space(&ten_vertex_tree(), 1, 300, None).unwrap();
        assert!(r.pass);
        assert_eq!(r.reports.len(), 6);
        let m = check_modulus(&SpaceConfig::hyperbolic_plane(), &ModulusConfig::default(), 2, 300, 1e-9).unwrap();
        assert!(m.pass, "{m:?}");
        let bad = ModulusConfig::Custom {
            name: "too-big".into(),
            eta: "eps/2".into(),
            eta_tilde: None,
            monotone: true,
        };
        assert!(!check_modulus(&SpaceConfig::euclidean(2), &bad, 2, 300, 1e-9).unwrap().pass);
    }

    #[test]
    fn iterate_writes_rows() {
        let mut cfg = default_matrix().remove(2);
        cfg.steps = 20;
        let mut buf = Vec::new();
        assert_eq!(iterate_to_csv(&cfg, &mut buf).unwrap(), 21);
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 22);
        assert!(check_mapping(&cfg).unwrap().pass);
    }
}
