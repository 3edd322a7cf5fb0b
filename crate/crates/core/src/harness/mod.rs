//! Configuration-driven experiments: hypothesis checks, iteration, audits,
//! bounds and window scans, with reports written to disk.

mod commands;
mod config;
mod report;
mod suite;

pub use commands::{check_mapping, check_modulus, check_space, iterate_to_csv, ModulusCheck, SpaceCheck};
pub use config::{default_matrix, generate_g, ten_vertex_tree, AnchorSpec, Checks, ExperimentConfig, Tolerances};
pub use report::{emit_report, recheck_report, Format, RecheckSummary};
pub use suite::{soundness_suite, RowStatus, SuiteRow, SuiteSummary};

use num_traits::ToPrimitive;
use serde::Serialize;
use serde_json::Value;
use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::{Mutex, OnceLock};

use crate::bounds::{
    anchor_precision_ok, check_candidate_shape, compute_phi_metastable, find_metastable_window, BigValue, BoundInputs,
    BoundReport, Budget, CandidateCheck, Constant, WindowScan,
};
use crate::error::{Error, Result};
use crate::exact::rational_from_f64;
use crate::modulus::Modulus;
use crate::iteration::{
    km_iterate, residual, trace_inequality_audit, validate_mapping, AnchorPoint, AuditReport, Fixed, Mapping, MappingSpace,
};
use crate::space::{build_space, check_convexity_axioms, seeded_sampler, AnySpace, GeodesicSpace, SampleReport};

pub const RESIDUALS_CSV: &str = "residuals.csv";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fingerprint {
    pub seed: u64,
    pub version: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnchorRecord {
    pub point: Value,
    pub start: Value,
    pub b: f64,
    /// `d(Tp, p)`.
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypotheses {
    pub axioms: Vec<SampleReport>,
    pub mapping: SampleReport,
    #[serde(rename = "K")]
    pub k_cap: f64,
    #[serde(rename = "L")]
    pub l: u64,
    pub anchor: AnchorRecord,
}

#[derive(Debug, Clone, Serialize)]
pub struct VariantResult {
    pub variant: Constant,
    pub bound: BoundReport,
    /// `N_emp ≤ Φ`, when a window was found.
    pub within_bound: Option<bool>,
    pub candidate_shape: Option<CandidateCheck>,
    pub anchor_precision_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentRow {
    pub eps: f64,
    pub g: String,
    pub window: WindowScan,
    pub variants: Vec<VariantResult>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub created_unix_ms: u128,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub id: String,
    pub fingerprint: Fingerprint,
    pub config: ExperimentConfig,
    pub hypotheses: Hypotheses,
    pub steps: usize,
    pub final_residual: f64,
    pub audit: AuditReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals_csv: Option<String>,
    pub rows: Vec<ExperimentRow>,
    pub pass: bool,
    /// The only field that differs between identical runs.
    pub metadata: Metadata,
}

impl ExperimentReport {
    pub fn row(&self, eps: f64, g: &str) -> Option<&ExperimentRow> {
        self.rows.iter().find(|r| r.eps == eps && r.g == g)
    }
}

type AxiomKey = (String, u64, usize, u64);

fn axiom_cache() -> &'static Mutex<HashMap<AxiomKey, Vec<SampleReport>>> {
    static CACHE: OnceLock<Mutex<HashMap<AxiomKey, Vec<SampleReport>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Axiom reports for a space, computed once per (space, seed, samples, tolerance).
fn cached_axioms<S: GeodesicSpace>(space: &S, cfg: &ExperimentConfig) -> Result<Vec<SampleReport>> {
    let tol = cfg.tolerances.axioms.unwrap_or_else(|| space.tolerance());
    let key = (
        serde_json::to_string(&cfg.space)?,
        cfg.seed,
        cfg.checks.axiom_samples,
        tol.to_bits(),
    );
    if let Some(hit) = axiom_cache().lock().expect("cache lock").get(&key) {
        return Ok(hit.clone());
    }
    let reports = check_convexity_axioms(space, &mut seeded_sampler(cfg.seed), cfg.checks.axiom_samples, tol);
    axiom_cache().lock().expect("cache lock").insert(key, reports.clone());
    Ok(reports)
}

/// `b ≥ d` with a short decimal form.
fn anchor_radius(d: f64) -> f64 {
    if d <= 0.0 {
        return 1.0;
    }
    let mut b = (d * 1e6).ceil() / 1e6;
    while b < d {
        b += 1e-6;
    }
    b
}

/// Runs one experiment; with `out`, writes the residual CSV into that directory.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentReport> {
    cfg.validate()?;
    match build_space(&cfg.space)? {
        AnySpace::Euclidean(s) => run_in(&s, cfg, out),
        AnySpace::HyperbolicPlane(s) => run_in(&s, cfg, out),
        AnySpace::MetricTree(s) => run_in(&s, cfg, out),
    }
}

/// Everything fixed before iterating: the checked mapping, start and anchor.
pub(crate) struct Setup<P> {
    pub t: Mapping<P>,
    pub modulus: Modulus,
    pub axioms: Vec<SampleReport>,
    pub mapping: SampleReport,
    pub x0: P,
    pub anchor: AnchorPoint<P>,
}

/// Builds the mapping and checks every hypothesis that does not need the orbit.
pub(crate) fn setup<S: MappingSpace>(space: &S, cfg: &ExperimentConfig) -> Result<Setup<S::Point>> {
    let modulus = cfg.modulus.build()?;
    let t = space.build_mapping(&cfg.mapping)?;
    t.check_declaration(None)?;
    cfg.schedule.check(cfg.steps as u64 + 1)?;

    let axioms = cached_axioms(space, cfg)?;
    if let Some(bad) = axioms.iter().find(|r| !r.pass) {
        return Err(Error::Hypothesis(format!(
            "space axiom {} fails with violation {:e}",
            bad.label, bad.max_violation
        )));
    }
    let mut rng = seeded_sampler(cfg.seed);
    let mapping = validate_mapping(
        space,
        &t,
        &mut rng,
        cfg.checks.mapping_powers,
        cfg.checks.mapping_pairs,
        cfg.tolerances.mapping,
    );
    if !mapping.pass {
        return Err(Error::Hypothesis(format!(
            "mapping {}: declared k_n fails, |Tⁿx − Tⁿy| exceeds (1 + k_n)|x − y| by {:e}",
            t.name, mapping.max_violation
        )));
    }

    let x0 = match &cfg.start {
        Some(v) => space.point_from_json(v)?,
        None => space.sample_point(&mut rng),
    };
    let (p, b) = match &cfg.anchor {
        AnchorSpec::Named(n) if n == "origin" => (space.base_point(), None),
        AnchorSpec::Named(_) => match &t.fixed {
            Fixed::At(p) => (p.clone(), None),
            Fixed::Everywhere => (x0.clone(), None),
            Fixed::Unknown => {
                return Err(Error::config(format!(
                    "mapping {} has no known fixed point; give an anchor point",
                    t.name
                )))
            }
        },
        AnchorSpec::Point { point, b } => (space.point_from_json(point)?, *b),
    };
    let b = b.unwrap_or_else(|| anchor_radius(space.dist(&x0, &p)));
    let delta = residual(space, &t, &p);
    let anchor = AnchorPoint::new(space, &t, &x0, p, b, delta)?;
    Ok(Setup {
        t,
        modulus,
        axioms,
        mapping,
        x0,
        anchor,
    })
}

fn run_in<S: MappingSpace>(space: &S, cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentReport> {
    let Setup {
        t,
        modulus,
        axioms,
        mapping,
        x0,
        anchor,
    } = setup(space, cfg)?;
    let (b, delta) = (anchor.b, anchor.delta);

    let trace = km_iterate(space, &t, &cfg.schedule, &x0, cfg.steps, Some(&anchor))?;
    let audit = trace_inequality_audit(space, &t, &trace, &anchor, t.cap, &cfg.eps, cfg.tolerances.audit)?;

    let residuals_csv = match out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            trace.write_csv(fs::File::create(dir.join(RESIDUALS_CSV))?)?;
            Some(RESIDUALS_CSV.to_string())
        }
        None => None,
    };

    let budget = Budget {
        steps: cfg.budget.unwrap_or(Budget::default().steps),
        ..Budget::default()
    };
    let k = rational_from_f64(t.cap)?;
    let b_q = rational_from_f64(b)?;
    let mut rows = Vec::new();
    for &eps in &cfg.eps {
        for (gs, g) in cfg.g.iter().zip(cfg.g_functions()?) {
            let window = find_metastable_window(&trace.residuals, eps, &g, cfg.steps);
            let mut variants = Vec::new();
            for &v in &cfg.variants {
                let inp = BoundInputs::from_rationals(
                    k.clone(),
                    cfg.schedule.cap,
                    b_q.clone(),
                    rational_from_f64(eps)?,
                    g.clone(),
                    modulus.clone(),
                )?
                .with_eta_tilde(cfg.eta_tilde)
                .with_constant(v)
                .with_budget(budget);
                let bound = compute_phi_metastable(&inp)?;
                let n = window.n();
                variants.push(VariantResult {
                    variant: v,
                    within_bound: n.map(|n| bound.covers(n)),
                    candidate_shape: n.map(|n| {
                        check_candidate_shape(&trace.residuals, eps, &g, |x| bound.h(x), &bound.m, n)
                    }),
                    anchor_precision_ok: anchor_precision_ok(delta, &bound.phi, t.cap),
                    bound,
                });
            }
            let pass = window.n().is_some()
                && variants.iter().all(|v| {
                    v.within_bound == Some(true)
                        && v.anchor_precision_ok
                        && !matches!(v.candidate_shape, Some(CandidateCheck::Failed { .. }))
                });
            rows.push(ExperimentRow {
                eps,
                g: gs.clone(),
                window,
                variants,
                pass,
            });
        }
    }
    let pass = audit.pass && rows.iter().all(|r| r.pass);
    Ok(ExperimentReport {
        id: cfg.id().to_string(),
        fingerprint: Fingerprint {
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION"),
        },
        config: cfg.clone(),
        hypotheses: Hypotheses {
            axioms,
            mapping,
            k_cap: t.cap,
            l: cfg.schedule.cap,
            anchor: AnchorRecord {
                point: space.point_to_json(&anchor.point),
                start: space.point_to_json(&x0),
                b,
                delta,
            },
        },
        steps: cfg.steps,
        final_residual: *trace.residuals.last().expect("at least one step"),
        audit,
        residuals_csv,
        rows,
        pass,
        metadata: Metadata {
            created_unix_ms: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        },
    })
}

/// `Φ` as a short string: the decimal value, or `>=2^x` when not materialized.
pub fn phi_string(phi: &BigValue) -> String {
    match phi {
        BigValue::Exact(v) => v.to_string(),
        BigValue::Huge { log2_at_least } => format!(">=2^{}", log2_at_least.floor().to_u64().unwrap_or(u64::MAX)),
    }
}
