use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{emit_report, phi_string, run_experiment, ExperimentConfig, Format};
use crate::bounds::Constant;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RowStatus {
    Pass,
    Fail,
    /// A hypothesis of the bound fails; the row does not count either way.
    HypothesisFailure,
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub id: String,
    pub eps: Option<f64>,
    pub g: Option<String>,
    pub n_emp: Option<u64>,
    pub phi_paper: Option<String>,
    pub phi_strict: Option<String>,
    pub audit_pass: Option<bool>,
    pub status: RowStatus,
    pub detail: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub rows: Vec<SuiteRow>,
    pub pass: bool,
}

impl SuiteSummary {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn run_one(i: usize, cfg: &ExperimentConfig, out: Option<&Path>) -> Vec<SuiteRow> {
    let id = cfg.id.clone().unwrap_or_else(|| format!("config-{i}"));
    let dir = out.map(|o| o.join(&id));
    let failed = |status, detail: String| {
        vec![SuiteRow {
            id: id.clone(),
            eps: None,
            g: None,
            n_emp: None,
            phi_paper: None,
            phi_strict: None,
            audit_pass: None,
            status,
            detail: Some(detail),
        }]
    };
    let rep = match run_experiment(cfg, dir.as_deref()) {
        Ok(rep) => rep,
        Err(e @ Error::Hypothesis(_)) => return failed(RowStatus::HypothesisFailure, e.to_string()),
        Err(e) => return failed(RowStatus::Error, e.to_string()),
    };
    if let Some(d) = &dir {
        if let Err(e) = emit_report(&rep, Format::Json, d) {
            return failed(RowStatus::Error, e.to_string());
        }
    }
    let phi_of = |row: &super::ExperimentRow, c: Constant| {
        row.variants
            .iter()
            .find(|v| v.variant == c)
            .map(|v| phi_string(&v.bound.phi))
    };
    rep.rows
        .iter()
        .map(|row| SuiteRow {
            id: id.clone(),
            eps: Some(row.eps),
            g: Some(row.g.clone()),
            n_emp: row.window.n(),
            phi_paper: phi_of(row, Constant::Paper),
            phi_strict: phi_of(row, Constant::Strict),
            audit_pass: Some(rep.audit.pass),
            status: if row.pass && rep.audit.pass {
                RowStatus::Pass
            } else {
                RowStatus::Fail
            },
            detail: None,
        })
        .collect()
}

/// Runs every config in parallel. The suite passes when no row fails;
/// hypothesis failures are reported but excluded from the verdict.
pub fn soundness_suite(matrix: &[ExperimentConfig], out: Option<&Path>) -> SuiteSummary {
    let rows: Vec<SuiteRow> = matrix
        .par_iter()
        .enumerate()
        .map(|(i, cfg)| run_one(i, cfg, out))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    let pass = rows
        .iter()
        .all(|r| matches!(r.status, RowStatus::Pass | RowStatus::HypothesisFailure));
    SuiteSummary { rows, pass }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::default_matrix;
    use crate::iteration::{KSequence, MapSpec, MappingConfig};

    #[test]
    fn empty_matrix_passes_vacuously() {
        let s = soundness_suite(&[], None);
        assert!(s.rows.is_empty() && s.pass);
    }

    #[test]
    fn failing_declaration_is_excluded() {
        let mut bad = default_matrix().remove(1);
        bad.id = Some("bad".into());
        bad.mapping = MapSpec::new(MappingConfig::Scaling { factor: 2.0 }, KSequence::Zero, None);
        let mut good = default_matrix().remove(1);
        good.steps = 200;
        let s = soundness_suite(&[bad, good], None);
        assert_eq!(s.rows[0].status, RowStatus::HypothesisFailure);
        assert!(s.rows[1..].iter().all(|r| r.status == RowStatus::Pass), "{:#?}", s.rows);
        assert!(s.pass);
    }
}
