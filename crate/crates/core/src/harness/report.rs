use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{phi_string, ExperimentReport};
use crate::bounds::{
    check_candidate_shape, find_metastable_window, metastable_step_fn, CandidateCheck, CounterexampleFn, WindowScan,
};
use crate::error::{Error, Result};
use crate::iteration::TraceRow;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::config(format!("unknown format {s:?}; expected json or csv"))),
        }
    }
}

#[derive(Serialize)]
struct CsvRow<'a> {
    id: &'a str,
    eps: f64,
    g: &'a str,
    n_emp: Option<u64>,
    variant: String,
    #[serde(rename = "M")]
    m: String,
    #[serde(rename = "Phi")]
    phi: String,
    within_bound: Option<bool>,
    candidate_shape: &'static str,
    pass: bool,
}

/// Writes `report.json` or `summary.csv` into `dir` and returns its path.
pub fn emit_report(rep: &ExperimentReport, format: Format, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    match format {
        Format::Json => {
            let path = dir.join("report.json");
            let mut text = serde_json::to_string_pretty(rep)?;
            text.push('\n');
            fs::write(&path, text)?;
            Ok(path)
        }
        Format::Csv => {
            let path = dir.join("summary.csv");
            let mut w = csv::Writer::from_path(&path)?;
            for row in &rep.rows {
                for v in &row.variants {
                    w.serialize(CsvRow {
                        id: &rep.id,
                        eps: row.eps,
                        g: &row.g,
                        n_emp: row.window.n(),
                        variant: v.variant.to_string(),
                        m: v.bound.m.to_string(),
                        phi: phi_string(&v.bound.phi),
                        within_bound: v.within_bound,
                        candidate_shape: match v.candidate_shape {
                            None => "",
                            Some(CandidateCheck::Confirmed { .. }) => "confirmed",
                            Some(CandidateCheck::Inconclusive { .. }) => "inconclusive",
                            Some(CandidateCheck::Failed { .. }) => "failed",
                        },
                        pass: row.pass,
                    })?;
                }
            }
            w.flush()?;
            Ok(path)
        }
    }
}

/// Outcome of re-deriving a report's verdicts from its JSON and residual CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecheckSummary {
    pub rows_checked: usize,
    pub mismatches: Vec<String>,
}

impl RecheckSummary {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| Error::config(format!("report lacks field {key:?}")))
}

/// `n ≤ Φ`, with `Φ` either a decimal string or `{"log2_at_least": x}`; the
/// latter is decided by iterating the step function.
fn covers(phi: &Value, m: &BigUint, g: &CounterexampleFn, n: u64) -> Result<bool> {
    let target = BigUint::from(n);
    if let Some(s) = phi.as_str() {
        let p: BigUint = s.parse().map_err(|_| Error::config(format!("Phi {s:?} is not a decimal")))?;
        return Ok(target <= p);
    }
    let h = metastable_step_fn(g);
    let mut v = BigUint::from(0u32);
    let mut i = BigUint::from(0u32);
    while &i < m && v < target {
        v = h(&v);
        i += 1u32;
    }
    Ok(v >= target)
}

/// Re-scans the residuals for every row of a JSON report and recomputes the
/// window, `N ≤ Φ`, the candidate check and the row verdict.
pub fn recheck_report(report: &Value, residuals: &[TraceRow]) -> Result<RecheckSummary> {
    let r: Vec<f64> = residuals.iter().map(|row| row.residual).collect();
    let steps = field(report, "steps")?
        .as_u64()
        .ok_or_else(|| Error::config("steps is not an integer"))? as usize;
    if r.len() != steps + 1 {
        return Err(Error::config(format!(
            "residual file has {} rows, the report ran {steps} steps",
            r.len()
        )));
    }
    let mut mismatches = Vec::new();
    let rows = field(report, "rows")?
        .as_array()
        .ok_or_else(|| Error::config("rows is not an array"))?;
    for row in rows {
        let eps = field(row, "eps")?.as_f64().ok_or_else(|| Error::config("eps is not a number"))?;
        let gs = field(row, "g")?.as_str().ok_or_else(|| Error::config("g is not a string"))?;
        let g = CounterexampleFn::parse(gs)?;
        let tag = format!("eps={eps} g={gs}");
        let stored: WindowScan = serde_json::from_value(field(row, "window")?.clone())?;
        let window = find_metastable_window(&r, eps, &g, steps);
        if window != stored {
            mismatches.push(format!("{tag}: window {stored:?} re-scans as {window:?}"));
        }
        let mut pass = window.n().is_some();
        for v in field(row, "variants")?.as_array().into_iter().flatten() {
            let bound = field(v, "bound")?;
            let m: BigUint = field(bound, "M")?
                .as_str()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::config("M is not a decimal string"))?;
            let within = window.n().map(|n| covers(field(bound, "Phi")?, &m, &g, n)).transpose()?;
            if Some(&serde_json::to_value(within)?) != v.get("within_bound") {
                mismatches.push(format!("{tag}: N ≤ Φ recomputes as {within:?}"));
            }
            let shape = window
                .n()
                .map(|n| check_candidate_shape(&r, eps, &g, metastable_step_fn(&g), &m, n));
            if Some(&serde_json::to_value(&shape)?) != v.get("candidate_shape") {
                mismatches.push(format!("{tag}: candidate check recomputes as {shape:?}"));
            }
            let precision = field(v, "anchor_precision_ok")?.as_bool().unwrap_or(false);
            pass &= within == Some(true) && precision && !matches!(shape, Some(CandidateCheck::Failed { .. }));
        }
        if Some(&Value::Bool(pass)) != row.get("pass") {
            mismatches.push(format!("{tag}: verdict recomputes as {pass}"));
        }
    }
    Ok(RecheckSummary {
        rows_checked: rows.len(),
        mismatches,
    })
}
