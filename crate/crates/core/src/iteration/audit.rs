use serde::{Deserialize, Serialize};

use super::{AnchorPoint, Mapping, Trace};
use crate::error::{Error, Result};
use crate::space::GeodesicSpace;

/// Recomputed points must match the recorded ones this closely.
const INTEGRITY_TOL: f64 = 1e-12;

/// Worst case of one inequality family over a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditFamily {
    pub label: String,
    /// Steps at which the inequality was applicable.
    pub checks: usize,
    pub max_violation: f64,
    /// Smallest `rhs - lhs` seen; `None` when nothing was checked.
    pub min_margin: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl AuditFamily {
    fn new(label: &str, tolerance: f64) -> Self {
        Self {
            label: label.into(),
            checks: 0,
            max_violation: 0.0,
            min_margin: None,
            tolerance,
            pass: true,
        }
    }

    /// Records `lhs ≤ rhs`.
    fn check(&mut self, lhs: f64, rhs: f64) {
        self.checks += 1;
        let margin = rhs - lhs;
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        self.min_margin = Some(self.min_margin.map_or(margin, |m| m.min(margin)));
        if -margin > self.max_violation {
            self.max_violation = -margin;
        }
        self.pass = self.max_violation <= self.tolerance;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub families: Vec<AuditFamily>,
    pub pass: bool,
}

impl AuditReport {
    pub fn family(&self, label: &str) -> Option<&AuditFamily> {
        self.families.iter().find(|f| f.label == label)
    }
}

/// Re-derives every step of `trace` and checks, with slack `tol`:
///
/// - `power-residual-step`: `d(Tⁿx_{n+1}, x_{n+1}) ≤ (1+k_n) d(Tⁿx_n, x_n)`;
/// - `residual-transfer`: `d(x_{n+1}, Tx_{n+1}) ≤ d(T^{n+1}x_{n+1}, x_{n+1}) + (1+K)² d(Tⁿx_n, x_n)`;
/// - `anchored-recurrence`: `a_{n+1} ≤ (1+k_n) a_n + Σ_{i<n}(1+k_i) δ` with `a_n = d(x_n, p)`;
/// - `anchor-drift`: `d(Tⁿp, p) ≤ Σ_{i<n}(1+k_i) d(Tp, p)`;
/// - `two-step-estimate`: for each `α`, whenever `d(x_i,p) < α` or `d(Tⁱx_i,x_i) < α`
///   for both `i = n` and `i = n+1`,
///   `d(x_{n+1}, Tx_{n+1}) < (1+(1+K)²(2+K))α + (1+K)²γ` with `γ = max(d(Tp,p), d(Tⁿp,p))`;
/// - `two-step-estimate-stated`: the same with `(1+K²)γ`.
///
/// A recorded point or residual that cannot be reproduced is an integrity error.
pub fn trace_inequality_audit<S: GeodesicSpace>(
    space: &S,
    t: &Mapping<S::Point>,
    trace: &Trace<S::Point>,
    anchor: &AnchorPoint<S::Point>,
    k_cap: f64,
    alphas: &[f64],
    tol: f64,
) -> Result<AuditReport> {
    let s = trace.steps();
    for n in 0..=s {
        if t.k_at(n) > k_cap + super::INPUT_TOL {
            return Err(Error::Hypothesis(format!("k_{n} = {} exceeds K = {k_cap}", t.k_at(n))));
        }
    }
    let p = &anchor.point;
    let mut tnp = p.clone();
    let mut drift = Vec::with_capacity(s + 1);
    for _ in 0..=s {
        drift.push(space.dist(&tnp, p));
        tnp = t.apply(&tnp);
    }
    let dtp = if s >= 1 { drift[1] } else { space.dist(&t.apply(p), p) };
    let a: Vec<f64> = trace.points.iter().map(|x| space.dist(x, p)).collect();
    let pr = &trace.power_residuals;
    let res = &trace.residuals;
    let kk = (1.0 + k_cap) * (1.0 + k_cap);
    let alpha_coef = 1.0 + kk * (2.0 + k_cap);

    let mut step = AuditFamily::new("power-residual-step", tol);
    let mut transfer = AuditFamily::new("residual-transfer", tol);
    let mut recur = AuditFamily::new("anchored-recurrence", tol);
    let mut drift_f = AuditFamily::new("anchor-drift", tol);
    let mut two = AuditFamily::new("two-step-estimate", tol);
    let mut stated = AuditFamily::new("two-step-estimate-stated", tol);

    // Σ_{i<n} (1 + k_i)
    let mut weight = 0.0;
    for n in 0..=s {
        let x = &trace.points[n];
        let tnx = t.apply_power(n, x);
        let got = space.dist(&tnx, x);
        if (got - pr[n]).abs() > INTEGRITY_TOL || (space.dist(x, &t.apply(x)) - res[n]).abs() > INTEGRITY_TOL {
            return Err(Error::Integrity {
                step: n,
                detail: "recorded residuals do not match the mapping".into(),
            });
        }
        if n >= 1 {
            drift_f.check(drift[n], weight * dtp);
        }
        if n == s {
            break;
        }
        let rebuilt = space.combine(x, &tnx, trace.lambdas[n]);
        let y = &trace.points[n + 1];
        let off = space.dist(&rebuilt, y);
        if !(off <= INTEGRITY_TOL) {
            return Err(Error::Integrity {
                step: n + 1,
                detail: format!("x_{} differs from W(x_n, Tⁿx_n, λ_n) by {off}", n + 1),
            });
        }
        let k = t.k_at(n);
        step.check(space.dist(&t.apply_power(n, y), y), (1.0 + k) * pr[n]);
        transfer.check(res[n + 1], pr[n + 1] + kk * pr[n]);
        recur.check(a[n + 1], (1.0 + k) * a[n] + weight * anchor.delta);
        let gamma = dtp.max(drift[n]);
        for &alpha in alphas {
            let premise = (a[n] < alpha || pr[n] < alpha) && (a[n + 1] < alpha || pr[n + 1] < alpha);
            if premise {
                two.check(res[n + 1], alpha_coef * alpha + kk * gamma);
                stated.check(res[n + 1], alpha_coef * alpha + (1.0 + k_cap * k_cap) * gamma);
            }
        }
        weight += 1.0 + k;
    }
    let families = vec![step, transfer, recur, drift_f, two, stated];
    let pass = families.iter().all(|f| f.pass);
    Ok(AuditReport { families, pass })
}
