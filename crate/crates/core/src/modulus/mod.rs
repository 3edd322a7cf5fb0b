//! Moduli of uniform convexity and the combination bounds they imply.

mod expr;
mod verify;

pub use expr::Expr;
pub use verify::{check_modulus_inequalities, verify_modulus, ModulusReport, Witness};

use num_rational::BigRational;
use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{int, rational_from_f64, Interval};

/// Radius grid used by [`verify_monotone`] when no grid is given.
pub const R_GRID: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
/// Separation grid used by [`verify_monotone`] and [`verify_factorization`].
pub const EPS_GRID: [f64; 6] = [0.01, 0.1, 0.5, 1.0, 1.5, 2.0];

/// A modulus `η(r, ε)` given by rational expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulus {
    pub name: String,
    pub eta: Expr,
    /// `η̃` with `η(r, ε) = ε η̃(r, ε)`.
    pub eta_tilde: Option<Expr>,
    /// Declared: nonincreasing in `r` at fixed `ε`.
    pub monotone: bool,
}

/// A modulus value together with whether it had to be clamped to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eta {
    pub value: f64,
    pub clamped: bool,
}

/// The CAT(0) modulus `η(r, ε) = ε²/8`, constant in `r`, with `η̃ = ε/8`.
pub fn cat0_modulus() -> Modulus {
    Modulus {
        name: "cat0".into(),
        eta: Expr::parse("eps^2/8").expect("literal"),
        eta_tilde: Some(Expr::parse("eps/8").expect("literal")),
        monotone: true,
    }
}

fn check_domain(r: f64, eps: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::domain(format!("modulus radius must be positive, got {r}")));
    }
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::domain(format!("modulus ε must lie in (0, 2], got {eps}")));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::domain(format!("λ must lie in [0, 1], got {lambda}")));
    }
    Ok(())
}

impl Modulus {
    pub fn custom(name: &str, eta: &str, eta_tilde: Option<&str>, monotone: bool) -> Result<Self> {
        Ok(Self {
            name: name.into(),
            eta: Expr::parse(eta)?,
            eta_tilde: eta_tilde.map(Expr::parse).transpose()?,
            monotone,
        })
    }

    /// `η(r, ε)`, clamped to 1 from above. Nonpositive values are a domain error.
    pub fn eval(&self, r: f64, eps: f64) -> Result<Eta> {
        check_domain(r, eps)?;
        clamp_value(self.eta.eval_f64(r, eps), &self.name, r, eps)
    }

    pub fn eval_tilde(&self, r: f64, eps: f64) -> Result<f64> {
        check_domain(r, eps)?;
        let t = self
            .eta_tilde
            .as_ref()
            .ok_or_else(|| Error::config(format!("modulus {} has no η̃ factorization", self.name)))?;
        let v = t.eval_f64(r, eps);
        if !(v > 0.0) {
            return Err(Error::domain(format!("η̃({r}, {eps}) = {v} is not positive")));
        }
        Ok(v)
    }

    /// `η(r, ε)` exactly, clamped to 1.
    pub fn eval_rational(&self, r: &BigRational, eps: &BigRational) -> Result<BigRational> {
        check_rational_domain(r, eps)?;
        let v = self.eta.eval_rational(r, eps)?;
        if !v.is_positive() {
            return Err(Error::domain(format!("{}({r}, {eps}) = {v} is not positive", self.name)));
        }
        Ok(v.min(BigRational::one()))
    }

    /// An enclosure of `η` (or `η̃` when `tilde`) over the given argument boxes,
    /// clamped to 1. The enclosure must be strictly positive.
    pub fn eval_interval(&self, r: &Interval, eps: &Interval, tilde: bool) -> Result<Interval> {
        if !r.lo().is_positive() {
            return Err(Error::domain(format!("modulus radius enclosure {r:?} is not positive")));
        }
        if !eps.lo().is_positive() || eps.hi() > &int(2) {
            return Err(Error::domain(format!("modulus ε enclosure {eps:?} leaves (0, 2]")));
        }
        let e = if tilde {
            self.eta_tilde
                .as_ref()
                .ok_or_else(|| Error::config(format!("modulus {} has no η̃ factorization", self.name)))?
        } else {
            &self.eta
        };
        let v = e.eval_interval(r, eps)?;
        if !v.lo().is_positive() {
            return Err(Error::Numeric {
                step: 0,
                detail: format!("enclosure {v:?} of {} is not strictly positive", self.name),
            });
        }
        Ok(if tilde { v } else { v.min_with(&BigRational::one()) })
    }
}

fn clamp_value(v: f64, name: &str, r: f64, eps: f64) -> Result<Eta> {
    if !(v > 0.0) {
        return Err(Error::domain(format!("{name}({r}, {eps}) = {v} is not positive")));
    }
    Ok(if v > 1.0 {
        Eta {
            value: 1.0,
            clamped: true,
        }
    } else {
        Eta {
            value: v,
            clamped: false,
        }
    })
}

fn check_rational_domain(r: &BigRational, eps: &BigRational) -> Result<()> {
    if !r.is_positive() {
        return Err(Error::domain(format!("modulus radius must be positive, got {r}")));
    }
    if !eps.is_positive() || eps > &int(2) {
        return Err(Error::domain(format!("modulus ε must lie in (0, 2], got {eps}")));
    }
    Ok(())
}

pub fn eval_modulus(m: &Modulus, r: f64, eps: f64) -> Result<f64> {
    m.eval(r, eps).map(|e| e.value)
}

/// `(1 - 2λ(1-λ)η(r, ε)) r`.
pub fn combination_bound(m: &Modulus, r: f64, eps: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let eta = m.eval(r, eps)?.value;
    Ok((1.0 - 2.0 * lambda * (1.0 - lambda) * eta) * r)
}

/// `(1 - 2λ(1-λ)η(s, εr/s)) s` for `s ≥ r`.
pub fn combination_bound_rescaled(m: &Modulus, r: f64, eps: f64, lambda: f64, s: f64) -> Result<f64> {
    check_domain(r, eps)?;
    if !(s >= r) {
        return Err(Error::domain(format!("rescaled radius s = {s} is below r = {r}")));
    }
    combination_bound(m, s, eps * r / s, lambda)
}

fn grid(values: &[f64]) -> Result<Vec<BigRational>> {
    values.iter().map(|&v| rational_from_f64(v)).collect()
}

/// True iff `η(r₂, ε) ≤ η(r₁, ε)` for all grid pairs `r₂ ≥ r₁` and all grid `ε`,
/// compared exactly. Evaluation failures count as a failed check.
pub fn verify_monotone(m: &Modulus, r_grid: &[f64], eps_grid: &[f64]) -> bool {
    let (Ok(rs), Ok(es)) = (grid(r_grid), grid(eps_grid)) else {
        return false;
    };
    if rs.is_empty() || es.is_empty() {
        return false;
    }
    for e in &es {
        let mut vals = Vec::with_capacity(rs.len());
        for r in &rs {
            match m.eval_rational(r, e) {
                Ok(v) => vals.push((r, v)),
                Err(_) => return false,
            }
        }
        for (r1, v1) in &vals {
            for (r2, v2) in &vals {
                if r2 >= r1 && v2 > v1 {
                    return false;
                }
            }
        }
    }
    true
}

/// Checks `ε η̃(r, ε) = η(r, ε)` exactly and `η̃` nondecreasing in `ε` on the grid.
pub fn verify_factorization(m: &Modulus, r_grid: &[f64], eps_grid: &[f64]) -> Result<bool> {
    let tilde = m
        .eta_tilde
        .as_ref()
        .ok_or_else(|| Error::config(format!("modulus {} has no η̃ factorization", m.name)))?;
    let rs = grid(r_grid)?;
    let mut es = grid(eps_grid)?;
    es.sort();
    for r in &rs {
        let mut prev: Option<BigRational> = None;
        for e in &es {
            check_rational_domain(r, e)?;
            let t = tilde.eval_rational(r, e)?;
            if e * &t != m.eta.eval_rational(r, e)? {
                return Ok(false);
            }
            if let Some(p) = &prev {
                if &t < p {
                    return Ok(false);
                }
            }
            prev = Some(t);
        }
    }
    Ok(true)
}

/// Modulus selection as it appears in configs: `"cat0"` or a custom object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModulusConfig {
    Named(String),
    Custom {
        #[serde(default = "custom_name")]
        name: String,
        eta: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eta_tilde: Option<String>,
        #[serde(default)]
        monotone: bool,
    },
}

fn custom_name() -> String {
    "custom".into()
}

impl Default for ModulusConfig {
    fn default() -> Self {
        ModulusConfig::Named("cat0".into())
    }
}

impl ModulusConfig {
    /// Builds the modulus. A custom modulus declared monotone is checked on
    /// the default grid, and one with `η̃` is checked for the factorization.
    pub fn build(&self) -> Result<Modulus> {
        match self {
            ModulusConfig::Named(n) if n == "cat0" => Ok(cat0_modulus()),
            ModulusConfig::Named(n) => Err(Error::config(format!(
                "unknown modulus {n:?}; expected \"cat0\" or a custom expression"
            ))),
            ModulusConfig::Custom {
                name,
                eta,
                eta_tilde,
                monotone,
            } => {
                let m = Modulus::custom(name, eta, eta_tilde.as_deref(), *monotone)?;
                if m.monotone && !verify_monotone(&m, &R_GRID, &EPS_GRID) {
                    return Err(Error::Hypothesis(format!(
                        "modulus {name} is declared monotone but increases in r on the test grid"
                    )));
                }
                if m.eta_tilde.is_some() && !verify_factorization(&m, &R_GRID, &EPS_GRID)? {
                    return Err(Error::Hypothesis(format!(
                        "modulus {name}: ε·η̃ does not reproduce η, or η̃ decreases in ε"
                    )));
                }
                Ok(m)
            }
        }
    }
}
