//! Krasnoselski–Mann iteration `x_{n+1} = (1-λ_n)x_n ⊕ λ_n Tⁿx_n`.

mod audit;
mod builtin;
mod trace;

pub use audit::{trace_inequality_audit, AuditFamily, AuditReport};
pub use builtin::{MapSpec, MappingConfig, MappingSpace};
pub use trace::{km_iterate, read_csv_rows, Trace, TraceRow};

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::space::{GeodesicSpace, SampleReport};

/// Slack allowed when checking declared inequalities on inputs.
pub const INPUT_TOL: f64 = 1e-12;

/// Declared Lipschitz excess `k_n` of `Tⁿ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KSequence {
    #[default]
    Zero,
    /// `k_n = first · ratioⁿ`.
    Geometric { first: f64, ratio: f64 },
    /// Listed values, then zero.
    Table(Vec<f64>),
}

impl KSequence {
    /// `k_n = 2^{-n-1}`, summing to 1.
    pub fn halving() -> Self {
        KSequence::Geometric {
            first: 0.5,
            ratio: 0.5,
        }
    }

    pub fn at(&self, n: usize) -> f64 {
        match self {
            KSequence::Zero => 0.0,
            KSequence::Geometric { first, ratio } => first * ratio.powi(n.min(i32::MAX as usize) as i32),
            KSequence::Table(t) => t.get(n).copied().unwrap_or(0.0),
        }
    }

    /// `Σ_{i<n} k_i`.
    pub fn partial_sum(&self, n: u64) -> f64 {
        match self {
            KSequence::Zero => 0.0,
            KSequence::Geometric { first, ratio } => {
                if *ratio == 1.0 {
                    first * n as f64
                } else {
                    let n = n.min(i32::MAX as u64) as i32;
                    first * (1.0 - ratio.powi(n)) / (1.0 - ratio)
                }
            }
            KSequence::Table(t) => t.iter().take(n.min(t.len() as u64) as usize).sum(),
        }
    }

    /// `Σ k_n` over all `n`; infinite when the series diverges.
    pub fn total(&self) -> f64 {
        match self {
            KSequence::Zero => 0.0,
            KSequence::Geometric { first, ratio } if *first == 0.0 => 0.0,
            KSequence::Geometric { first, ratio } if (0.0..1.0).contains(ratio) => first / (1.0 - ratio),
            KSequence::Geometric { .. } => f64::INFINITY,
            KSequence::Table(t) => t.iter().sum(),
        }
    }

    fn check_nonnegative(&self) -> Result<()> {
        let bad = match self {
            KSequence::Zero => None,
            KSequence::Geometric { first, ratio } => {
                (!(*first >= 0.0 && *ratio >= 0.0)).then(|| format!("geometric k_n with first {first}, ratio {ratio}"))
            }
            KSequence::Table(t) => t
                .iter()
                .position(|v| !(*v >= 0.0))
                .map(|i| format!("k_{i} = {} is negative", t[i])),
        };
        match bad {
            Some(msg) => Err(Error::Hypothesis(msg)),
            None => Ok(()),
        }
    }
}

/// Which points a mapping is known to fix.
#[derive(Debug, Clone, PartialEq)]
pub enum Fixed<P> {
    Unknown,
    Everywhere,
    At(P),
}

pub type Rule<P> = Arc<dyn Fn(&P) -> P + Send + Sync>;

/// A self-map `T` with declared `(k_n)` and cap `K ≥ Σ k_n`.
#[derive(Clone)]
pub struct Mapping<P> {
    pub name: String,
    rule: Rule<P>,
    pub k: KSequence,
    pub cap: f64,
    pub fixed: Fixed<P>,
}

impl<P: fmt::Debug> fmt::Debug for Mapping<P> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mapping")
            .field("name", &self.name)
            .field("k", &self.k)
            .field("cap", &self.cap)
            .field("fixed", &self.fixed)
            .finish_non_exhaustive()
    }
}

impl<P: Clone + Send + Sync + 'static> Mapping<P> {
    pub fn new(
        name: impl Into<String>,
        rule: impl Fn(&P) -> P + Send + Sync + 'static,
        k: KSequence,
        cap: f64,
        fixed: Fixed<P>,
    ) -> Self {
        Self {
            name: name.into(),
            rule: Arc::new(rule),
            k,
            cap,
            fixed,
        }
    }

    pub fn identity() -> Self {
        Self::new("identity", |x: &P| x.clone(), KSequence::Zero, 0.0, Fixed::Everywhere)
    }

    pub fn constant(c: P) -> Self {
        let target = c.clone();
        Self::new("constant", move |_: &P| target.clone(), KSequence::Zero, 0.0, Fixed::At(c))
    }

    /// Replaces the declared `(k_n)` and cap.
    pub fn declare(mut self, k: KSequence, cap: f64) -> Self {
        self.k = k;
        self.cap = cap;
        self
    }

    pub fn apply(&self, x: &P) -> P {
        (self.rule)(x)
    }

    /// `Tⁿx` by `n`-fold application.
    pub fn apply_power(&self, n: usize, x: &P) -> P {
        let mut y = x.clone();
        for _ in 0..n {
            y = (self.rule)(&y);
        }
        y
    }

    pub fn k_at(&self, n: usize) -> f64 {
        self.k.at(n)
    }

    /// Checks `k_n ≥ 0` and `Σ k_n ≤ K`; with a horizon only the partial sum
    /// below it is constrained.
    pub fn check_declaration(&self, horizon: Option<u64>) -> Result<()> {
        if !(self.cap >= 0.0) {
            return Err(Error::Hypothesis(format!("cap K = {} must be nonnegative", self.cap)));
        }
        self.k.check_nonnegative()?;
        let (sum, what) = match horizon {
            Some(h) => (self.k.partial_sum(h), format!("Σ_{{n<{h}}} k_n")),
            None => (self.k.total(), "Σ k_n".to_string()),
        };
        if sum > self.cap + INPUT_TOL {
            return Err(Error::Hypothesis(format!(
                "{what} = {sum} exceeds declared K = {} for mapping {}",
                self.cap, self.name
            )));
        }
        Ok(())
    }
}

/// `d(x, Tx)`.
pub fn residual<S: GeodesicSpace>(space: &S, t: &Mapping<S::Point>, x: &S::Point) -> f64 {
    space.dist(x, &t.apply(x))
}

pub fn apply_power<P: Clone + Send + Sync + 'static>(t: &Mapping<P>, n: usize, x: &P) -> P {
    t.apply_power(n, x)
}

/// Step sizes `λ_n` with the cap `L`: `1/L ≤ λ_n ≤ 1 - 1/L`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub lambda: LambdaRule,
    #[serde(rename = "L")]
    pub cap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaRule {
    Constant(f64),
    /// Listed values, then the last one repeated.
    Table { table: Vec<f64> },
    /// `a, b, a, b, …`
    Alternating { alternating: (f64, f64) },
}

impl Schedule {
    pub fn constant(lambda: f64, cap: u64) -> Self {
        Self {
            lambda: LambdaRule::Constant(lambda),
            cap,
        }
    }

    pub fn at(&self, n: usize) -> f64 {
        match &self.lambda {
            LambdaRule::Constant(l) => *l,
            LambdaRule::Table { table } => table.get(n).or(table.last()).copied().unwrap_or(f64::NAN),
            LambdaRule::Alternating { alternating: (a, b) } => {
                if n % 2 == 0 {
                    *a
                } else {
                    *b
                }
            }
        }
    }

    /// Checks `L ≥ 2` and `λ_n ∈ [1/L, 1-1/L]` for `n < horizon`.
    pub fn check(&self, horizon: u64) -> Result<()> {
        if self.cap < 2 {
            return Err(Error::Hypothesis(format!("schedule cap L = {} must be at least 2", self.cap)));
        }
        let lo = 1.0 / self.cap as f64;
        let hi = 1.0 - lo;
        // the rule is eventually periodic with period ≤ 2 past the table
        let distinct = match &self.lambda {
            LambdaRule::Table { table } => table.len() as u64 + 2,
            _ => 2,
        };
        for n in 0..horizon.min(distinct) {
            let l = self.at(n as usize);
            if !(l >= lo && l <= hi) {
                return Err(Error::Hypothesis(format!(
                    "schedule: λ_{n} = {l} violates [1/L, 1-1/L] with L = {}",
                    self.cap
                )));
            }
        }
        Ok(())
    }
}

/// An anchor `p` with `d(x₀, p) ≤ b` and `d(Tp, p) ≤ δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorPoint<P> {
    pub point: P,
    pub b: f64,
    pub delta: f64,
}

impl<P: Clone> AnchorPoint<P> {
    pub fn new<S: GeodesicSpace<Point = P>>(
        space: &S,
        t: &Mapping<P>,
        x0: &P,
        point: P,
        b: f64,
        delta: f64,
    ) -> Result<Self> {
        if !(b > 0.0) {
            return Err(Error::Hypothesis(format!("anchor radius b = {b} must be positive")));
        }
        if !(delta >= 0.0) {
            return Err(Error::Hypothesis(format!("anchor defect δ = {delta} must be nonnegative")));
        }
        space.validate(&point)?;
        let d0 = space.dist(x0, &point);
        if d0 > b + INPUT_TOL {
            return Err(Error::Hypothesis(format!("anchor: d(x₀, p) = {d0} exceeds b = {b}")));
        }
        let dt = residual(space, t, &point);
        if dt > delta + INPUT_TOL {
            return Err(Error::Hypothesis(format!("anchor: d(Tp, p) = {dt} exceeds δ = {delta}")));
        }
        Ok(Self { point, b, delta })
    }
}

/// Samples pairs and checks `d(Tⁿx, Tⁿy) ≤ (1 + k_n) d(x, y) + tol` for `1 ≤ n ≤ n_max`.
pub fn validate_mapping<S: GeodesicSpace, R: Rng + ?Sized>(
    space: &S,
    t: &Mapping<S::Point>,
    rng: &mut R,
    n_max: usize,
    pairs: usize,
    tol: f64,
) -> SampleReport {
    let mut report = SampleReport::new(format!("lipschitz-powers:{}", t.name), tol);
    for _ in 0..pairs {
        let mut x = space.sample_point(rng);
        let mut y = if rng.gen_bool(0.2) {
            let r = space.scale() * 10f64.powf(rng.gen_range(-4.0..0.0));
            space.ray_point(&x, r, rng)
        } else {
            space.sample_point(rng)
        };
        let d0 = space.dist(&x, &y);
        for n in 1..=n_max {
            x = t.apply(&x);
            y = t.apply(&y);
            let dn = space.dist(&x, &y);
            let excess = dn - (1.0 + t.k_at(n)) * d0;
            // a map that leaves the space shows up as a non-finite distance
            report.record(if space.is_finite(&x) && space.is_finite(&y) { excess } else { f64::NAN });
        }
    }
    report
}
