//! Exact evaluation of the metastability and asymptotic-regularity bounds,
//! the two quantitative lemmas on real sequences, and brute-force scans
//! that check their conclusions.

mod gfn;
mod lemmas;
mod window;

pub use gfn::{iterate_affine, iterate_steps, BigValue, Budget, CounterexampleFn, CustomFn};
pub use lemmas::{
    basic_lemma_bound, qihou_step, quant_qihou_psi, verify_basic_lemma, verify_qihou_on_sequences, BasicLemmaBound,
    BasicLemmaWitness, QihouBound, QihouInputs, QihouSequences, QihouWitness,
};
pub use window::{check_candidate_shape, find_metastable_window, CandidateCheck, WindowScan};

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exact::{
    certified_ceil, exp_enclosure, int, rat, rational_from_f64, rational_string, serialize_decimal, CertifiedCeil,
    Interval, IntervalRecord,
};
use crate::modulus::{cat0_modulus, Modulus};

/// The additive constant in `M = ⌈3(5KD + D + c)/θ⌉`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Constant {
    /// `c = 11/2`, as stated.
    #[default]
    Paper,
    /// `c = 10`, what the sequence lemma gives with the parameters used in the proof.
    Strict,
}

impl Constant {
    pub fn value(self) -> BigRational {
        match self {
            Constant::Paper => rat(11, 2),
            Constant::Strict => int(10),
        }
    }
}

impl fmt::Display for Constant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constant::Paper => "paper",
            Constant::Strict => "strict",
        })
    }
}

impl FromStr for Constant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Constant::Paper),
            "strict" => Ok(Constant::Strict),
            _ => Err(Error::config(format!("unknown variant {s:?}; expected paper or strict"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Formula {
    General,
    EtaTilde,
    Cat0Paper,
    Cat0Derived,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `Φ = h^M(0)`: some `N ≤ Φ` has residuals below `ε` on `[N, N + g(N)]`.
    Metastable,
    /// `Φ = 2M`: some `N ≤ Φ` has residual below `ε`.
    AsymptoticRegularity,
}

/// Parameters of the main bound. All reals are exact rationals.
#[derive(Debug, Clone)]
pub struct BoundInputs {
    pub k: BigRational,
    pub l: u64,
    pub b: BigRational,
    pub eps: BigRational,
    pub g: CounterexampleFn,
    pub modulus: Modulus,
    pub use_eta_tilde: bool,
    pub constant: Constant,
    pub budget: Budget,
}

impl BoundInputs {
    /// Converts float inputs through their shortest decimal form and validates.
    pub fn new(k: f64, l: u64, b: f64, eps: f64, g: CounterexampleFn, modulus: Modulus) -> Result<Self> {
        Self::from_rationals(
            rational_from_f64(k)?,
            l,
            rational_from_f64(b)?,
            rational_from_f64(eps)?,
            g,
            modulus,
        )
    }

    pub fn from_rationals(
        k: BigRational,
        l: u64,
        b: BigRational,
        eps: BigRational,
        g: CounterexampleFn,
        modulus: Modulus,
    ) -> Result<Self> {
        let inp = Self {
            k,
            l,
            b,
            eps,
            g,
            modulus,
            use_eta_tilde: false,
            constant: Constant::Paper,
            budget: Budget::default(),
        };
        inp.validate()?;
        Ok(inp)
    }

    /// CAT(0) inputs: the `ε²/8` modulus, `b = d_C`, `g ≡ 0`.
    pub fn cat0(k: f64, l: u64, d_c: f64, eps: f64) -> Result<Self> {
        Self::new(k, l, d_c, eps, CounterexampleFn::Zero, cat0_modulus())
    }

    pub fn with_eta_tilde(mut self, on: bool) -> Self {
        self.use_eta_tilde = on;
        self
    }

    pub fn with_constant(mut self, c: Constant) -> Self {
        self.constant = c;
        self
    }

    pub fn with_g(mut self, g: CounterexampleFn) -> Self {
        self.g = g;
        self
    }

    pub fn with_budget(mut self, budget: Budget) -> Self {
        self.budget = budget;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.k.is_negative() {
            return Err(Error::domain(format!("K must be nonnegative, got {}", self.k)));
        }
        if self.l < 2 {
            return Err(Error::domain(format!("L must be at least 2, got {}", self.l)));
        }
        if !self.b.is_positive() {
            return Err(Error::domain(format!("b must be positive, got {}", self.b)));
        }
        if !self.eps.is_positive() || self.eps > BigRational::one() {
            return Err(Error::domain(format!("ε must lie in (0, 1], got {}", self.eps)));
        }
        if !self.modulus.monotone {
            return Err(Error::Hypothesis(format!(
                "modulus {} is not declared monotone",
                self.modulus.name
            )));
        }
        if self.use_eta_tilde && self.modulus.eta_tilde.is_none() {
            return Err(Error::config(format!(
                "η̃ route requested but modulus {} has no η̃",
                self.modulus.name
            )));
        }
        Ok(())
    }

    fn record(&self) -> InputsRecord {
        InputsRecord {
            k: rational_string(&self.k),
            l: self.l,
            b: rational_string(&self.b),
            eps: rational_string(&self.eps),
            g: self.g.to_string(),
            modulus: self.modulus.name.clone(),
            use_eta_tilde: self.use_eta_tilde,
        }
    }
}

/// `f(K) = 2(1 + (1+K)²(2+K))`.
pub fn f_of_k(k: &BigRational) -> Result<BigRational> {
    if k.is_negative() {
        return Err(Error::domain(format!("K must be nonnegative, got {k}")));
    }
    let one_k = BigRational::one() + k;
    Ok(int(2) * (BigRational::one() + &one_k * &one_k * (int(2) + k)))
}

/// Enclosures of the intermediate constants at one precision.
#[derive(Debug, Clone)]
pub struct ThetaEnclosure {
    pub f: BigRational,
    /// `D = e^K (b + 2)`.
    pub d: Interval,
    /// `(1+K)D + 1`.
    pub radius: Interval,
    /// `ε / (f(K)((1+K)D + 1))`.
    pub inner_eps: Interval,
    /// `η` or `η̃` at `(radius, inner_eps)`, at most 1.
    pub eta: Interval,
    pub theta: Interval,
}

fn d_enclosure(k: &BigRational, b: &BigRational, bits: u32) -> Result<Interval> {
    Ok(exp_enclosure(k, bits)?.scale(&(b + int(2))))
}

/// `θ = ε/(L² f(K)) · η((1+K)D + 1, ε/(f(K)((1+K)D + 1)))`, with `η̃` in place
/// of `η` when the inputs ask for it.
pub fn compute_theta(inp: &BoundInputs, bits: u32) -> Result<ThetaEnclosure> {
    inp.validate()?;
    let f = f_of_k(&inp.k)?;
    let d = d_enclosure(&inp.k, &inp.b, bits)?;
    let radius = d.scale(&(BigRational::one() + &inp.k)).add(&Interval::point(BigRational::one()));
    let inner_eps = Interval::point(inp.eps.clone()).div(&radius.scale(&f))?;
    if inner_eps.hi() >= &rat(1, 2) {
        return Err(Error::Numeric {
            step: 0,
            detail: format!("inner separation {inner_eps:?} is not below 1/2"),
        });
    }
    // η is clamped to 1 already; η̃ is clamped here, which only lowers θ
    let eta = inp
        .modulus
        .eval_interval(&radius, &inner_eps, inp.use_eta_tilde)?
        .min_with(&BigRational::one());
    let l2 = int(inp.l as i64) * int(inp.l as i64);
    let lead = &inp.eps / (&l2 * &f);
    let theta = eta.scale(&lead);
    if theta.hi() > &lead {
        return Err(Error::Numeric {
            step: 0,
            detail: format!("θ enclosure {theta:?} exceeds ε/(L² f(K)) = {lead}"),
        });
    }
    Ok(ThetaEnclosure {
        f,
        d,
        radius,
        inner_eps,
        eta,
        theta,
    })
}

/// `3(5KD + D + c)`.
fn numerator(k: &BigRational, d: &Interval, c: &BigRational) -> Interval {
    d.scale(&(int(5) * k + int(1)))
        .add(&Interval::point(c.clone()))
        .scale(&int(3))
}

/// `M = ⌈3(5KD + D + c)/θ⌉` with a certified ceiling, and the tightest θ used.
pub fn compute_m(inp: &BoundInputs) -> Result<(ThetaEnclosure, CertifiedCeil)> {
    let c = inp.constant.value();
    let mut last = None;
    let m = certified_ceil(|bits| {
        let th = compute_theta(inp, bits)?;
        let q = numerator(&inp.k, &th.d, &c).div(&th.theta)?;
        last = Some(th);
        Ok(q)
    })?;
    Ok((last.expect("at least one precision tried"), m))
}

/// `h(n) = g(n+1) + n + 2`.
pub fn metastable_step(g: &CounterexampleFn, n: &BigUint) -> BigUint {
    g.eval(&(n + 1u32)) + n + 2u32
}

pub fn metastable_step_fn(g: &CounterexampleFn) -> impl Fn(&BigUint) -> BigUint + '_ {
    move |n| metastable_step(g, n)
}

/// `h^m(0)` for `h(n) = g(n+1) + n + 2`.
pub fn iterate_metastable(g: &CounterexampleFn, m: &BigUint, budget: &Budget) -> Result<BigValue> {
    if let Some((a, b)) = g.as_affine() {
        // h(n) = (a+1) n + (a + b + 2)
        return iterate_affine(&(&a + 1u32), &(a + b + 2u32), m, budget);
    }
    if let CounterexampleFn::Table(t) = g {
        // past the table h(n) = n + 2; each step before that gains at least 2
        let len = BigUint::from(t.len());
        let mut n = BigUint::zero();
        let mut i = BigUint::zero();
        while &i < m && &n + 1u32 < len {
            n = metastable_step(g, &n);
            i += 1u32;
        }
        return Ok(BigValue::Exact(n + (m - i) * 2u32));
    }
    iterate_steps(|n| metastable_step(g, n), m, budget).map(BigValue::Exact)
}

/// Echo of the inputs, with rationals as exact strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputsRecord {
    #[serde(rename = "K")]
    pub k: String,
    #[serde(rename = "L")]
    pub l: u64,
    pub b: String,
    pub eps: String,
    pub g: String,
    pub modulus: String,
    pub use_eta_tilde: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    pub formula: Formula,
    pub constant: Constant,
    pub inputs: InputsRecord,
    pub f: String,
    #[serde(rename = "D")]
    pub d: IntervalRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<IntervalRecord>,
    #[serde(rename = "M", serialize_with = "serialize_decimal")]
    pub m: BigUint,
    pub m_certified: bool,
    pub m_precision: u32,
    #[serde(rename = "Phi")]
    pub phi: BigValue,
    pub step: String,
    pub candidates: String,
    #[serde(skip)]
    g: CounterexampleFn,
    #[serde(skip)]
    theta_enclosure: Option<Interval>,
}

impl BoundReport {
    /// The step function whose `M`-th iterate at 0 is `Φ`.
    pub fn h(&self, n: &BigUint) -> BigUint {
        metastable_step(&self.g, n)
    }

    pub fn g(&self) -> &CounterexampleFn {
        &self.g
    }

    pub fn theta_enclosure(&self) -> Option<&Interval> {
        self.theta_enclosure.as_ref()
    }

    /// The first `limit` (at most `M`) candidate indices `hⁱ(0) + 1`.
    pub fn candidates(&self, limit: usize) -> Vec<BigUint> {
        let mut out = Vec::new();
        let mut n = BigUint::zero();
        let mut i = BigUint::zero();
        while i < self.m && out.len() < limit {
            out.push(&n + 1u32);
            n = self.h(&n);
            i += 1u32;
        }
        out
    }

    /// `n ≤ Φ`, decided without materializing `Φ` when it is huge.
    pub fn covers(&self, n: u64) -> bool {
        match &self.phi {
            BigValue::Exact(phi) => &BigUint::from(n) <= phi,
            BigValue::Huge { .. } => {
                // h(n) ≥ n + 2, so at most n/2 + 1 steps are needed
                let target = BigUint::from(n);
                let mut v = BigUint::zero();
                let mut i = BigUint::zero();
                while i < self.m {
                    if v >= target {
                        return true;
                    }
                    v = self.h(&v);
                    i += 1u32;
                }
                v >= target
            }
        }
    }
}

fn metastable_report(inp: &BoundInputs, kind: BoundKind) -> Result<BoundReport> {
    let (th, m) = compute_m(inp)?;
    let phi = iterate_metastable(&inp.g, &m.value, &inp.budget)?;
    Ok(BoundReport {
        kind,
        formula: if inp.use_eta_tilde {
            Formula::EtaTilde
        } else {
            Formula::General
        },
        constant: inp.constant,
        inputs: inp.record(),
        f: rational_string(&th.f),
        d: IntervalRecord::from(&th.d),
        theta: Some(IntervalRecord::from(&th.theta)),
        m: m.value,
        m_certified: m.certified,
        m_precision: m.precision,
        phi,
        step: "h(n) = g(n+1) + n + 2".into(),
        candidates: "N = h^i(0) + 1 for some i < M".into(),
        g: inp.g.clone(),
        theta_enclosure: Some(th.theta),
    })
}

/// `Φ = h^M(0)` for the metastable bound.
pub fn compute_phi_metastable(inp: &BoundInputs) -> Result<BoundReport> {
    metastable_report(inp, BoundKind::Metastable)
}

/// `Φ = 2M`, checked against the metastable bound at `g ≡ 0`.
pub fn compute_phi_asreg(inp: &BoundInputs) -> Result<BoundReport> {
    let zero = inp.clone().with_g(CounterexampleFn::Zero);
    let mut rep = metastable_report(&zero, BoundKind::AsymptoticRegularity)?;
    let two_m = BigValue::Exact(&rep.m * 2u32);
    if rep.phi != two_m {
        return Err(Error::Integrity {
            step: 0,
            detail: format!("h^M(0) = {:?} at g ≡ 0 differs from 2M = {:?}", rep.phi, two_m),
        });
    }
    rep.phi = two_m;
    rep.step = "h(n) = n + 2".into();
    rep.candidates = "N = 2i + 1 for some i < M".into();
    Ok(rep)
}

/// The CAT(0) bound as stated, and as obtained by substituting `η̃ = ε/8`.
#[derive(Debug, Clone, Serialize)]
pub struct Cat0Bounds {
    pub paper: BoundReport,
    pub derived: BoundReport,
}

/// Both CAT(0) bounds for `(K, L, d_C, ε)` taken from `inp` (`b` is `d_C`).
/// The modulus and `g` of `inp` are ignored.
pub fn compute_phi_cat0(inp: &BoundInputs) -> Result<Cat0Bounds> {
    let base = BoundInputs {
        g: CounterexampleFn::Zero,
        modulus: cat0_modulus(),
        ..inp.clone()
    };
    base.validate()?;
    let derived_inp = base.clone().with_eta_tilde(true);
    let mut derived = compute_phi_asreg(&derived_inp)?;
    derived.formula = Formula::Cat0Derived;

    let f = f_of_k(&base.k)?;
    let c = base.constant.value();
    let l2 = int(base.l as i64) * int(base.l as i64);
    let eps2 = &base.eps * &base.eps;
    let mut last_d = None;
    // M = ⌈24 L² (5KD + D + c) f³ ((1+K)D + 1)² / ε²⌉
    let m = certified_ceil(|bits| {
        let d = d_enclosure(&base.k, &base.b, bits)?;
        let radius = d.scale(&(BigRational::one() + &base.k)).add(&Interval::point(BigRational::one()));
        let core = numerator(&base.k, &d, &c).scale(&int(8));
        let q = core
            .mul(&radius.powi(2)?)
            .scale(&(&l2 * &f * &f * &f / &eps2));
        last_d = Some(d);
        Ok(q)
    })?;
    let d = last_d.expect("at least one precision tried");
    let paper = BoundReport {
        kind: BoundKind::AsymptoticRegularity,
        formula: Formula::Cat0Paper,
        constant: base.constant,
        inputs: base.clone().with_eta_tilde(true).record(),
        f: rational_string(&f),
        d: IntervalRecord::from(&d),
        theta: None,
        phi: BigValue::Exact(&m.value * 2u32),
        m: m.value,
        m_certified: m.certified,
        m_precision: m.precision,
        step: "h(n) = n + 2".into(),
        candidates: "N = 2i + 1 for some i < M".into(),
        g: CounterexampleFn::Zero,
        theta_enclosure: None,
    };
    if paper.m < derived.m {
        return Err(Error::Integrity {
            step: 0,
            detail: format!("stated CAT(0) M = {} is below the derived M = {}", paper.m, derived.m),
        });
    }
    Ok(Cat0Bounds { paper, derived })
}

/// Whether an anchor defect `δ` meets `δ ≤ 1/(2^Φ (Φ + K))`.
pub fn anchor_precision_ok(delta: f64, phi: &BigValue, k: f64) -> bool {
    if delta == 0.0 {
        return true;
    }
    if !(delta > 0.0) {
        return false;
    }
    let phi_f = match phi {
        BigValue::Exact(p) => p.to_f64().unwrap_or(f64::INFINITY),
        BigValue::Huge { log2_at_least } => log2_at_least.exp2(),
    };
    delta.log2() + phi_f + (phi_f + k).log2() <= 0.0
}
