//! The two quantitative lemmas on real sequences: the finite descent lemma
//! (`M = ⌈a₀/ε⌉`, `Θ`) and the two-sequence almost-monotone bound (`Ψ`).

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use super::gfn::{iterate_affine, iterate_steps, BigValue, Budget, CounterexampleFn};
use crate::error::{Error, Result};
use crate::exact::{ceil_to_nat, certified_ceil, exp_enclosure, int, rational_from_f64, to_f64, Interval};

/// Relative slack for float comparisons against sequence data.
const SEQ_TOL: f64 = 1e-12;

fn le(x: f64, y: f64) -> bool {
    x <= y + SEQ_TOL * (1.0 + x.abs().max(y.abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasicLemmaBound {
    #[serde(rename = "M", serialize_with = "crate::exact::serialize_decimal")]
    pub m: BigUint,
    #[serde(rename = "Theta", serialize_with = "crate::exact::serialize_decimal")]
    pub theta: BigUint,
}

/// `M = ⌈a₀/ε⌉` and `Θ = max{gⁱ(0) : i ≤ M}`.
pub fn basic_lemma_bound(
    a0: &BigRational,
    eps: &BigRational,
    g: &CounterexampleFn,
    budget: &Budget,
) -> Result<BasicLemmaBound> {
    if a0.is_negative() {
        return Err(Error::domain(format!("a₀ must be nonnegative, got {a0}")));
    }
    if !eps.is_positive() {
        return Err(Error::domain(format!("ε must be positive, got {eps}")));
    }
    let m = ceil_to_nat(&(a0 / eps))?;
    let theta = if let Some((a, b)) = g.as_affine() {
        // g is nondecreasing and g(0) ≥ 0, so the iterates are nondecreasing
        match iterate_affine(&a, &b, &m, budget)? {
            BigValue::Exact(v) => v,
            BigValue::Huge { log2_at_least } => {
                return Err(Error::Resource(format!(
                    "Θ has at least {log2_at_least:.0} bits, over the budget of {} bits",
                    budget.bits
                )))
            }
        }
    } else {
        let mut n = BigUint::zero();
        let mut best = BigUint::zero();
        let mut i = BigUint::zero();
        let mut steps = 0u64;
        while i < m {
            if steps >= budget.steps {
                return Err(Error::Resource(format!(
                    "computing Θ needs {m} iterations, over the budget of {} steps",
                    budget.steps
                )));
            }
            let next = g.eval(&n);
            if next == n {
                break;
            }
            n = next;
            best = best.max(n.clone());
            i += 1u32;
            steps += 1;
        }
        best
    };
    Ok(BasicLemmaBound { m, theta })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BasicLemmaWitness {
    pub bound: BasicLemmaBound,
    /// The `i < M` with `a_{gⁱ(0)} − a_{gⁱ⁺¹(0)} ≤ ε`.
    pub i: u64,
    /// `N = gⁱ(0) ≤ Θ`.
    pub n: u64,
}

/// Checks the descent lemma on `a` for `ε` and `g`.
///
/// `a` must reach index `Θ`, and `a_n ≥ 0` for `n ≤ Θ`. With `a₀ = 0` the
/// range `i < M` is empty and the lemma has no content; that input is
/// rejected as a precondition failure.
pub fn verify_basic_lemma(a: &[f64], eps: f64, g: &CounterexampleFn, budget: &Budget) -> Result<BasicLemmaWitness> {
    let Some(&a0) = a.first() else {
        return Err(Error::Precondition {
            index: 0,
            detail: "empty sequence".into(),
        });
    };
    let bound = basic_lemma_bound(&rational_from_f64(a0)?, &rational_from_f64(eps)?, g, budget)?;
    if bound.m.is_zero() {
        return Err(Error::Precondition {
            index: 0,
            detail: "a₀ = 0 gives M = 0, so no index i < M exists".into(),
        });
    }
    let theta = bound.theta.to_usize().filter(|&t| t < a.len()).ok_or_else(|| Error::Precondition {
        index: a.len(),
        detail: format!("sequence of length {} does not reach Θ = {}", a.len(), bound.theta),
    })?;
    if let Some(n) = (0..=theta).find(|&n| !(a[n] >= 0.0)) {
        return Err(Error::Precondition {
            index: n,
            detail: format!("a_{n} = {} is negative", a[n]),
        });
    }
    let m = bound.m.to_u64().expect("M ≤ Θ + 1 fits");
    let mut x = 0usize;
    for i in 0..m {
        let y = g.eval_u64(x as u64).to_usize().expect("gⁱ(0) ≤ Θ");
        if le(a[x] - a[y], eps) {
            return Ok(BasicLemmaWitness {
                bound,
                i,
                n: x as u64,
            });
        }
        x = y;
    }
    Err(Error::Counterexample(format!(
        "no i < M = {m} has a_(g^i(0)) − a_(g^(i+1)(0)) ≤ {eps}"
    )))
}

/// Inputs of the two-sequence bound.
#[derive(Debug, Clone)]
pub struct QihouInputs {
    pub a: [BigRational; 2],
    pub b: [BigRational; 2],
    pub c: [BigRational; 2],
    pub theta: BigRational,
    pub g: CounterexampleFn,
    pub budget: Budget,
}

impl QihouInputs {
    pub fn new(a: [f64; 2], b: [f64; 2], c: [f64; 2], theta: f64, g: CounterexampleFn) -> Result<Self> {
        let conv = |v: [f64; 2]| -> Result<[BigRational; 2]> { Ok([rational_from_f64(v[0])?, rational_from_f64(v[1])?]) };
        let inp = Self {
            a: conv(a)?,
            b: conv(b)?,
            c: conv(c)?,
            theta: rational_from_f64(theta)?,
            g,
            budget: Budget::default(),
        };
        inp.validate()?;
        Ok(inp)
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..2 {
            if self.a[i] < BigRational::one() {
                return Err(Error::domain(format!("A{} must be at least 1, got {}", i + 1, self.a[i])));
            }
            if self.b[i].is_negative() || self.c[i].is_negative() {
                return Err(Error::domain(format!("B{0} and C{0} must be nonnegative", i + 1)));
            }
        }
        if !self.theta.is_positive() {
            return Err(Error::domain(format!("θ must be positive, got {}", self.theta)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct QihouBound {
    #[serde(rename = "Psi")]
    pub psi: BigValue,
    #[serde(rename = "M", serialize_with = "crate::exact::serialize_decimal")]
    pub m: BigUint,
    pub m_certified: bool,
    #[serde(rename = "D1")]
    pub d1: crate::exact::IntervalRecord,
    #[serde(rename = "D2")]
    pub d2: crate::exact::IntervalRecord,
    #[serde(skip)]
    pub d_enclosures: [Interval; 2],
}

/// `h(n) = g(n) + n`.
pub fn qihou_step(g: &CounterexampleFn, n: &BigUint) -> BigUint {
    g.eval(n) + n
}

/// `Ψ = h^M(0)` with `D_i = (A_i + C_i) e^{B_i}` and
/// `M = ⌈3(4B₁D₁ + 4C₁ + D₁ + 4B₂D₂ + 4C₂ + D₂)/θ⌉`.
pub fn quant_qihou_psi(inp: &QihouInputs) -> Result<QihouBound> {
    inp.validate()?;
    let ds = |bits| -> Result<[Interval; 2]> {
        let mut out = Vec::new();
        for i in 0..2 {
            out.push(exp_enclosure(&inp.b[i], bits)?.scale(&(&inp.a[i] + &inp.c[i])));
        }
        Ok([out[0].clone(), out[1].clone()])
    };
    let mut last = None;
    let m = certified_ceil(|bits| {
        let d = ds(bits)?;
        let mut sum = Interval::point(BigRational::zero());
        for i in 0..2 {
            // 4 B_i D_i + 4 C_i + D_i
            let term = d[i]
                .scale(&(int(4) * &inp.b[i] + int(1)))
                .add(&Interval::point(int(4) * &inp.c[i]));
            sum = sum.add(&term);
        }
        last = Some(d);
        Ok(sum.scale(&(int(3) / &inp.theta)))
    })?;
    let d = last.expect("at least one precision tried");
    let psi = match inp.g.as_affine() {
        // h(n) = (a+1) n + b
        Some((a, b)) => iterate_affine(&(a + 1u32), &b, &m.value, &inp.budget)?,
        None => BigValue::Exact(iterate_steps(|n| qihou_step(&inp.g, n), &m.value, &inp.budget)?),
    };
    Ok(QihouBound {
        psi,
        m: m.value,
        m_certified: m.certified,
        d1: (&d[0]).into(),
        d2: (&d[1]).into(),
        d_enclosures: d,
    })
}

/// The six sequences of the two-sequence bound.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QihouSequences {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QihouWitness {
    /// `N = hⁱ(0)`.
    pub n: u64,
    pub i: u64,
    /// `N + g(N)`.
    pub window_end: u64,
    /// Candidates examined before the witness.
    pub candidates_tried: u64,
}

/// Checks the hypotheses on `seq` up to `Ψ`, then the conclusions: the
/// bounds `a_n ≤ D₁`, `α_n ≤ D₂` for `n ≤ Ψ + 1`, and some candidate
/// `N = hⁱ(0)`, `i < M`, with both sequences oscillating by at most `θ` on
/// `[N, N + g(N)]`.
pub fn verify_qihou_on_sequences(seq: &QihouSequences, inp: &QihouInputs) -> Result<QihouWitness> {
    if inp.theta > BigRational::one() {
        return Err(Error::config(format!("θ must lie in (0, 1], got {}", inp.theta)));
    }
    let bound = quant_qihou_psi(inp)?;
    let psi = bound
        .psi
        .exact()
        .and_then(|p| p.to_usize())
        .filter(|&p| p < usize::MAX / 2)
        .ok_or_else(|| Error::Resource(format!("Ψ = {:?} is too large to check against data", bound.psi)))?;
    let need = psi + 2;
    for (name, s) in [
        ("a", &seq.a),
        ("b", &seq.b),
        ("c", &seq.c),
        ("alpha", &seq.alpha),
        ("beta", &seq.beta),
        ("gamma", &seq.gamma),
    ] {
        if s.len() < need {
            return Err(Error::Precondition {
                index: s.len(),
                detail: format!("sequence {name} has {} terms, {need} are needed", s.len()),
            });
        }
    }
    let caps: Vec<f64> = [&inp.a[0], &inp.a[1], &inp.b[0], &inp.b[1], &inp.c[0], &inp.c[1]]
        .into_iter()
        .map(to_f64)
        .collect();
    let (mut sb, mut sbeta, mut sc, mut sgamma) = (0.0, 0.0, 0.0, 0.0);
    for n in 0..=psi {
        let vals = [seq.a[n], seq.b[n], seq.c[n], seq.alpha[n], seq.beta[n], seq.gamma[n]];
        if vals.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::Precondition {
                index: n,
                detail: "a negative (or non-finite) term".into(),
            });
        }
        if !le(seq.a[n + 1], (1.0 + seq.b[n]) * seq.a[n] + seq.c[n])
            || !le(seq.alpha[n + 1], (1.0 + seq.beta[n]) * seq.alpha[n] + seq.gamma[n])
        {
            return Err(Error::Precondition {
                index: n,
                detail: "recurrence a_(n+1) ≤ (1 + b_n) a_n + c_n fails".into(),
            });
        }
        sb += seq.b[n];
        sbeta += seq.beta[n];
        sc += seq.c[n];
        sgamma += seq.gamma[n];
        if !le(sb, caps[2]) || !le(sbeta, caps[3]) || !le(sc, caps[4]) || !le(sgamma, caps[5]) {
            return Err(Error::Precondition {
                index: n,
                detail: "a partial sum exceeds its budget B or C".into(),
            });
        }
    }
    if !le(seq.a[0], caps[0]) || !le(seq.alpha[0], caps[1]) {
        return Err(Error::Precondition {
            index: 0,
            detail: "a_0 > A1 or alpha_0 > A2".into(),
        });
    }
    let d1 = to_f64(bound.d_enclosures[0].hi());
    let d2 = to_f64(bound.d_enclosures[1].hi());
    for n in 0..need {
        if !le(seq.a[n], d1) || !le(seq.alpha[n], d2) {
            return Err(Error::Counterexample(format!(
                "a_{n} = {} or alpha_{n} = {} exceeds D1 = {d1} or D2 = {d2}",
                seq.a[n], seq.alpha[n]
            )));
        }
    }
    let theta = to_f64(&inp.theta);
    let osc = |s: &[f64], lo: usize, hi: usize| {
        let w = &s[lo..=hi];
        let max = w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = w.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    };
    let m = bound.m.to_u64().expect("M ≤ Ψ + 1 when g > 0, else small");
    let mut n = 0usize;
    for i in 0..m {
        let end = n + inp.g.eval_u64(n as u64).to_usize().expect("N + g(N) ≤ Ψ");
        if le(osc(&seq.a, n, end), theta) && le(osc(&seq.alpha, n, end), theta) {
            return Ok(QihouWitness {
                n: n as u64,
                i,
                window_end: end as u64,
                candidates_tried: i + 1,
            });
        }
        n = end;
    }
    Err(Error::Counterexample(format!(
        "no candidate h^i(0), i < M = {m}, has oscillation at most {theta}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn basic_lemma_examples() {
        let b = Budget::default();
        let succ = CounterexampleFn::parse("successor").unwrap();
        let r = basic_lemma_bound(&int(1), &rat(1, 2), &succ, &b).unwrap();
        assert_eq!((r.m, r.theta), (big(2), big(2)));
        let r = basic_lemma_bound(&int(0), &rat(1, 2), &succ, &b).unwrap();
        assert_eq!((r.m, r.theta), (big(0), big(0)));
        let lin = CounterexampleFn::parse("linear:2,1").unwrap();
        let r = basic_lemma_bound(&int(1), &int(1), &lin, &b).unwrap();
        assert_eq!((r.m, r.theta), (big(1), big(1)));
        // non-monotone g: iterates 0, 5, 0, 5, …
        let t = CounterexampleFn::parse("table:[5]").unwrap();
        let r = basic_lemma_bound(&int(3), &int(1), &t, &b).unwrap();
        assert_eq!((r.m, r.theta), (big(3), big(5)));
    }

    #[test]
    fn basic_lemma_on_sequences() {
        let b = Budget::default();
        let succ = CounterexampleFn::parse("successor").unwrap();
        let a = [1.0, 0.2, 0.15, 0.0];
        let w = verify_basic_lemma(&a, 0.5, &succ, &b).unwrap();
        assert_eq!((w.i, w.n), (1, 1));
        assert!(matches!(
            verify_basic_lemma(&[0.0, 0.0], 0.5, &succ, &b),
            Err(Error::Precondition { index: 0, .. })
        ));
        assert!(matches!(
            verify_basic_lemma(&[1.0, -0.1, 0.0], 0.5, &succ, &b),
            Err(Error::Precondition { index: 1, .. })
        ));
        assert!(matches!(
            verify_basic_lemma(&[1.0], 0.5, &succ, &b),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn psi_examples() {
        let zero = CounterexampleFn::Zero;
        let inp = QihouInputs::new([1.0, 1.0], [0.0, 0.0], [0.0, 0.0], 1.0, zero.clone()).unwrap();
        let q = quant_qihou_psi(&inp).unwrap();
        assert_eq!(q.m, big(6));
        assert_eq!(q.psi, BigValue::Exact(big(0)));
        let inp = QihouInputs::new([2.0, 1.0], [1.0, 0.0], [1.0, 0.0], 0.5, zero).unwrap();
        let q = quant_qihou_psi(&inp).unwrap();
        assert_eq!(q.m, big(275));
        assert!(q.m_certified);
        let one = CounterexampleFn::parse("const:1").unwrap();
        let inp = QihouInputs::new([2.0, 1.0], [1.0, 0.0], [1.0, 0.0], 0.5, one).unwrap();
        assert_eq!(quant_qihou_psi(&inp).unwrap().psi, BigValue::Exact(big(275)));
    }

    #[test]
    fn qihou_constant_sequences() {
        let g = CounterexampleFn::parse("const:3").unwrap();
        let inp = QihouInputs::new([1.0, 1.0], [0.0, 0.0], [0.0, 0.0], 0.1, g).unwrap();
        let psi = quant_qihou_psi(&inp).unwrap().psi.exact().unwrap().to_usize().unwrap();
        let n = psi + 2;
        let seq = QihouSequences {
            a: vec![1.0; n],
            b: vec![0.0; n],
            c: vec![0.0; n],
            alpha: vec![1.0; n],
            beta: vec![0.0; n],
            gamma: vec![0.0; n],
        };
        let w = verify_qihou_on_sequences(&seq, &inp).unwrap();
        assert_eq!((w.n, w.i, w.window_end), (0, 0, 3));
        let mut bad = seq.clone();
        bad.a[5] = 2.0;
        assert!(matches!(
            verify_qihou_on_sequences(&bad, &inp),
            Err(Error::Precondition { index: 4, .. })
        ));
    }

    #[test]
    fn qihou_decreasing_sequence_settles() {
        let g = CounterexampleFn::parse("const:3").unwrap();
        let inp = QihouInputs::new([2.0, 1.0], [0.0, 0.0], [0.0, 0.0], 0.1, g).unwrap();
        let psi = quant_qihou_psi(&inp).unwrap().psi.exact().unwrap().to_usize().unwrap();
        let n = psi + 2;
        let a: Vec<f64> = (0..n).map(|k| 1.0 + 0.5f64.powi(k as i32)).collect();
        let seq = QihouSequences {
            a: a.clone(),
            b: vec![0.0; n],
            c: vec![0.0; n],
            alpha: vec![1.0; n],
            beta: vec![0.0; n],
            gamma: vec![0.0; n],
        };
        let w = verify_qihou_on_sequences(&seq, &inp).unwrap();
        // windows [0,3], [3,6], …: 2⁻³ − 2⁻⁶ > 0.1, 2⁻⁶ − 2⁻⁹ ≤ 0.1
        assert_eq!((w.n, w.i), (6, 2));
    }
}
