//! Counterexample functions `g: ℕ → ℕ` and exact iteration of step functions.

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Limits on exact iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Steps allowed when a step function has to be iterated one by one.
    pub steps: u64,
    /// Largest bound, in bits, that is materialized as an integer.
    pub bits: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Self {
            steps: 10_000_000,
            bits: 1 << 16,
        }
    }
}

pub type CustomFn = Arc<dyn Fn(&BigUint) -> BigUint + Send + Sync>;

/// A total function `ℕ → ℕ`.
#[derive(Clone)]
pub enum CounterexampleFn {
    Zero,
    Const(BigUint),
    /// `g(n) = a n + b`.
    Linear { a: BigUint, b: BigUint },
    /// Listed values, then zero.
    Table(Vec<BigUint>),
    Custom { name: String, f: CustomFn },
}

impl fmt::Debug for CounterexampleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CounterexampleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CounterexampleFn::Zero => write!(f, "zero"),
            CounterexampleFn::Const(c) => write!(f, "const:{c}"),
            CounterexampleFn::Linear { a, b } => write!(f, "linear:{a},{b}"),
            CounterexampleFn::Table(t) => {
                let items: Vec<String> = t.iter().map(|v| v.to_string()).collect();
                write!(f, "table:[{}]", items.join(","))
            }
            CounterexampleFn::Custom { name, .. } => write!(f, "custom:{name}"),
        }
    }
}

fn parse_nat(s: &str, pos: usize) -> Result<BigUint> {
    let t = s.trim();
    if t.is_empty() || !t.chars().all(|c| c.is_ascii_digit()) {
        return Err(Error::Parse {
            pos: pos + (s.len() - s.trim_start().len()),
            msg: format!("expected a natural number, found {t:?}"),
        });
    }
    Ok(t.parse().expect("digits"))
}

impl CounterexampleFn {
    /// Parses `zero`, `successor`, `const:c`, `linear:a,b` or `table:[v0,v1,…]`.
    pub fn parse(spec: &str) -> Result<Self> {
        let s = spec.trim();
        let lead = spec.len() - spec.trim_start().len();
        match s {
            "zero" => return Ok(CounterexampleFn::Zero),
            "successor" => {
                return Ok(CounterexampleFn::Linear {
                    a: BigUint::one(),
                    b: BigUint::one(),
                })
            }
            _ => {}
        }
        let Some((kind, rest)) = s.split_once(':') else {
            return Err(Error::Parse {
                pos: lead,
                msg: format!("unknown function {s:?}; expected zero, successor, const:, linear: or table:"),
            });
        };
        let off = lead + kind.len() + 1;
        match kind {
            "const" => Ok(CounterexampleFn::Const(parse_nat(rest, off)?)),
            "linear" => {
                let Some((a, b)) = rest.split_once(',') else {
                    return Err(Error::Parse {
                        pos: off + rest.len(),
                        msg: "linear needs two coefficients `a,b`".into(),
                    });
                };
                Ok(CounterexampleFn::Linear {
                    a: parse_nat(a, off)?,
                    b: parse_nat(b, off + a.len() + 1)?,
                })
            }
            "table" => {
                let inner = rest.trim();
                let open = off + (rest.len() - rest.trim_start().len());
                let body = inner.strip_prefix('[').and_then(|x| x.strip_suffix(']')).ok_or(Error::Parse {
                    pos: open,
                    msg: "table needs a bracketed list `[v0,v1,…]`".into(),
                })?;
                if body.trim().is_empty() {
                    return Ok(CounterexampleFn::Table(Vec::new()));
                }
                let mut at = open + 1;
                let mut vals = Vec::new();
                for item in body.split(',') {
                    vals.push(parse_nat(item, at)?);
                    at += item.len() + 1;
                }
                Ok(CounterexampleFn::Table(vals))
            }
            _ => Err(Error::Parse {
                pos: lead,
                msg: format!("unknown function kind {kind:?}"),
            }),
        }
    }

    pub fn custom(name: &str, f: impl Fn(&BigUint) -> BigUint + Send + Sync + 'static) -> Self {
        CounterexampleFn::Custom {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn eval(&self, n: &BigUint) -> BigUint {
        match self {
            CounterexampleFn::Zero => BigUint::zero(),
            CounterexampleFn::Const(c) => c.clone(),
            CounterexampleFn::Linear { a, b } => a * n + b,
            CounterexampleFn::Table(t) => n
                .to_usize()
                .and_then(|i| t.get(i).cloned())
                .unwrap_or_else(BigUint::zero),
            CounterexampleFn::Custom { f, .. } => f(n),
        }
    }

    pub fn eval_u64(&self, n: u64) -> BigUint {
        self.eval(&BigUint::from(n))
    }

    /// `(a, b)` with `g(n) = a n + b`, when `g` is affine.
    pub fn as_affine(&self) -> Option<(BigUint, BigUint)> {
        match self {
            CounterexampleFn::Zero => Some((BigUint::zero(), BigUint::zero())),
            CounterexampleFn::Const(c) => Some((BigUint::zero(), c.clone())),
            CounterexampleFn::Linear { a, b } => Some((a.clone(), b.clone())),
            _ => None,
        }
    }
}

/// `h^m(0)`, either as an integer or, when too large to materialize, as a
/// lower bound on its binary logarithm.
#[derive(Debug, Clone, PartialEq)]
pub enum BigValue {
    Exact(BigUint),
    Huge { log2_at_least: f64 },
}

impl BigValue {
    pub fn exact(&self) -> Option<&BigUint> {
        match self {
            BigValue::Exact(v) => Some(v),
            BigValue::Huge { .. } => None,
        }
    }
}

impl serde::Serialize for BigValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            BigValue::Exact(v) => s.serialize_str(&v.to_str_radix(10)),
            BigValue::Huge { log2_at_least } => {
                let mut m = s.serialize_map(Some(1))?;
                m.serialize_entry("log2_at_least", log2_at_least)?;
                m.end()
            }
        }
    }
}

fn log2(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        n.to_f64().unwrap_or(f64::INFINITY).log2()
    } else {
        let shifted = n >> (bits - 64);
        shifted.to_f64().unwrap().log2() + (bits - 64) as f64
    }
}

/// `a^m(0)` for the affine map `n ↦ p n + q`.
pub fn iterate_affine(p: &BigUint, q: &BigUint, m: &BigUint, budget: &Budget) -> Result<BigValue> {
    if q.is_zero() || m.is_zero() {
        return Ok(BigValue::Exact(BigUint::zero()));
    }
    if p.is_zero() {
        return Ok(BigValue::Exact(q.clone()));
    }
    if p.is_one() {
        return Ok(BigValue::Exact(m * q));
    }
    // q (p^m - 1)/(p - 1) ≥ q p^{m-1}
    let lb = log2(q) + (log2(m) .exp2() - 1.0) * log2(p);
    let exact_m = m.to_u64().filter(|&mm| (mm as f64) * log2(p) + log2(q) < budget.bits as f64);
    match exact_m {
        Some(mm) => {
            let pm = num_traits::pow(p.clone(), mm as usize);
            Ok(BigValue::Exact(q * (pm - 1u32) / (p - 1u32)))
        }
        None => Ok(BigValue::Huge {
            log2_at_least: if lb.is_finite() { lb } else { f64::MAX },
        }),
    }
}

/// `h^m(0)` for an arbitrary step function, one step at a time.
///
/// Stops early when `h` reaches a fixed point. Exceeding the step budget is
/// a resource error.
pub fn iterate_steps(h: impl Fn(&BigUint) -> BigUint, m: &BigUint, budget: &Budget) -> Result<BigUint> {
    let mut n = BigUint::zero();
    let mut i = BigUint::zero();
    let mut steps = 0u64;
    while &i < m {
        if steps >= budget.steps {
            return Err(Error::Resource(format!(
                "iterating the step function {m} times exceeds the budget of {} steps",
                budget.steps
            )));
        }
        let next = h(&n);
        if next == n {
            break;
        }
        n = next;
        i += 1u32;
        steps += 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(n: u64) -> BigUint {
        BigUint::from(n)
    }

    #[test]
    fn mini_language() {
        assert_eq!(CounterexampleFn::parse("zero").unwrap().eval_u64(9), big(0));
        assert_eq!(CounterexampleFn::parse("linear:2,3").unwrap().eval_u64(5), big(13));
        let t = CounterexampleFn::parse("table:[5,1]").unwrap();
        assert_eq!((t.eval_u64(0), t.eval_u64(1), t.eval_u64(7)), (big(5), big(1), big(0)));
        assert_eq!(CounterexampleFn::parse(" const:4 ").unwrap().eval_u64(100), big(4));
        assert_eq!(CounterexampleFn::parse("successor").unwrap().eval_u64(6), big(7));
        assert_eq!(CounterexampleFn::parse("table:[]").unwrap().eval_u64(0), big(0));
        for s in ["zero", "const:3", "linear:1,0", "table:[5,1]"] {
            assert_eq!(CounterexampleFn::parse(s).unwrap().to_string(), s);
        }
    }

    #[test]
    fn parse_errors_report_positions() {
        let pos = |s: &str| match CounterexampleFn::parse(s) {
            Err(Error::Parse { pos, .. }) => pos,
            other => panic!("{s}: {other:?}"),
        };
        assert_eq!(pos("linear:2,x"), 9);
        assert_eq!(pos("table:[1,2,z]"), 11);
        assert_eq!(pos("const:-1"), 6);
        assert_eq!(pos("cubic:1"), 0);
        assert_eq!(pos("table:1,2"), 6);
        assert_eq!(pos("linear:3"), 8);
        assert_eq!(pos("bogus"), 0);
    }

    #[test]
    fn affine_closed_form_matches_iteration() {
        let budget = Budget::default();
        for (p, q) in [(0u64, 0u64), (0, 4), (1, 2), (1, 5), (2, 3), (3, 1), (5, 7)] {
            for m in 0..=20u64 {
                let direct = iterate_steps(|n| big(p) * n + big(q), &big(m), &budget).unwrap();
                let closed = iterate_affine(&big(p), &big(q), &big(m), &budget).unwrap();
                assert_eq!(closed, BigValue::Exact(direct), "p={p} q={q} m={m}");
            }
        }
        // h(n) = 2n + 3 from g(n) = n
        assert_eq!(
            iterate_affine(&big(2), &big(3), &big(10), &budget).unwrap(),
            BigValue::Exact(big(3 * 1023))
        );
    }

    #[test]
    fn oversized_values_are_not_materialized() {
        let budget = Budget { steps: 10, bits: 1000 };
        match iterate_affine(&big(2), &big(3), &big(5000), &budget).unwrap() {
            BigValue::Huge { log2_at_least } => assert!(log2_at_least > 4000.0),
            v => panic!("{v:?}"),
        }
        assert!(matches!(
            iterate_steps(|n| n + 1u32, &big(11), &budget),
            Err(Error::Resource(_))
        ));
        assert_eq!(iterate_steps(|n| n.clone(), &big(1_000_000), &budget).unwrap(), big(0));
    }
}
