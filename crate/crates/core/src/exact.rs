//! Exact rational arithmetic and rational interval enclosures.
//!
//! Bound constants are computed over `BigRational`. Transcendental factors
//! (`e^K`) are enclosed in intervals with rational endpoints, and integer
//! ceilings are certified by refining the enclosure until both endpoints
//! round up to the same integer.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use std::fmt;

use crate::error::{Error, Result};

/// Precisions (in bits) tried in turn when certifying a ceiling.
pub const PRECISION_LADDER: [u32; 5] = [64, 128, 256, 512, 2048];

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Parses `"3"`, `"-0.25"`, `"1e-3"`, `"2.5E2"` or `"7/3"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = |msg: &str| Error::Parse {
        pos: 0,
        msg: format!("{msg}: {s:?}"),
    };
    if let Some((n, d)) = s.split_once('/') {
        let n = parse_rational(n)?;
        let d = parse_rational(d)?;
        if d.is_zero() {
            return Err(bad("zero denominator"));
        }
        return Ok(n / d);
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (
            &s[..i],
            s[i + 1..].parse::<i32>().map_err(|_| bad("bad exponent"))?,
        ),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(bad("empty number"));
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad("not a decimal number"));
    }
    let all: String = format!("{whole}{frac}");
    let numer: BigInt = all.parse().unwrap_or_else(|_| BigInt::zero());
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut q = if scale >= 0 {
        BigRational::from_integer(numer * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(numer, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        q = -q;
    }
    Ok(q)
}

/// The rational written by the shortest decimal that round-trips to `x`
/// (so `0.1` becomes `1/10`, not the nearest binary fraction).
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    if !x.is_finite() {
        return Err(Error::domain(format!("{x} is not a finite number")));
    }
    parse_rational(&format!("{x}"))
}

pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

pub fn ceil_to_int(q: &BigRational) -> BigInt {
    q.ceil().to_integer()
}

/// Ceiling of a nonnegative rational as a natural number.
pub fn ceil_to_nat(q: &BigRational) -> Result<BigUint> {
    let c = ceil_to_int(q);
    c.to_biguint()
        .ok_or_else(|| Error::domain(format!("ceiling {c} is negative")))
}

/// A closed interval `[lo, hi]` with rational endpoints.
#[derive(Clone, PartialEq, Eq)]
pub struct Interval {
    lo: BigRational,
    hi: BigRational,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl Interval {
    pub fn new(lo: BigRational, hi: BigRational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order: {lo} > {hi}");
        Self { lo, hi }
    }

    pub fn point(q: BigRational) -> Self {
        Self {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn lo(&self) -> &BigRational {
        &self.lo
    }

    pub fn hi(&self) -> &BigRational {
        &self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, q: &BigRational) -> bool {
        &self.lo <= q && q <= &self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(&BigRational::zero())
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval::new(&self.lo + &o.lo, &self.hi + &o.hi)
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval::new(&self.lo - &o.hi, &self.hi - &o.lo)
    }

    pub fn neg(&self) -> Interval {
        Interval::new(-&self.hi, -&self.lo)
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Interval::new(lo, hi)
    }

    pub fn recip(&self) -> Result<Interval> {
        if self.contains_zero() {
            return Err(Error::domain(format!("division by interval {self:?} containing 0")));
        }
        Ok(Interval::new(self.hi.recip(), self.lo.recip()))
    }

    pub fn div(&self, o: &Interval) -> Result<Interval> {
        Ok(self.mul(&o.recip()?))
    }

    pub fn scale(&self, q: &BigRational) -> Interval {
        self.mul(&Interval::point(q.clone()))
    }

    pub fn powi(&self, n: i32) -> Result<Interval> {
        if n < 0 {
            return self.recip()?.powi(-n);
        }
        let n = n as usize;
        if n == 0 {
            return Ok(Interval::point(BigRational::one()));
        }
        let a = num_traits::pow(self.lo.clone(), n);
        let b = num_traits::pow(self.hi.clone(), n);
        Ok(if n % 2 == 1 || self.lo.is_positive() || self.lo.is_zero() {
            Interval::new(a.clone().min(b.clone()), a.max(b))
        } else if self.hi.is_negative() || self.hi.is_zero() {
            Interval::new(b, a)
        } else {
            Interval::new(BigRational::zero(), a.max(b))
        })
    }

    /// `min(self, c)` endpoint-wise.
    pub fn min_with(&self, c: &BigRational) -> Interval {
        Interval::new(self.lo.clone().min(c.clone()), self.hi.clone().min(c.clone()))
    }

    /// Widens the endpoints to multiples of `2^-bits`.
    pub fn round_outward(&self, bits: u32) -> Interval {
        if self.is_point() && self.lo.denom().bits() <= bits as u64 {
            return self.clone();
        }
        let scale = BigRational::from_integer(BigInt::one() << bits);
        let lo = (&self.lo * &scale).floor() / &scale;
        let hi = (&self.hi * &scale).ceil() / &scale;
        Interval::new(lo, hi)
    }

    /// Midpoint as a float, for display.
    pub fn approx(&self) -> f64 {
        to_f64(&((&self.lo + &self.hi) / int(2)))
    }
}

/// Encloses `e^x` for rational `x ≥ 0` within width about `2^-bits` relative
/// to its magnitude, using the Taylor series with a geometric tail bound.
pub fn exp_enclosure(x: &BigRational, bits: u32) -> Result<Interval> {
    if x.is_negative() {
        return Err(Error::domain(format!("exp enclosure needs x >= 0, got {x}")));
    }
    if x.is_zero() {
        return Ok(Interval::point(BigRational::one()));
    }
    let target = BigRational::new(BigInt::one(), BigInt::one() << bits);
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    let mut n: u64 = 0;
    loop {
        sum += &term;
        n += 1;
        term = term * x / BigRational::from_integer(BigInt::from(n));
        // remaining tail Σ_{j≥n} x^j/j! ≤ term / (1 - x/(n+1)) once x < n+1
        let ratio = x / BigRational::from_integer(BigInt::from(n + 1));
        if ratio < rat(1, 2) {
            let tail = &term / (BigRational::one() - ratio);
            if tail <= &target * &sum {
                let raw = Interval::new(sum.clone(), sum + tail);
                // keep the denominators bounded before the enclosure is reused
                let denom_bits = bits + 8 + x.ceil().to_integer().bits() as u32;
                return Ok(raw.round_outward(denom_bits));
            }
        }
    }
}

/// A ceiling of a quantity known only through enclosures.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CertifiedCeil {
    /// Ceiling of the upper endpoint of the tightest enclosure tried.
    pub value: BigUint,
    /// True when the lower endpoint rounds up to the same integer.
    pub certified: bool,
    /// Bits of precision of the enclosure that produced `value`.
    pub precision: u32,
}

/// Ceiling of a nonnegative quantity given an enclosure at a requested precision.
///
/// Tries each precision in [`PRECISION_LADDER`]; point enclosures certify at once.
/// Without certification the ceiling of the upper endpoint is returned, which
/// overestimates rather than underestimates.
pub fn certified_ceil(mut enclose: impl FnMut(u32) -> Result<Interval>) -> Result<CertifiedCeil> {
    let mut last = None;
    for &bits in &PRECISION_LADDER {
        let iv = enclose(bits)?;
        let lo = ceil_to_nat(iv.lo())?;
        let hi = ceil_to_nat(iv.hi())?;
        if lo == hi {
            return Ok(CertifiedCeil {
                value: hi,
                certified: true,
                precision: bits,
            });
        }
        last = Some(CertifiedCeil {
            value: hi,
            certified: false,
            precision: bits,
        });
    }
    Ok(last.expect("ladder is nonempty"))
}

/// Serializes a rational as `"p/q"` (or `"p"` for integers).
pub fn rational_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Serializable view of an [`Interval`]: endpoints as exact rational strings
/// plus a float approximation of the midpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntervalRecord {
    pub lo: String,
    pub hi: String,
    pub approx: f64,
}

impl From<&Interval> for IntervalRecord {
    fn from(iv: &Interval) -> Self {
        Self {
            lo: rational_string(iv.lo()),
            hi: rational_string(iv.hi()),
            approx: iv.approx(),
        }
    }
}

/// Serializes a big natural as its decimal string.
pub fn serialize_decimal<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&n.to_str_radix(10))
}

pub fn serialize_opt_decimal<S: Serializer>(
    n: &Option<BigUint>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match n {
        Some(n) => s.serialize_str(&n.to_str_radix(10)),
        None => s.serialize_none(),
    }
}
