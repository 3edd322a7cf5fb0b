//! Rational expressions in `r` and `ε` used to describe custom moduli.
//!
//! Grammar (whitespace ignored):
//!
//! ```text
//! expr  := term (("+" | "-" | "−") term)*
//! term  := unary (("*" | "×" | "/") unary)*
//! unary := ("-" | "−") unary | power
//! power := atom ("^" integer)?
//! atom  := number | "r" | "eps" | "ε" | "epsilon" | "(" expr ")"
//! ```

use num_rational::BigRational;
use num_traits::{One, Zero};
use std::fmt;

use crate::error::{Error, Result};
use crate::exact::{parse_rational, rational_string, Interval};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(BigRational),
    Radius,
    Eps,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    R,
    Eps,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        let simple = match c {
            c if c.is_whitespace() => {
                i += 1;
                continue;
            }
            '+' => Some(Tok::Plus),
            '-' | '−' => Some(Tok::Minus),
            '*' | '×' | '·' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            'ε' => Some(Tok::Eps),
            _ => None,
        };
        if let Some(t) = simple {
            out.push((pos, t));
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().map(|&(_, c)| c).collect();
            out.push((pos, Tok::Num(text)));
            continue;
        }
        if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].1.is_ascii_alphanumeric() {
                i += 1;
            }
            let word: String = chars[start..i].iter().map(|&(_, c)| c).collect();
            let tok = match word.as_str() {
                "r" => Tok::R,
                "eps" | "epsilon" => Tok::Eps,
                _ => {
                    return Err(Error::Parse {
                        pos,
                        msg: format!("unknown identifier {word:?}"),
                    })
                }
            };
            out.push((pos, tok));
            continue;
        }
        return Err(Error::Parse {
            pos,
            msg: format!("unexpected character {c:?}"),
        });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            pos: self.pos(),
            msg: msg.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.at += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.at += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if let Some(Tok::Minus) = self.peek() {
            self.at += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.at += 1;
            let exp = self.integer()?;
            return Ok(Expr::Pow(Box::new(base), exp));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<i32> {
        let mut sign = 1;
        let mut parens = 0;
        while let Some(Tok::LParen) = self.peek() {
            self.at += 1;
            parens += 1;
        }
        if let Some(Tok::Minus) = self.peek() {
            self.at += 1;
            sign = -1;
        }
        let value = match self.peek() {
            Some(Tok::Num(s)) if !s.contains('.') => match s.parse::<i32>() {
                Ok(v) => v,
                Err(_) => return self.err(format!("exponent {s} is too large")),
            },
            _ => return self.err("exponent must be an integer literal"),
        };
        self.at += 1;
        for _ in 0..parens {
            match self.peek() {
                Some(Tok::RParen) => self.at += 1,
                _ => return self.err("expected `)` after exponent"),
            }
        }
        Ok(sign * value)
    }

    fn atom(&mut self) -> Result<Expr> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return self.err("unexpected end of expression"),
        };
        match tok {
            Tok::Num(s) => {
                let pos = self.pos();
                self.at += 1;
                parse_rational(&s)
                    .map(Expr::Const)
                    .map_err(|_| Error::Parse {
                        pos,
                        msg: format!("bad number {s:?}"),
                    })
            }
            Tok::R => {
                self.at += 1;
                Ok(Expr::Radius)
            }
            Tok::Eps => {
                self.at += 1;
                Ok(Expr::Eps)
            }
            Tok::LParen => {
                self.at += 1;
                let e = self.expr()?;
                match self.peek() {
                    Some(Tok::RParen) => {
                        self.at += 1;
                        Ok(e)
                    }
                    _ => self.err("expected `)`"),
                }
            }
            other => self.err(format!("unexpected token {other:?}")),
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let toks = tokenize(src)?;
        let mut p = Parser {
            toks,
            at: 0,
            end: src.len(),
        };
        let e = p.expr()?;
        if p.at != p.toks.len() {
            return p.err("trailing input");
        }
        Ok(e)
    }

    pub fn eval_f64(&self, r: f64, eps: f64) -> f64 {
        match self {
            Expr::Const(q) => crate::exact::to_f64(q),
            Expr::Radius => r,
            Expr::Eps => eps,
            Expr::Neg(a) => -a.eval_f64(r, eps),
            Expr::Add(a, b) => a.eval_f64(r, eps) + b.eval_f64(r, eps),
            Expr::Sub(a, b) => a.eval_f64(r, eps) - b.eval_f64(r, eps),
            Expr::Mul(a, b) => a.eval_f64(r, eps) * b.eval_f64(r, eps),
            Expr::Div(a, b) => a.eval_f64(r, eps) / b.eval_f64(r, eps),
            Expr::Pow(a, n) => a.eval_f64(r, eps).powi(*n),
        }
    }

    pub fn eval_rational(&self, r: &BigRational, eps: &BigRational) -> Result<BigRational> {
        Ok(match self {
            Expr::Const(q) => q.clone(),
            Expr::Radius => r.clone(),
            Expr::Eps => eps.clone(),
            Expr::Neg(a) => -a.eval_rational(r, eps)?,
            Expr::Add(a, b) => a.eval_rational(r, eps)? + b.eval_rational(r, eps)?,
            Expr::Sub(a, b) => a.eval_rational(r, eps)? - b.eval_rational(r, eps)?,
            Expr::Mul(a, b) => a.eval_rational(r, eps)? * b.eval_rational(r, eps)?,
            Expr::Div(a, b) => {
                let d = b.eval_rational(r, eps)?;
                if d.is_zero() {
                    return Err(Error::domain("division by zero in modulus expression"));
                }
                a.eval_rational(r, eps)? / d
            }
            Expr::Pow(a, n) => {
                let base = a.eval_rational(r, eps)?;
                if *n < 0 && base.is_zero() {
                    return Err(Error::domain("zero raised to a negative power"));
                }
                let p = num_traits::pow(base, n.unsigned_abs() as usize);
                if *n < 0 {
                    BigRational::one() / p
                } else {
                    p
                }
            }
        })
    }

    pub fn eval_interval(&self, r: &Interval, eps: &Interval) -> Result<Interval> {
        Ok(match self {
            Expr::Const(q) => Interval::point(q.clone()),
            Expr::Radius => r.clone(),
            Expr::Eps => eps.clone(),
            Expr::Neg(a) => a.eval_interval(r, eps)?.neg(),
            Expr::Add(a, b) => a.eval_interval(r, eps)?.add(&b.eval_interval(r, eps)?),
            Expr::Sub(a, b) => a.eval_interval(r, eps)?.sub(&b.eval_interval(r, eps)?),
            Expr::Mul(a, b) => a.eval_interval(r, eps)?.mul(&b.eval_interval(r, eps)?),
            Expr::Div(a, b) => a.eval_interval(r, eps)?.div(&b.eval_interval(r, eps)?)?,
            Expr::Pow(a, n) => a.eval_interval(r, eps)?.powi(*n)?,
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(q) => write!(f, "{}", rational_string(q)),
            Expr::Radius => write!(f, "r"),
            Expr::Eps => write!(f, "eps"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a})^({n})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{int, rat};

    fn ev(s: &str, r: i64, e: (i64, i64)) -> BigRational {
        Expr::parse(s).unwrap().eval_rational(&int(r), &rat(e.0, e.1)).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(ev("1 + 2 * 3", 0, (0, 1)), int(7));
        assert_eq!(ev("8 / 4 / 2", 0, (0, 1)), int(1));
        assert_eq!(ev("10 - 3 - 2", 0, (0, 1)), int(5));
        assert_eq!(ev("-2^2", 0, (0, 1)), int(-4));
        assert_eq!(ev("(1+1)^(-2)", 0, (0, 1)), rat(1, 4));
        assert_eq!(ev("2^-1", 0, (0, 1)), rat(1, 2));
    }

    #[test]
    fn variables_and_unicode() {
        assert_eq!(ev("eps^2/8", 5, (1, 2)), rat(1, 32));
        assert_eq!(ev("ε × r − 1", 3, (1, 3)), int(0));
        assert_eq!(ev("epsilon^2/(8*r)", 2, (1, 1)), rat(1, 16));
        assert_eq!(ev("0.125 * eps", 1, (4, 5)), rat(1, 10));
    }

    #[test]
    fn errors_carry_positions() {
        match Expr::parse("eps^2/8 + q") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 10),
            other => panic!("{other:?}"),
        }
        match Expr::parse("eps^1.5") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        match Expr::parse("(eps + 1") {
            Err(Error::Parse { pos, .. }) => assert_eq!(pos, 8),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("eps $").is_err());
        assert!(Expr::parse("1 2").is_err());
    }

    #[test]
    fn display_reparses_to_the_same_value() {
        let e = Expr::parse("-(eps - r/3)^3 * 2 + 1/7").unwrap();
        let again = Expr::parse(&e.to_string()).unwrap();
        assert_eq!(
            e.eval_rational(&int(2), &rat(3, 5)).unwrap(),
            again.eval_rational(&int(2), &rat(3, 5)).unwrap()
        );
    }

    #[test]
    fn interval_eval_encloses_point_eval() {
        let e = Expr::parse("eps^2/(8*r) - eps/3").unwrap();
        let r = Interval::new(int(1), int(2));
        let eps = Interval::new(rat(1, 10), rat(1, 2));
        let iv = e.eval_interval(&r, &eps).unwrap();
        for (rn, en) in [(1, 1), (2, 5), (1, 3), (2, 1)] {
            let v = e.eval_rational(&int(rn), &rat(en, 10)).unwrap();
            assert!(iv.contains(&v), "{v} not in {iv:?}");
        }
        assert!(e.eval_rational(&int(0), &int(1)).is_err());
    }
}
