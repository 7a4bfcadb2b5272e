//! Polynomial literals: integer or `a/b` coefficients, variable `u`,
//! operators `+ - * ^` and parentheses. Negative exponents of `u` are
//! accepted so Laurent polynomials can be written directly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::poly::QPoly;
use super::rational::Q;
use crate::error::{Error, Result};

/// A Laurent polynomial over Q, exponent -> coefficient.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LaurentPoly {
    pub terms: BTreeMap<i64, Q>,
}

impl LaurentPoly {
    fn constant(a: Q) -> Self {
        let mut t = BTreeMap::new();
        if !a.is_zero() {
            t.insert(0, a);
        }
        LaurentPoly { terms: t }
    }

    fn u() -> Self {
        let mut t = BTreeMap::new();
        t.insert(1, Q::one());
        LaurentPoly { terms: t }
    }

    fn add(&self, o: &Self, sign: i32) -> Self {
        let mut t = self.terms.clone();
        for (k, v) in &o.terms {
            let e = t.entry(*k).or_insert_with(Q::zero);
            if sign > 0 {
                *e += v;
            } else {
                *e -= v;
            }
        }
        t.retain(|_, v| !v.is_zero());
        LaurentPoly { terms: t }
    }

    fn mul(&self, o: &Self) -> Self {
        let mut t: BTreeMap<i64, Q> = BTreeMap::new();
        for (a, x) in &self.terms {
            for (b, y) in &o.terms {
                *t.entry(a + b).or_insert_with(Q::zero) += x * y;
            }
        }
        t.retain(|_, v| !v.is_zero());
        LaurentPoly { terms: t }
    }

    fn inverse_monomial(&self) -> Option<Self> {
        if self.terms.len() != 1 {
            return None;
        }
        let (k, v) = self.terms.iter().next().unwrap();
        let mut t = BTreeMap::new();
        t.insert(-k, v.recip());
        Some(LaurentPoly { terms: t })
    }

    pub fn min_exponent(&self) -> Option<i64> {
        self.terms.keys().next().copied()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The polynomial, failing on negative exponents.
    pub fn to_poly(&self) -> Result<QPoly> {
        if self.min_exponent().is_some_and(|e| e < 0) {
            return Err(Error::InvalidInput("negative power of u where a polynomial is required".into()));
        }
        let n = self.terms.keys().last().map_or(0, |&e| e as usize + 1);
        let mut c = vec![Q::zero(); n];
        for (k, v) in &self.terms {
            c[*k as usize] = v.clone();
        }
        Ok(QPoly::new(c))
    }

    /// The constant, failing when `u` occurs.
    pub fn to_constant(&self) -> Result<Q> {
        match self.terms.len() {
            0 => Ok(Q::zero()),
            1 if self.terms.contains_key(&0) => Ok(self.terms[&0].clone()),
            _ => Err(Error::InvalidInput("expected a constant".into())),
        }
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

fn perr(pos: usize, msg: &str) -> Error {
    Error::Parse { column: pos + 1, message: msg.to_string() }
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<LaurentPoly> {
        let mut acc = if self.peek() == Some(b'-') {
            self.pos += 1;
            LaurentPoly::default().add(&self.term()?, -1)
        } else {
            self.term()?
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, 1);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, -1);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<LaurentPoly> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<LaurentPoly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let e = self.exponent()?;
            if e >= 0 {
                let mut r = LaurentPoly::constant(Q::one());
                for _ in 0..e {
                    r = r.mul(&base);
                }
                Ok(r)
            } else {
                let inv = base
                    .inverse_monomial()
                    .ok_or_else(|| perr(self.pos, "negative exponent needs a monomial base"))?;
                let mut r = LaurentPoly::constant(Q::one());
                for _ in 0..(-e) {
                    r = r.mul(&inv);
                }
                Ok(r)
            }
        } else {
            Ok(base)
        }
    }

    fn exponent(&mut self) -> Result<i64> {
        let paren = self.peek() == Some(b'(');
        if paren {
            self.pos += 1;
        }
        let neg = self.peek() == Some(b'-');
        if neg {
            self.pos += 1;
        }
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(perr(start, "expected an integer exponent"));
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        let v: i64 = txt.parse().map_err(|_| perr(start, "exponent out of range"))?;
        if paren {
            if self.peek() != Some(b')') {
                return Err(perr(self.pos, "expected ')'"));
            }
            self.pos += 1;
        }
        Ok(if neg { -v } else { v })
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(perr(start, "expected an integer"));
        }
        let txt = std::str::from_utf8(&self.s[start..self.pos]).unwrap();
        Ok(txt.parse().unwrap())
    }

    fn atom(&mut self) -> Result<LaurentPoly> {
        match self.peek() {
            Some(b'u') => {
                self.pos += 1;
                Ok(LaurentPoly::u())
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(perr(self.pos, "expected ')'"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                if self.peek() == Some(b'/') {
                    self.pos += 1;
                    let at = self.pos;
                    let d = self.integer()?;
                    if d.is_zero() {
                        return Err(perr(at, "zero denominator"));
                    }
                    Ok(LaurentPoly::constant(Q::new(n, d)))
                } else {
                    Ok(LaurentPoly::constant(Q::from_integer(n)))
                }
            }
            Some(_) => Err(perr(self.pos, "unexpected character")),
            None => Err(perr(self.pos, "unexpected end of input")),
        }
    }
}

pub fn parse_laurent(src: &str) -> Result<LaurentPoly> {
    let mut p = Parser { s: src.as_bytes(), pos: 0 };
    if p.peek().is_none() {
        return Err(perr(0, "empty literal"));
    }
    let e = p.expr()?;
    if p.peek().is_some() {
        return Err(perr(p.pos, "trailing input"));
    }
    Ok(e)
}

pub fn parse_poly(src: &str) -> Result<QPoly> {
    parse_laurent(src)?.to_poly()
}
