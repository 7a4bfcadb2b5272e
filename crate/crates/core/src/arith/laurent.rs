//! Truncated Laurent series over `Z/p^c`, the work-horse for every
//! u-adic and p-power-torsion computation.
//!
//! A value is `sum coef[i] * u^(lo + i)`, known modulo `u^prec` when
//! `prec` is set and exactly otherwise.

use std::fmt;

use super::poly::QPoly;
use super::rational::{inv_mod, mul_mod, pow_u64, reduce_mod, Q};
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct Laurent {
    p: u64,
    c: u32,
    m: u64,
    lo: i64,
    coef: Vec<u64>,
    prec: Option<i64>,
}

/// Whether `n` products of residues mod `m` can be summed in a `u128`.
fn lazy_ok(m: u128, n: usize) -> bool {
    m.checked_mul(m).and_then(|mm| mm.checked_mul(n as u128 + 1)).is_some()
}

impl Laurent {
    pub fn zero(p: u64, c: u32) -> Self {
        Laurent { p, c, m: pow_u64(p, c), lo: 0, coef: vec![], prec: None }
    }

    pub fn zero_mod(p: u64, c: u32, prec: i64) -> Self {
        Laurent { prec: Some(prec), ..Laurent::zero(p, c) }
    }

    pub fn one(p: u64, c: u32) -> Self {
        Laurent::monomial(p, c, 1, 0)
    }

    pub fn monomial(p: u64, c: u32, a: u64, e: i64) -> Self {
        let m = pow_u64(p, c);
        Laurent { p, c, m, lo: e, coef: vec![a % m], prec: None }.normalized()
    }

    /// Build from `(exponent, residue)` terms.
    pub fn from_terms(p: u64, c: u32, terms: &[(i64, u64)], prec: Option<i64>) -> Self {
        let m = pow_u64(p, c);
        if terms.is_empty() {
            return Laurent { prec, ..Laurent::zero(p, c) }.normalized();
        }
        let lo = terms.iter().map(|t| t.0).min().unwrap();
        let hi = terms.iter().map(|t| t.0).max().unwrap();
        let mut coef = vec![0u64; (hi - lo + 1) as usize];
        for &(e, a) in terms {
            let i = (e - lo) as usize;
            coef[i] = (coef[i] + a % m) % m;
        }
        Laurent { p, c, m, lo, coef, prec }.normalized()
    }

    /// Dense coefficients from exponent `lo` upward.
    pub fn from_dense(p: u64, c: u32, lo: i64, coef: Vec<u64>, prec: Option<i64>) -> Self {
        let m = pow_u64(p, c);
        let coef = coef.into_iter().map(|a| a % m).collect();
        Laurent { p, c, m, lo, coef, prec }.normalized()
    }

    /// Reduce a p-integral rational polynomial, shifted by `u^shift`.
    pub fn from_qpoly(p: u64, c: u32, f: &QPoly, shift: i64) -> Result<Self> {
        let m = pow_u64(p, c);
        let coef = f.coeffs().iter().map(|a| reduce_mod(a, m)).collect::<Result<Vec<_>>>()?;
        Ok(Laurent::from_dense(p, c, shift, coef, None))
    }

    pub fn from_q(p: u64, c: u32, a: &Q) -> Result<Self> {
        let m = pow_u64(p, c);
        Ok(Laurent::monomial(p, c, reduce_mod(a, m)?, 0))
    }

    fn normalized(mut self) -> Self {
        if let Some(n) = self.prec {
            let keep = (n - self.lo).max(0) as usize;
            if keep < self.coef.len() {
                self.coef.truncate(keep);
            }
        }
        while self.coef.last() == Some(&0) {
            self.coef.pop();
        }
        let lead = self.coef.iter().take_while(|&&a| a == 0).count();
        if lead > 0 {
            self.coef.drain(..lead);
            self.lo += lead as i64;
        }
        if self.coef.is_empty() {
            self.lo = 0;
        }
        self
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn c(&self) -> u32 {
        self.c
    }

    pub fn modulus(&self) -> u64 {
        self.m
    }

    pub fn prec(&self) -> Option<i64> {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.prec.is_none()
    }

    /// True when the known digits are all zero.
    pub fn is_zero(&self) -> bool {
        self.coef.is_empty()
    }

    /// Lowest exponent with a nonzero coefficient.
    pub fn val(&self) -> Option<i64> {
        if self.coef.is_empty() {
            None
        } else {
            Some(self.lo)
        }
    }

    /// u-adic valuation of the reduction mod p.
    pub fn val_mod_p(&self) -> Option<i64> {
        self.coef.iter().position(|a| a % self.p != 0).map(|i| self.lo + i as i64)
    }

    /// Lower bound for the valuation, accounting for precision.
    pub fn val_bound(&self) -> i64 {
        match (self.val(), self.prec) {
            (Some(v), _) => v,
            (None, Some(n)) => n,
            (None, None) => i64::MAX,
        }
    }

    pub fn max_exponent(&self) -> Option<i64> {
        if self.coef.is_empty() {
            None
        } else {
            Some(self.lo + self.coef.len() as i64 - 1)
        }
    }

    pub fn coeff(&self, e: i64) -> u64 {
        if e < self.lo {
            return 0;
        }
        self.coef.get((e - self.lo) as usize).copied().unwrap_or(0)
    }

    pub fn terms(&self) -> impl Iterator<Item = (i64, u64)> + '_ {
        self.coef.iter().enumerate().filter(|(_, &a)| a != 0).map(move |(i, &a)| (self.lo + i as i64, a))
    }

    fn check(&self, o: &Laurent) {
        assert!(self.p == o.p && self.c == o.c, "mixed coefficient rings");
    }

    pub fn add(&self, o: &Laurent) -> Laurent {
        self.combine(o, false)
    }

    pub fn sub(&self, o: &Laurent) -> Laurent {
        self.combine(o, true)
    }

    fn combine(&self, o: &Laurent, negate: bool) -> Laurent {
        self.check(o);
        let prec = min_prec(self.prec, o.prec);
        if o.coef.is_empty() {
            return Laurent { prec, ..self.clone() }.normalized();
        }
        if self.coef.is_empty() {
            let r = if negate { o.neg() } else { o.clone() };
            return Laurent { prec, ..r }.normalized();
        }
        let lo = self.lo.min(o.lo);
        let hi = self.max_exponent().unwrap().max(o.max_exponent().unwrap());
        let mut coef = vec![0u64; (hi - lo + 1) as usize];
        for (i, &a) in self.coef.iter().enumerate() {
            coef[(self.lo - lo) as usize + i] = a;
        }
        for (i, &b) in o.coef.iter().enumerate() {
            let k = (o.lo - lo) as usize + i;
            coef[k] = if negate { (coef[k] + self.m - b) % self.m } else { (coef[k] + b) % self.m };
        }
        Laurent { p: self.p, c: self.c, m: self.m, lo, coef, prec }.normalized()
    }

    pub fn neg(&self) -> Laurent {
        let coef = self.coef.iter().map(|&a| (self.m - a) % self.m).collect();
        Laurent { coef, ..self.clone() }.normalized()
    }

    pub fn scale(&self, a: u64) -> Laurent {
        let coef = self.coef.iter().map(|&x| mul_mod(x, a % self.m, self.m)).collect();
        Laurent { coef, ..self.clone() }.normalized()
    }

    pub fn mul(&self, o: &Laurent) -> Laurent {
        self.check(o);
        let prec = match (self.prec, o.prec) {
            (None, None) => None,
            (Some(a), None) => {
                if o.is_zero() {
                    None
                } else {
                    Some(a + o.lo)
                }
            }
            (None, Some(b)) => {
                if self.is_zero() {
                    None
                } else {
                    Some(b + self.lo)
                }
            }
            (Some(a), Some(b)) => Some((a + o.val_bound()).min(b + self.val_bound())),
        };
        if self.coef.is_empty() || o.coef.is_empty() {
            return Laurent { prec, ..Laurent::zero(self.p, self.c) };
        }
        // only the digits below the product precision are needed
        let lo = self.lo + o.lo;
        let mut len = self.coef.len() + o.coef.len() - 1;
        if let Some(n) = prec {
            len = len.min((n - lo).max(0) as usize);
        }
        let mut acc = vec![0u128; len];
        let m = self.m as u128;
        // reduce once at the end when the sums cannot overflow
        let lazy = lazy_ok(m, self.coef.len().min(o.coef.len()));
        for (i, &a) in self.coef.iter().enumerate() {
            if a == 0 || i >= len {
                continue;
            }
            let a = a as u128;
            let top = o.coef.len().min(len - i);
            if lazy {
                for (x, &b) in acc[i..i + top].iter_mut().zip(&o.coef[..top]) {
                    *x += a * b as u128;
                }
            } else {
                for (x, &b) in acc[i..i + top].iter_mut().zip(&o.coef[..top]) {
                    *x = (*x + a * b as u128) % m;
                }
            }
        }
        let coef = acc.into_iter().map(|x| (x % m) as u64).collect();
        Laurent { p: self.p, c: self.c, m: self.m, lo, coef, prec }.normalized()
    }

    /// Multiply by `u^k`.
    pub fn shift(&self, k: i64) -> Laurent {
        let lo = if self.coef.is_empty() { 0 } else { self.lo + k };
        Laurent { lo, prec: self.prec.map(|n| n + k), ..self.clone() }
    }

    /// Forget everything from `u^n` on.
    pub fn truncate(&self, n: i64) -> Laurent {
        Laurent { prec: min_prec(self.prec, Some(n)), ..self.clone() }.normalized()
    }

    /// Drop the precision bookkeeping, treating the stored digits as exact.
    pub fn as_exact(&self) -> Laurent {
        Laurent { prec: None, ..self.clone() }
    }

    pub fn with_prec(&self, n: Option<i64>) -> Laurent {
        Laurent { prec: n, ..self.clone() }.normalized()
    }

    /// `u -> u^p`, trivial on coefficients.
    pub fn frobenius(&self) -> Laurent {
        let p = self.p as usize;
        if self.coef.is_empty() {
            return Laurent { prec: self.prec.map(|n| n * self.p as i64), ..self.clone() };
        }
        let mut coef = vec![0u64; (self.coef.len() - 1) * p + 1];
        for (i, &a) in self.coef.iter().enumerate() {
            coef[i * p] = a;
        }
        Laurent {
            lo: self.lo * self.p as i64,
            coef,
            prec: self.prec.map(|n| n * self.p as i64),
            ..self.clone()
        }
    }

    /// Reduce coefficients to `Z/p^c2`, `c2 <= c`.
    pub fn reduce(&self, c2: u32) -> Laurent {
        assert!(c2 <= self.c && c2 >= 1);
        let m2 = pow_u64(self.p, c2);
        let coef = self.coef.iter().map(|&a| a % m2).collect();
        Laurent { p: self.p, c: c2, m: m2, lo: self.lo, coef, prec: self.prec }.normalized()
    }

    /// Lift residues to `Z/p^c2`, `c2 >= c`, using the standard representatives.
    pub fn lift(&self, c2: u32) -> Laurent {
        assert!(c2 >= self.c);
        Laurent { c: c2, m: pow_u64(self.p, c2), ..self.clone() }
    }

    /// Exact division by `p^k`; the result lives in `Z/p^(c-k)`.
    pub fn div_p(&self, k: u32) -> Result<Laurent> {
        if k == 0 {
            return Ok(self.clone());
        }
        if k >= self.c {
            return Err(Error::InvalidInput("division by p exhausts the coefficient ring".into()));
        }
        let pk = pow_u64(self.p, k);
        if self.coef.iter().any(|a| a % pk != 0) {
            return Err(Error::InvalidInput("series not divisible by the requested p-power".into()));
        }
        let c2 = self.c - k;
        let coef = self.coef.iter().map(|a| a / pk).collect();
        Ok(Laurent::from_dense(self.p, c2, self.lo, coef, self.prec))
    }

    /// Minimal p-adic valuation of the coefficients, `c` for zero.
    pub fn content(&self) -> u32 {
        self.coef.iter().map(|&a| super::rational::vp_residue(a, self.p, self.c)).min().unwrap_or(self.c)
    }

    /// Inverse for series whose leading coefficient is a unit, to
    /// relative precision at most `cap`.
    pub fn inverse(&self, cap: i64) -> Result<Laurent> {
        let v = self.val().ok_or_else(|| Error::PrecisionExhausted("inverse of a zero series".into()))?;
        let a0 = self.coef[0];
        let a0inv = inv_mod(a0, self.m)
            .ok_or_else(|| Error::InvalidInput("leading coefficient is not a unit".into()))?;
        let rel = match self.prec {
            Some(n) => (n - v).min(cap),
            None => cap,
        };
        let rel = rel.max(0) as usize;
        let mut w = vec![0u64; rel];
        let m = self.m as u128;
        let lazy = lazy_ok(m, self.coef.len());
        for k in 0..rel {
            let mut s: u128 = 0;
            for j in 1..=k.min(self.coef.len() - 1) {
                s += self.coef[j] as u128 * w[k - j] as u128;
                if !lazy {
                    s %= m;
                }
            }
            let s = (if k == 0 { 1 } else { 0 } + m - s % m) % m;
            w[k] = ((s * a0inv as u128) % m) as u64;
        }
        let prec = if rel == 0 && self.prec.is_none() && self.coef.len() == 1 {
            None
        } else {
            Some(-v + rel as i64)
        };
        // exact monomials invert exactly
        if self.prec.is_none() && self.coef.len() == 1 {
            return Ok(Laurent::monomial(self.p, self.c, a0inv, -v));
        }
        Ok(Laurent { p: self.p, c: self.c, m: self.m, lo: -v, coef: w, prec }.normalized())
    }

    /// Equality of the known digits up to the common precision.
    pub fn agrees(&self, o: &Laurent) -> bool {
        self.sub(o).is_zero()
    }

    /// Polynomial part `sum_{e >= 0}` as a dense residue vector of length `n`.
    pub fn dense_window(&self, from: i64, n: usize) -> Vec<u64> {
        (0..n as i64).map(|i| self.coeff(from + i)).collect()
    }
}

impl PartialEq for Laurent {
    fn eq(&self, o: &Laurent) -> bool {
        self.p == o.p && self.c == o.c && self.prec == o.prec && self.lo == o.lo && self.coef == o.coef
    }
}

impl Eq for Laurent {}

fn min_prec(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(x.min(y)),
    }
}

impl fmt::Display for Laurent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (e, a) in self.terms() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match (a, e) {
                (_, 0) => write!(f, "{}", a)?,
                (1, 1) => write!(f, "u")?,
                (1, _) => write!(f, "u^{}", e)?,
                (_, 1) => write!(f, "{}*u", a)?,
                _ => write!(f, "{}*u^{}", a, e)?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        if let Some(n) = self.prec {
            write!(f, " + O(u^{})", n)?;
        }
        Ok(())
    }
}
