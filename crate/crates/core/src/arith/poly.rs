use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};

use super::rational::{fmt_q, q, vp, Q};

/// Dense univariate polynomial in `u` with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct QPoly {
    c: Vec<Q>,
}

impl QPoly {
    pub fn new(mut c: Vec<Q>) -> Self {
        while c.last().is_some_and(|x| x.is_zero()) {
            c.pop();
        }
        QPoly { c }
    }

    pub fn from_ints(c: &[i64]) -> Self {
        QPoly::new(c.iter().map(|&x| q(x)).collect())
    }

    pub fn zero() -> Self {
        QPoly { c: vec![] }
    }

    pub fn one() -> Self {
        QPoly::constant(Q::one())
    }

    pub fn constant(a: Q) -> Self {
        QPoly::new(vec![a])
    }

    pub fn u() -> Self {
        QPoly::new(vec![Q::zero(), Q::one()])
    }

    pub fn monomial(a: Q, k: usize) -> Self {
        let mut c = vec![Q::zero(); k + 1];
        c[k] = a;
        QPoly::new(c)
    }

    pub fn is_zero(&self) -> bool {
        self.c.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.c.is_empty() {
            None
        } else {
            Some(self.c.len() - 1)
        }
    }

    pub fn coeffs(&self) -> &[Q] {
        &self.c
    }

    pub fn coeff(&self, i: usize) -> Q {
        self.c.get(i).cloned().unwrap_or_else(Q::zero)
    }

    pub fn lead(&self) -> Q {
        self.c.last().cloned().unwrap_or_else(Q::zero)
    }

    pub fn is_monic(&self) -> bool {
        self.c.last().is_some_and(|x| x.is_one())
    }

    pub fn scale(&self, a: &Q) -> Self {
        QPoly::new(self.c.iter().map(|x| x * a).collect())
    }

    pub fn shift(&self, k: usize) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let mut c = vec![Q::zero(); k];
        c.extend(self.c.iter().cloned());
        QPoly { c }
    }

    pub fn truncate(&self, n: usize) -> Self {
        QPoly::new(self.c.iter().take(n).cloned().collect())
    }

    pub fn eval(&self, x: &Q) -> Q {
        let mut acc = Q::zero();
        for a in self.c.iter().rev() {
            acc = acc * x + a;
        }
        acc
    }

    /// `u -> u^p`.
    pub fn frobenius(&self, p: u64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        let p = p as usize;
        let mut c = vec![Q::zero(); (self.c.len() - 1) * p + 1];
        for (i, a) in self.c.iter().enumerate() {
            c[i * p] = a.clone();
        }
        QPoly { c }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut r = QPoly::one();
        for _ in 0..k {
            r = &r * self;
        }
        r
    }

    /// Division by a monic polynomial: `self = q*e + r`, `deg r < deg e`.
    pub fn divmod_monic(&self, e: &QPoly) -> (QPoly, QPoly) {
        assert!(e.is_monic(), "divisor must be monic");
        self.divmod(e)
    }

    /// Euclidean division over Q.
    pub fn divmod(&self, d: &QPoly) -> (QPoly, QPoly) {
        let dd = d.degree().expect("division by zero polynomial");
        let lead_inv = d.lead().recip();
        let mut r = self.c.clone();
        if r.len() < dd + 1 {
            return (QPoly::zero(), self.clone());
        }
        let mut quo = vec![Q::zero(); r.len() - dd];
        for i in (0..quo.len()).rev() {
            let coef = &r[i + dd] * &lead_inv;
            if !coef.is_zero() {
                for j in 0..=dd {
                    let t = &coef * &d.c[j];
                    r[i + j] -= t;
                }
            }
            quo[i] = coef;
        }
        r.truncate(dd);
        (QPoly::new(quo), QPoly::new(r))
    }

    pub fn monic(&self) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        self.scale(&self.lead().recip())
    }

    pub fn gcd(a: &QPoly, b: &QPoly) -> QPoly {
        let (mut x, mut y) = (a.clone(), b.clone());
        while !y.is_zero() {
            let (_, r) = x.divmod(&y);
            x = y;
            y = r;
        }
        x.monic()
    }

    /// Minimal p-adic valuation of the coefficients (Gauss content).
    pub fn val_p(&self, p: u64) -> Option<i64> {
        self.c.iter().filter_map(|a| vp(a, p)).min()
    }

    /// Multiplicity of the monic factor `e`, `None` for the zero polynomial.
    pub fn val_e(&self, e: &QPoly) -> Option<u32> {
        if self.is_zero() {
            return None;
        }
        let mut f = self.clone();
        let mut k = 0;
        loop {
            let (qq, r) = f.divmod_monic(e);
            if !r.is_zero() {
                return Some(k);
            }
            f = qq;
            k += 1;
        }
    }
}

impl Add for &QPoly {
    type Output = QPoly;
    fn add(self, o: &QPoly) -> QPoly {
        let n = self.c.len().max(o.c.len());
        QPoly::new((0..n).map(|i| self.coeff(i) + o.coeff(i)).collect())
    }
}

impl Sub for &QPoly {
    type Output = QPoly;
    fn sub(self, o: &QPoly) -> QPoly {
        let n = self.c.len().max(o.c.len());
        QPoly::new((0..n).map(|i| self.coeff(i) - o.coeff(i)).collect())
    }
}

impl Neg for &QPoly {
    type Output = QPoly;
    fn neg(self) -> QPoly {
        QPoly::new(self.c.iter().map(|a| -a).collect())
    }
}

impl Mul for &QPoly {
    type Output = QPoly;
    fn mul(self, o: &QPoly) -> QPoly {
        if self.is_zero() || o.is_zero() {
            return QPoly::zero();
        }
        let mut c = vec![Q::zero(); self.c.len() + o.c.len() - 1];
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in o.c.iter().enumerate() {
                c[i + j] += a * b;
            }
        }
        QPoly::new(c)
    }
}

impl fmt::Display for QPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, a) in self.c.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            let neg = a.is_negative();
            let mag = a.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {} ", if neg { "-" } else { "+" })?;
            }
            first = false;
            let coef = fmt_q(&mag);
            match i {
                0 => write!(f, "{}", coef)?,
                _ => {
                    if !mag.is_one() {
                        write!(f, "{}*", coef)?;
                    }
                    if i == 1 {
                        write!(f, "u")?;
                    } else {
                        write!(f, "u^{}", i)?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Rational function `num/den` with `den` monic.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RatFunc {
    pub num: QPoly,
    pub den: QPoly,
}

impl RatFunc {
    pub fn new(num: QPoly, den: QPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return RatFunc { num, den: QPoly::one() };
        }
        let g = QPoly::gcd(&num, &den);
        let (mut n, _) = num.divmod(&g);
        let (mut d, _) = den.divmod(&g);
        let l = d.lead();
        n = n.scale(&l.recip());
        d = d.monic();
        RatFunc { num: n, den: d }
    }

    pub fn from_poly(f: QPoly) -> Self {
        RatFunc { num: f, den: QPoly::one() }
    }

    pub fn constant(a: Q) -> Self {
        RatFunc::from_poly(QPoly::constant(a))
    }

    pub fn zero() -> Self {
        RatFunc::from_poly(QPoly::zero())
    }

    pub fn one() -> Self {
        RatFunc::from_poly(QPoly::one())
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn add(&self, o: &RatFunc) -> RatFunc {
        if self.den == o.den {
            return RatFunc::new(&self.num + &o.num, self.den.clone());
        }
        RatFunc::new(&(&self.num * &o.den) + &(&o.num * &self.den), &self.den * &o.den)
    }

    pub fn sub(&self, o: &RatFunc) -> RatFunc {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> RatFunc {
        RatFunc { num: -&self.num, den: self.den.clone() }
    }

    pub fn mul(&self, o: &RatFunc) -> RatFunc {
        RatFunc::new(&self.num * &o.num, &self.den * &o.den)
    }

    pub fn div(&self, o: &RatFunc) -> RatFunc {
        assert!(!o.is_zero(), "division by zero");
        RatFunc::new(&self.num * &o.den, &self.den * &o.num)
    }

    /// The polynomial, when the denominator is trivial.
    pub fn as_poly(&self) -> Option<&QPoly> {
        if self.den == QPoly::one() {
            Some(&self.num)
        } else {
            None
        }
    }
}
