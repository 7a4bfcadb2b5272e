use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qr(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

pub fn vp_int(n: &BigInt, p: u64) -> Option<i64> {
    if n.is_zero() {
        return None;
    }
    let pb = BigInt::from(p);
    let mut m = n.abs();
    let mut v = 0;
    loop {
        let (d, r) = m.div_rem(&pb);
        if !r.is_zero() {
            return Some(v);
        }
        m = d;
        v += 1;
    }
}

/// p-adic valuation of a rational, `None` for zero.
pub fn vp(x: &Q, p: u64) -> Option<i64> {
    let a = vp_int(x.numer(), p)?;
    let b = vp_int(x.denom(), p).unwrap_or(0);
    Some(a - b)
}

pub fn pow_u64(p: u64, k: u32) -> u64 {
    p.checked_pow(k).expect("modulus overflow")
}

/// Reduce a p-integral rational modulo `m = p^k`.
pub fn reduce_mod(x: &Q, m: u64) -> Result<u64> {
    let mb = BigInt::from(m);
    let den = x.denom().mod_floor(&mb);
    let g = den.gcd(&mb);
    if !g.is_one() {
        return Err(Error::InvalidInput(format!("{} is not integral at the prime", x)));
    }
    let inv = inv_mod(den.to_u64().unwrap(), m)
        .ok_or_else(|| Error::InvalidInput(format!("{} is not integral at the prime", x)))?;
    let num = x.numer().mod_floor(&mb).to_u64().unwrap();
    Ok(mul_mod(num, inv, m))
}

pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn inv_mod(a: u64, m: u64) -> Option<u64> {
    let (mut t, mut nt) = (0i128, 1i128);
    let (mut r, mut nr) = (m as i128, (a % m) as i128);
    while nr != 0 {
        let qq = r / nr;
        (t, nt) = (nt, t - qq * nt);
        (r, nr) = (nr, r - qq * nr);
    }
    if r != 1 {
        return None;
    }
    Some(t.rem_euclid(m as i128) as u64)
}

/// Valuation of a residue modulo p^c; `c` when zero.
pub fn vp_residue(a: u64, p: u64, c: u32) -> u32 {
    if a == 0 {
        return c;
    }
    let mut v = 0;
    let mut x = a;
    while x.is_multiple_of(p) {
        x /= p;
        v += 1;
    }
    v.min(c)
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let mut r = BigInt::one();
    for i in 0..k {
        r = r * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    r
}

pub fn parse_rational(s: &str) -> Result<Q> {
    let t = s.trim();
    let bad = || Error::InvalidInput(format!("not a rational number: {:?}", s));
    if let Some((a, b)) = t.split_once('/') {
        let n: BigInt = a.trim().parse().map_err(|_| bad())?;
        let d: BigInt = b.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Q::new(n, d))
    } else {
        let n: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Q::from_integer(n))
    }
}

pub fn fmt_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

pub fn floor_q(x: &Q) -> i64 {
    x.floor().to_integer().to_i64().unwrap()
}

pub fn ceil_q(x: &Q) -> i64 {
    x.ceil().to_integer().to_i64().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valuations() {
        assert_eq!(vp(&qr(12, 5), 2), Some(2));
        assert_eq!(vp(&qr(3, 8), 2), Some(-3));
        assert_eq!(vp(&q(0), 3), None);
    }

    #[test]
    fn reduction() {
        assert_eq!(reduce_mod(&qr(1, 3), 8).unwrap(), 3);
        assert!(reduce_mod(&qr(1, 2), 8).is_err());
        assert_eq!(reduce_mod(&q(-1), 9).unwrap(), 8);
    }

    #[test]
    fn inverses() {
        assert_eq!(inv_mod(3, 16), Some(11));
        assert_eq!(inv_mod(2, 16), None);
    }
}
