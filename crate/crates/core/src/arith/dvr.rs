//! Discrete valuation rings used as lattice contexts, and Smith normal
//! form over them.

use std::fmt;

use num_traits::{One, Zero};

use super::laurent::Laurent;
use super::poly::{QPoly, RatFunc};
use super::rational::{q, reduce_mod, vp, Q};
use crate::error::{Error, Result};
use crate::filtrations::Field;

/// Valuation of a possibly inexact element.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Val {
    Finite(i64),
    /// known only to vanish modulo `pi^n`
    AtLeast(i64),
    Zero,
}

impl Val {
    pub fn finite(self) -> Option<i64> {
        match self {
            Val::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// A lower bound, `i64::MAX` for exact zero.
    pub fn lower(self) -> i64 {
        match self {
            Val::Finite(v) | Val::AtLeast(v) => v,
            Val::Zero => i64::MAX,
        }
    }
}

pub type Mat<E> = Vec<Vec<E>>;

pub trait Dvr: Clone + fmt::Debug {
    type Elem: Clone + fmt::Debug + PartialEq;

    fn zero(&self) -> Self::Elem;
    fn one(&self) -> Self::Elem;
    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn neg(&self, a: &Self::Elem) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    /// Division in the fraction field; `b` must have finite valuation.
    fn div(&self, a: &Self::Elem, b: &Self::Elem) -> Result<Self::Elem>;
    fn val(&self, a: &Self::Elem) -> Val;
    /// `pi^k`, any integer `k`.
    fn pi_pow(&self, k: i64) -> Self::Elem;
    fn from_q(&self, a: &Q) -> Result<Self::Elem>;
    /// The residue field, when it is one of the exact fields we support.
    fn residue_field(&self) -> Option<Field>;
    /// Image of an integral element in the residue field.
    fn residue(&self, a: &Self::Elem) -> Result<Q>;
    fn describe(&self) -> String;
}

/// `Z_(p)` inside `Q`, uniformizer `p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAdic {
    pub p: u64,
}

impl Dvr for PAdic {
    type Elem = Q;

    fn zero(&self) -> Q {
        Q::zero()
    }
    fn one(&self) -> Q {
        Q::one()
    }
    fn add(&self, a: &Q, b: &Q) -> Q {
        a + b
    }
    fn sub(&self, a: &Q, b: &Q) -> Q {
        a - b
    }
    fn neg(&self, a: &Q) -> Q {
        -a
    }
    fn mul(&self, a: &Q, b: &Q) -> Q {
        a * b
    }
    fn div(&self, a: &Q, b: &Q) -> Result<Q> {
        if b.is_zero() {
            return Err(Error::NotFullRank);
        }
        Ok(a / b)
    }
    fn val(&self, a: &Q) -> Val {
        vp(a, self.p).map_or(Val::Zero, Val::Finite)
    }
    fn pi_pow(&self, k: i64) -> Q {
        let p = q(self.p as i64);
        if k >= 0 {
            num_traits::pow(p, k as usize)
        } else {
            num_traits::pow(p, (-k) as usize).recip()
        }
    }
    fn from_q(&self, a: &Q) -> Result<Q> {
        Ok(a.clone())
    }
    fn residue_field(&self) -> Option<Field> {
        Some(Field::Prime(self.p))
    }
    fn residue(&self, a: &Q) -> Result<Q> {
        Ok(q(reduce_mod(a, self.p)? as i64))
    }
    fn describe(&self) -> String {
        format!("p-adic, p = {}", self.p)
    }
}

/// `F_p[[u]]` with elements known to finite precision. `prec` bounds the
/// relative precision of quotients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UAdic {
    pub p: u64,
    pub prec: i64,
}

impl Dvr for UAdic {
    type Elem = Laurent;

    fn zero(&self) -> Laurent {
        Laurent::zero(self.p, 1)
    }
    fn one(&self) -> Laurent {
        Laurent::one(self.p, 1)
    }
    fn add(&self, a: &Laurent, b: &Laurent) -> Laurent {
        a.add(b)
    }
    fn sub(&self, a: &Laurent, b: &Laurent) -> Laurent {
        a.sub(b)
    }
    fn neg(&self, a: &Laurent) -> Laurent {
        a.neg()
    }
    fn mul(&self, a: &Laurent, b: &Laurent) -> Laurent {
        a.mul(b)
    }
    fn div(&self, a: &Laurent, b: &Laurent) -> Result<Laurent> {
        Ok(a.mul(&b.inverse(self.prec)?))
    }
    fn val(&self, a: &Laurent) -> Val {
        match (a.val(), a.prec()) {
            (Some(v), _) => Val::Finite(v),
            (None, Some(n)) => Val::AtLeast(n),
            (None, None) => Val::Zero,
        }
    }
    fn pi_pow(&self, k: i64) -> Laurent {
        Laurent::monomial(self.p, 1, 1, k)
    }
    fn from_q(&self, a: &Q) -> Result<Laurent> {
        Laurent::from_q(self.p, 1, a)
    }
    fn residue_field(&self) -> Option<Field> {
        Some(Field::Prime(self.p))
    }
    fn residue(&self, a: &Laurent) -> Result<Q> {
        if a.val_bound() < 0 {
            return Err(Error::InvalidInput("residue of a non-integral series".into()));
        }
        if a.val().is_none() && a.prec().is_some_and(|n| n <= 0) {
            return Err(Error::PrecisionExhausted("residue beyond known digits".into()));
        }
        Ok(q(a.coeff(0) as i64))
    }
    fn describe(&self) -> String {
        format!("u-adic over F_{}, precision {}", self.p, self.prec)
    }
}

/// The localization of `Q[u]` at the prime `p` (Gauss valuation).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SLocal {
    pub p: u64,
}

impl Dvr for SLocal {
    type Elem = RatFunc;

    fn zero(&self) -> RatFunc {
        RatFunc::zero()
    }
    fn one(&self) -> RatFunc {
        RatFunc::one()
    }
    fn add(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a.add(b)
    }
    fn sub(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a.sub(b)
    }
    fn neg(&self, a: &RatFunc) -> RatFunc {
        a.neg()
    }
    fn mul(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a.mul(b)
    }
    fn div(&self, a: &RatFunc, b: &RatFunc) -> Result<RatFunc> {
        if b.is_zero() {
            return Err(Error::NotFullRank);
        }
        Ok(a.div(b))
    }
    fn val(&self, a: &RatFunc) -> Val {
        match a.num.val_p(self.p) {
            None => Val::Zero,
            Some(v) => Val::Finite(v - a.den.val_p(self.p).unwrap_or(0)),
        }
    }
    fn pi_pow(&self, k: i64) -> RatFunc {
        RatFunc::constant(PAdic { p: self.p }.pi_pow(k))
    }
    fn from_q(&self, a: &Q) -> Result<RatFunc> {
        Ok(RatFunc::constant(a.clone()))
    }
    fn residue_field(&self) -> Option<Field> {
        None
    }
    fn residue(&self, _a: &RatFunc) -> Result<Q> {
        Err(Error::InvalidInput("the residue field F_p(u) is not supported".into()))
    }
    fn describe(&self) -> String {
        format!("Gauss p-adic on Q(u), p = {}", self.p)
    }
}

/// The localization of `Q[u]` at a monic irreducible `E`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EAdic {
    pub e: QPoly,
}

impl EAdic {
    pub fn new(e: QPoly) -> Result<Self> {
        if !e.is_monic() || e.degree().unwrap_or(0) == 0 {
            return Err(Error::InvalidInput("E must be monic of positive degree".into()));
        }
        Ok(EAdic { e })
    }
}

impl Dvr for EAdic {
    type Elem = RatFunc;

    fn zero(&self) -> RatFunc {
        RatFunc::zero()
    }
    fn one(&self) -> RatFunc {
        RatFunc::one()
    }
    fn add(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a.add(b)
    }
    fn sub(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a.sub(b)
    }
    fn neg(&self, a: &RatFunc) -> RatFunc {
        a.neg()
    }
    fn mul(&self, a: &RatFunc, b: &RatFunc) -> RatFunc {
        a.mul(b)
    }
    fn div(&self, a: &RatFunc, b: &RatFunc) -> Result<RatFunc> {
        if b.is_zero() {
            return Err(Error::NotFullRank);
        }
        Ok(a.div(b))
    }
    fn val(&self, a: &RatFunc) -> Val {
        match a.num.val_e(&self.e) {
            None => Val::Zero,
            Some(v) => Val::Finite(v as i64 - a.den.val_e(&self.e).unwrap_or(0) as i64),
        }
    }
    fn pi_pow(&self, k: i64) -> RatFunc {
        let pk = self.e.pow(k.unsigned_abs() as u32);
        if k >= 0 {
            RatFunc::from_poly(pk)
        } else {
            RatFunc::new(QPoly::one(), pk)
        }
    }
    fn from_q(&self, a: &Q) -> Result<RatFunc> {
        Ok(RatFunc::constant(a.clone()))
    }
    fn residue_field(&self) -> Option<Field> {
        if self.e.degree() == Some(1) {
            Some(Field::Rationals)
        } else {
            None
        }
    }
    fn residue(&self, a: &RatFunc) -> Result<Q> {
        if self.e.degree() != Some(1) {
            return Err(Error::InvalidInput("residue field is a proper extension of Q".into()));
        }
        let root = -self.e.coeff(0);
        let d = a.den.eval(&root);
        if d.is_zero() {
            return Err(Error::InvalidInput("residue of a non-integral element".into()));
        }
        Ok(a.num.eval(&root) / d)
    }
    fn describe(&self) -> String {
        format!("E-adic, E = {}", self.e)
    }
}

pub fn identity<D: Dvr>(ctx: &D, n: usize) -> Mat<D::Elem> {
    (0..n).map(|i| (0..n).map(|j| if i == j { ctx.one() } else { ctx.zero() }).collect()).collect()
}

pub fn mat_mul<D: Dvr>(ctx: &D, a: &Mat<D::Elem>, b: &Mat<D::Elem>) -> Mat<D::Elem> {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    let mut s = ctx.zero();
                    for (k, x) in row.iter().enumerate() {
                        if ctx.val(x) != Val::Zero {
                            s = ctx.add(&s, &ctx.mul(x, &b[k][j]));
                        }
                    }
                    s
                })
                .collect()
        })
        .collect()
}

pub fn transpose<E: Clone>(a: &Mat<E>) -> Mat<E> {
    let n = a.first().map_or(0, |r| r.len());
    (0..n).map(|j| a.iter().map(|r| r[j].clone()).collect()).collect()
}

/// Pick the entry of minimal finite valuation in the window, ties to the
/// lowest (row, column).
fn pick_pivot<D: Dvr>(
    ctx: &D,
    a: &Mat<D::Elem>,
    rows: std::ops::Range<usize>,
    cols: std::ops::Range<usize>,
) -> Result<(usize, usize, i64)> {
    let mut best: Option<(usize, usize, i64)> = None;
    let mut inexact = false;
    for i in rows {
        for j in cols.clone() {
            match ctx.val(&a[i][j]) {
                Val::Finite(v) => {
                    if best.is_none_or(|b| v < b.2) {
                        best = Some((i, j, v));
                    }
                }
                Val::AtLeast(_) => inexact = true,
                Val::Zero => {}
            }
        }
    }
    match best {
        Some(b) => Ok(b),
        None if inexact => Err(Error::PrecisionExhausted("every remaining entry vanishes to known precision".into())),
        None => Err(Error::NotFullRank),
    }
}

/// `left * A * right = diag(pi^d_1, ...)`, with `d` weakly increasing.
#[derive(Clone, Debug)]
pub struct Snf<E> {
    pub left: Mat<E>,
    pub right: Mat<E>,
    pub diag: Vec<i64>,
}

pub fn snf<D: Dvr>(ctx: &D, a: &Mat<D::Elem>) -> Result<Snf<D::Elem>> {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let mut a = a.clone();
    let mut left = identity(ctx, m);
    let mut right = identity(ctx, n);
    let mut diag = Vec::new();
    for k in 0..m.min(n) {
        let (pi, pj, v) = pick_pivot(ctx, &a, k..m, k..n)?;
        a.swap(k, pi);
        left.swap(k, pi);
        if pj != k {
            for row in a.iter_mut().chain(right.iter_mut()) {
                row.swap(k, pj);
            }
        }
        // make the pivot exactly pi^v
        let scale = ctx.div(&ctx.pi_pow(v), &a[k][k])?;
        for x in a[k].iter_mut().chain(left[k].iter_mut()) {
            *x = ctx.mul(x, &scale);
        }
        a[k][k] = ctx.pi_pow(v);
        let piv = a[k][k].clone();
        for i in k + 1..m {
            if ctx.val(&a[i][k]) == Val::Zero {
                continue;
            }
            let f = ctx.div(&a[i][k], &piv)?;
            for j in 0..n {
                let t = ctx.mul(&f, &a[k][j]);
                a[i][j] = ctx.sub(&a[i][j], &t);
            }
            for j in 0..m {
                let t = ctx.mul(&f, &left[k][j]);
                left[i][j] = ctx.sub(&left[i][j], &t);
            }
            a[i][k] = ctx.zero();
        }
        for j in k + 1..n {
            if ctx.val(&a[k][j]) == Val::Zero {
                continue;
            }
            let f = ctx.div(&a[k][j], &piv)?;
            for row in right.iter_mut() {
                let t = ctx.mul(&f, &row[k]);
                row[j] = ctx.sub(&row[j], &t);
            }
            a[k][j] = ctx.zero();
        }
        diag.push(v);
    }
    Ok(Snf { left, right, diag })
}

/// Inverse over the fraction field.
pub fn mat_inv<D: Dvr>(ctx: &D, a: &Mat<D::Elem>) -> Result<Mat<D::Elem>> {
    let n = a.len();
    let mut a = a.clone();
    let mut inv = identity(ctx, n);
    for k in 0..n {
        let (pi, _, _) = pick_pivot(ctx, &a, k..n, k..k + 1)?;
        a.swap(k, pi);
        inv.swap(k, pi);
        let piv = a[k][k].clone();
        let s = ctx.div(&ctx.one(), &piv)?;
        for x in a[k].iter_mut().chain(inv[k].iter_mut()) {
            *x = ctx.mul(x, &s);
        }
        for i in 0..n {
            if i == k || ctx.val(&a[i][k]) == Val::Zero {
                continue;
            }
            let f = a[i][k].clone();
            for j in 0..n {
                let t = ctx.mul(&f, &a[k][j]);
                a[i][j] = ctx.sub(&a[i][j], &t);
                let t = ctx.mul(&f, &inv[k][j]);
                inv[i][j] = ctx.sub(&inv[i][j], &t);
            }
        }
    }
    Ok(inv)
}

pub fn det<D: Dvr>(ctx: &D, a: &Mat<D::Elem>) -> Result<D::Elem> {
    let n = a.len();
    let mut a = a.clone();
    let mut d = ctx.one();
    for k in 0..n {
        let (pi, _, _) = match pick_pivot(ctx, &a, k..n, k..k + 1) {
            Ok(x) => x,
            Err(Error::NotFullRank) => return Ok(ctx.zero()),
            Err(e) => return Err(e),
        };
        if pi != k {
            a.swap(k, pi);
            d = ctx.neg(&d);
        }
        let piv = a[k][k].clone();
        d = ctx.mul(&d, &piv);
        for i in k + 1..n {
            if ctx.val(&a[i][k]) == Val::Zero {
                continue;
            }
            let f = ctx.div(&a[i][k], &piv)?;
            for j in k..n {
                let t = ctx.mul(&f, &a[k][j]);
                a[i][j] = ctx.sub(&a[i][j], &t);
            }
        }
    }
    Ok(d)
}

/// Minimal valuation over all entries (`Val::Zero` for the zero matrix).
pub fn mat_val<D: Dvr>(ctx: &D, a: &Mat<D::Elem>) -> Val {
    let mut best = Val::Zero;
    for x in a.iter().flatten() {
        let v = ctx.val(x);
        best = match (best, v) {
            (Val::Zero, w) => w,
            (b, Val::Zero) => b,
            (Val::Finite(x), Val::Finite(y)) => Val::Finite(x.min(y)),
            (Val::Finite(x), Val::AtLeast(y)) | (Val::AtLeast(y), Val::Finite(x)) => {
                if x <= y {
                    Val::Finite(x)
                } else {
                    Val::AtLeast(y)
                }
            }
            (Val::AtLeast(x), Val::AtLeast(y)) => Val::AtLeast(x.min(y)),
        };
    }
    best
}

pub fn is_integral<D: Dvr>(ctx: &D, a: &Mat<D::Elem>) -> bool {
    match mat_val(ctx, a) {
        Val::Zero => true,
        Val::Finite(v) | Val::AtLeast(v) => v >= 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::literal::parse_poly;

    fn lu(terms: &[(i64, u64)]) -> Laurent {
        Laurent::from_terms(2, 1, terms, None)
    }

    #[test]
    fn uadic_examples() {
        let ctx = UAdic { p: 2, prec: 32 };
        let a = vec![vec![lu(&[(2, 1)]), lu(&[])], vec![lu(&[]), lu(&[(0, 1)])]];
        assert_eq!(snf(&ctx, &a).unwrap().diag, vec![0, 2]);
        let a = vec![vec![lu(&[(1, 1)]), lu(&[(1, 1)])], vec![lu(&[(1, 1)]), lu(&[(1, 1), (2, 1)])]];
        assert_eq!(snf(&ctx, &a).unwrap().diag, vec![1, 2]);
    }

    #[test]
    fn eadic_example() {
        let e = parse_poly("u - 3").unwrap();
        let ctx = EAdic::new(e.clone()).unwrap();
        let a = vec![
            vec![RatFunc::from_poly(e.clone()), RatFunc::one()],
            vec![RatFunc::zero(), RatFunc::from_poly(e.pow(2))],
        ];
        assert_eq!(snf(&ctx, &a).unwrap().diag, vec![0, 3]);
    }

    #[test]
    fn transforms_diagonalize() {
        let ctx = PAdic { p: 3 };
        let a: Mat<Q> = vec![vec![q(6), q(9), q(1)], vec![q(3), q(27), q(0)], vec![q(0), q(1), q(18)]];
        let s = snf(&ctx, &a).unwrap();
        let d = mat_mul(&ctx, &mat_mul(&ctx, &s.left, &a), &s.right);
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    assert_eq!(d[i][j], ctx.pi_pow(s.diag[i]));
                } else {
                    assert!(d[i][j].is_zero());
                }
            }
        }
        assert!(s.diag.windows(2).all(|w| w[0] <= w[1]));
        assert!(is_integral(&ctx, &s.left) && is_integral(&ctx, &s.right));
    }

    #[test]
    fn singular_and_imprecise() {
        let ctx = PAdic { p: 2 };
        let a = vec![vec![q(1), q(2)], vec![q(2), q(4)]];
        assert_eq!(snf(&ctx, &a).unwrap_err(), Error::NotFullRank);
        let u = UAdic { p: 2, prec: 8 };
        let z = Laurent::zero_mod(2, 1, 5);
        let a = vec![vec![u.one(), u.zero()], vec![u.zero(), z]];
        assert!(matches!(snf(&u, &a), Err(Error::PrecisionExhausted(_))));
    }

    #[test]
    fn inverse_and_det() {
        let ctx = PAdic { p: 5 };
        let a = vec![vec![q(2), q(1)], vec![q(5), q(3)]];
        let inv = mat_inv(&ctx, &a).unwrap();
        assert_eq!(mat_mul(&ctx, &a, &inv), identity(&ctx, 2));
        assert_eq!(det(&ctx, &a).unwrap(), q(1));
    }
}
