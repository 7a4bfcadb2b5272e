//! Harder-Narasimhan filtrations for any category given by rank, degree
//! and an enumerator of strict subobjects.

use std::fmt;

use num_traits::Zero;

use crate::arith::rational::{q, Q};
use crate::error::{Error, Result};
use crate::types::TypeVector;

/// How much of the subobject lattice an enumeration covers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Certificate {
    Exhaustive,
    Bounded(String),
}

impl Certificate {
    pub fn and(&self, o: &Certificate) -> Certificate {
        match (self, o) {
            (Certificate::Exhaustive, Certificate::Exhaustive) => Certificate::Exhaustive,
            (Certificate::Bounded(a), Certificate::Exhaustive) | (Certificate::Exhaustive, Certificate::Bounded(a)) => {
                Certificate::Bounded(a.clone())
            }
            (Certificate::Bounded(a), Certificate::Bounded(b)) => Certificate::Bounded(format!("{}; {}", a, b)),
        }
    }

    pub fn is_exhaustive(&self) -> bool {
        *self == Certificate::Exhaustive
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Certificate::Exhaustive => write!(f, "exhaustive"),
            Certificate::Bounded(s) => write!(f, "bounded ({})", s),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Enumeration<O> {
    pub subs: Vec<O>,
    pub certificate: Certificate,
}

/// One object together with its saturated subobjects.
pub trait SlopeCategory {
    type Obj: Clone + fmt::Debug;

    fn rank(&self, x: &Self::Obj) -> usize;
    fn degree(&self, x: &Self::Obj) -> Result<Q>;
    fn whole(&self) -> Self::Obj;
    /// `small` is a subobject of `big`.
    fn contains(&self, big: &Self::Obj, small: &Self::Obj) -> bool;
    /// Nonzero proper strict subobjects of the whole object.
    fn strict_subobjects(&self) -> Result<Enumeration<Self::Obj>>;

    fn same(&self, a: &Self::Obj, b: &Self::Obj) -> bool {
        self.contains(a, b) && self.contains(b, a)
    }
}

pub fn slope(rank: usize, degree: &Q) -> Result<Q> {
    if rank == 0 {
        return Err(Error::ZeroObject);
    }
    Ok(degree / q(rank as i64))
}

#[derive(Clone, Debug)]
pub struct HnFlag<O> {
    /// `0 < M_1 < ... < M_k = M`
    pub steps: Vec<O>,
    /// slopes of the graded pieces, strictly decreasing
    pub slopes: Vec<Q>,
    pub ranks: Vec<usize>,
    pub degrees: Vec<Q>,
    pub certificate: Certificate,
}

impl<O> HnFlag<O> {
    /// Each slope repeated by the rank of its graded piece.
    pub fn polygon(&self) -> TypeVector {
        let mut v = Vec::new();
        let mut prev = 0;
        for (s, &r) in self.slopes.iter().zip(&self.ranks) {
            for _ in prev..r {
                v.push(s.clone());
            }
            prev = r;
        }
        TypeVector::new(v)
    }

    pub fn is_semistable(&self) -> bool {
        self.steps.len() == 1
    }

    pub fn min_slope(&self) -> Q {
        self.slopes.last().cloned().unwrap_or_else(Q::zero)
    }
}

/// Next flag step above `cur`: maximal slope of `N/cur`, then maximal rank.
fn next_step<C: SlopeCategory>(
    cat: &C,
    cands: &[(C::Obj, usize, Q)],
    cur: Option<(usize, &Q, &C::Obj)>,
    cert: &Certificate,
) -> Result<(C::Obj, usize, Q)> {
    let (r0, d0) = cur.map_or((0, Q::zero()), |(r, d, _)| (r, d.clone()));
    let mut best: Option<(Q, usize, usize)> = None;
    let mut tie = false;
    for (i, (n, r, d)) in cands.iter().enumerate() {
        if *r <= r0 {
            continue;
        }
        if let Some((_, _, o)) = cur {
            if !cat.contains(n, o) {
                continue;
            }
        }
        let s = (d - &d0) / q((r - r0) as i64);
        match &best {
            None => {
                best = Some((s, *r, i));
                tie = false;
            }
            Some((bs, br, bi)) => {
                if s > *bs || (s == *bs && r > br) {
                    best = Some((s, *r, i));
                    tie = false;
                } else if s == *bs && r == br && !cat.same(n, &cands[*bi].0) {
                    tie = true;
                }
            }
        }
    }
    let (_, _, i) = best.ok_or(Error::ZeroObject)?;
    if tie {
        return Err(Error::BoundedSearchInconclusive(format!(
            "two distinct subobjects of maximal slope and rank; enumeration {}",
            cert
        )));
    }
    Ok(cands[i].clone())
}

pub fn hn_flag_from<C: SlopeCategory>(cat: &C, e: Enumeration<C::Obj>) -> Result<HnFlag<C::Obj>> {
    let whole = cat.whole();
    let rw = cat.rank(&whole);
    if rw == 0 {
        return Err(Error::ZeroObject);
    }
    let mut cands = Vec::with_capacity(e.subs.len() + 1);
    for s in e.subs {
        let r = cat.rank(&s);
        if r == 0 || r > rw {
            continue;
        }
        let d = cat.degree(&s)?;
        cands.push((s, r, d));
    }
    let dw = cat.degree(&whole)?;
    cands.push((whole, rw, dw));
    let mut flag = HnFlag { steps: vec![], slopes: vec![], ranks: vec![], degrees: vec![], certificate: e.certificate };
    loop {
        let cur = flag.steps.last().map(|o| (*flag.ranks.last().unwrap(), flag.degrees.last().unwrap(), o));
        let (prev_r, prev_d) = cur.as_ref().map_or((0, Q::zero()), |c| (c.0, c.1.clone()));
        let (n, r, d) = next_step(cat, &cands, cur, &flag.certificate)?;
        let s = (&d - &prev_d) / q((r - prev_r) as i64);
        flag.steps.push(n);
        flag.slopes.push(s);
        flag.ranks.push(r);
        flag.degrees.push(d);
        if r == rw {
            return Ok(flag);
        }
    }
}

pub fn hn_flag<C: SlopeCategory>(cat: &C) -> Result<HnFlag<C::Obj>> {
    hn_flag_from(cat, cat.strict_subobjects()?)
}

pub fn hn_polygon<C: SlopeCategory>(cat: &C) -> Result<TypeVector> {
    Ok(hn_flag(cat)?.polygon())
}

/// Semistability with the certificate of the underlying enumeration.
pub fn is_semistable<C: SlopeCategory>(cat: &C) -> Result<(bool, Certificate)> {
    let f = hn_flag(cat)?;
    Ok((f.is_semistable(), f.certificate))
}

pub fn max_destabilizing<C: SlopeCategory>(cat: &C) -> Result<C::Obj> {
    Ok(hn_flag(cat)?.steps.remove(0))
}

/// Direct sum of rank-one objects of the given degrees; subobjects are the
/// partial sums, encoded as bit masks.
#[derive(Clone, Debug)]
pub struct SplitSum {
    pub degrees: Vec<Q>,
}

impl SlopeCategory for SplitSum {
    type Obj = u64;

    fn rank(&self, x: &u64) -> usize {
        x.count_ones() as usize
    }

    fn degree(&self, x: &u64) -> Result<Q> {
        Ok(self.degrees.iter().enumerate().filter(|(i, _)| x >> i & 1 == 1).fold(Q::zero(), |a, (_, d)| a + d))
    }

    fn whole(&self) -> u64 {
        (1u64 << self.degrees.len()) - 1
    }

    fn contains(&self, big: &u64, small: &u64) -> bool {
        small & !big == 0
    }

    fn strict_subobjects(&self) -> Result<Enumeration<u64>> {
        let w = self.whole();
        Ok(Enumeration { subs: (1..w).collect(), certificate: Certificate::Exhaustive })
    }
}
