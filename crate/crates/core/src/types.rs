//! Types: weakly decreasing rational sequences and their concave polygons.

use std::fmt;

use num_traits::{Signed, Zero};

use crate::arith::rational::{fmt_q, parse_rational, q, Q};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct TypeVector {
    entries: Vec<Q>,
}

impl TypeVector {
    pub fn new(mut entries: Vec<Q>) -> Self {
        entries.sort_by(|a, b| b.cmp(a));
        TypeVector { entries }
    }

    pub fn from_ints(v: &[i64]) -> Self {
        TypeVector::new(v.iter().map(|&x| q(x)).collect())
    }

    pub fn constant(a: Q, r: usize) -> Self {
        TypeVector { entries: vec![a; r] }
    }

    pub fn entries(&self) -> &[Q] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn degree(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |a, b| a + b)
    }

    fn prefix_sums(&self) -> Vec<Q> {
        let mut s = Q::zero();
        self.entries
            .iter()
            .map(|x| {
                s += x;
                s.clone()
            })
            .collect()
    }

    /// `self <= other` in the dominance order.
    pub fn dominance_le(&self, other: &TypeVector) -> Result<bool> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        let (a, b) = (self.prefix_sums(), other.prefix_sums());
        if a.last() != b.last() {
            return Ok(false);
        }
        Ok(a.iter().zip(&b).all(|(x, y)| x <= y))
    }

    pub fn add(&self, other: &TypeVector) -> Result<TypeVector> {
        if self.len() != other.len() {
            return Err(Error::LengthMismatch(self.len(), other.len()));
        }
        Ok(TypeVector::new(self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect()))
    }

    pub fn scale(&self, c: &Q) -> TypeVector {
        assert!(c.is_positive(), "scalar must be positive");
        TypeVector { entries: self.entries.iter().map(|x| x * c).collect() }
    }

    /// `(-g_r, ..., -g_1)`
    pub fn involution(&self) -> TypeVector {
        TypeVector { entries: self.entries.iter().rev().map(|x| -x).collect() }
    }

    pub fn norm_sq(&self) -> Q {
        self.entries.iter().fold(Q::zero(), |a, b| a + b * b)
    }

    /// The concatenation `*`: merge the two multisets.
    pub fn concat(&self, other: &TypeVector) -> TypeVector {
        let mut v = self.entries.clone();
        v.extend(other.entries.iter().cloned());
        TypeVector::new(v)
    }

    pub fn tensor(&self, other: &TypeVector) -> TypeVector {
        let mut v = Vec::with_capacity(self.len() * other.len());
        for a in &self.entries {
            for b in &other.entries {
                v.push(a + b);
            }
        }
        TypeVector::new(v)
    }

    /// Sums over strictly increasing index k-tuples; empty when `k > r`.
    pub fn ext_power(&self, k: usize) -> TypeVector {
        let mut out = Vec::new();
        let r = self.len();
        if k == 0 || k > r {
            return TypeVector::new(out);
        }
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(idx.iter().fold(Q::zero(), |s, &i| s + &self.entries[i]));
            let mut pos = k;
            while pos > 0 {
                pos -= 1;
                if idx[pos] < r - k + pos {
                    idx[pos] += 1;
                    for j in pos + 1..k {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if pos == 0 {
                    return TypeVector::new(out);
                }
            }
        }
    }

    /// Sums over weakly increasing index k-tuples.
    pub fn sym_power(&self, k: usize) -> TypeVector {
        let r = self.len();
        let mut out = Vec::new();
        if k == 0 || r == 0 {
            return TypeVector::new(out);
        }
        let mut idx = vec![0usize; k];
        loop {
            out.push(idx.iter().fold(Q::zero(), |s, &i| s + &self.entries[i]));
            let mut pos = k;
            loop {
                if pos == 0 {
                    return TypeVector::new(out);
                }
                pos -= 1;
                if idx[pos] < r - 1 {
                    idx[pos] += 1;
                    for j in pos + 1..k {
                        idx[j] = idx[pos];
                    }
                    break;
                }
            }
        }
    }

    /// Componentwise average of sorted types.
    pub fn sharp_average(orbit: &[TypeVector]) -> Result<TypeVector> {
        let lists: Vec<Vec<Q>> = orbit.iter().map(|t| t.entries.clone()).collect();
        sharp_average_weights(&lists)
    }

    pub fn polygon(&self) -> PolygonFunction {
        PolygonFunction::of_type(self)
    }
}

/// Average of weight lists taken position by position before sorting.
pub fn sharp_average_weights(orbit: &[Vec<Q>]) -> Result<TypeVector> {
    let Some(first) = orbit.first() else {
        return Err(Error::InvalidInput("empty orbit".into()));
    };
    let r = first.len();
    let mut acc = vec![Q::zero(); r];
    for w in orbit {
        if w.len() != r {
            return Err(Error::LengthMismatch(r, w.len()));
        }
        for (a, x) in acc.iter_mut().zip(w) {
            *a += x;
        }
    }
    let n = q(orbit.len() as i64);
    Ok(TypeVector::new(acc.into_iter().map(|a| a / &n).collect()))
}

impl fmt::Display for TypeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(fmt_q).collect();
        write!(f, "({})", parts.join(", "))
    }
}

impl std::str::FromStr for TypeVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<TypeVector> {
        let t = s.trim();
        let inner = t
            .strip_prefix('(')
            .and_then(|x| x.strip_suffix(')'))
            .ok_or_else(|| Error::InvalidInput(format!("type must be parenthesized: {:?}", s)))?;
        if inner.trim().is_empty() {
            return Ok(TypeVector::default());
        }
        let v = inner.split(',').map(parse_rational).collect::<Result<Vec<_>>>()?;
        Ok(TypeVector::new(v))
    }
}

/// True iff `sqrt(b) + sqrt(c) >= sqrt(a)` for nonnegative rationals.
pub fn sqrt_sum_ge(a: &Q, b: &Q, c: &Q) -> bool {
    let d = a - b - c;
    if !d.is_positive() {
        return true;
    }
    &d * &d <= q(4) * b * c
}

/// A concave piecewise-linear function on `[0, r]` starting at the origin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolygonFunction {
    points: Vec<(Q, Q)>,
}

impl PolygonFunction {
    /// Breakpoints must start at the origin with strictly increasing abscissas.
    pub fn new(points: Vec<(Q, Q)>) -> Result<Self> {
        if points.first() != Some(&(Q::zero(), Q::zero())) {
            return Err(Error::InvalidInput("polygon must start at (0, 0)".into()));
        }
        if points.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidInput("abscissas must increase".into()));
        }
        Ok(PolygonFunction { points }.simplified())
    }

    pub fn of_type(t: &TypeVector) -> Self {
        let mut pts = vec![(Q::zero(), Q::zero())];
        let mut y = Q::zero();
        for (i, g) in t.entries().iter().enumerate() {
            y += g;
            pts.push((q(i as i64 + 1), y.clone()));
        }
        PolygonFunction { points: pts }.simplified()
    }

    // drop collinear interior points
    fn simplified(self) -> Self {
        let pts = self.points;
        if pts.len() <= 2 {
            return PolygonFunction { points: pts };
        }
        let mut out: Vec<(Q, Q)> = vec![pts[0].clone()];
        for i in 1..pts.len() - 1 {
            let a = out.last().unwrap();
            let (b, c) = (&pts[i], &pts[i + 1]);
            let s1 = (&b.1 - &a.1) / (&b.0 - &a.0);
            let s2 = (&c.1 - &b.1) / (&c.0 - &b.0);
            if s1 != s2 {
                out.push(b.clone());
            }
        }
        out.push(pts.last().unwrap().clone());
        PolygonFunction { points: out }
    }

    pub fn points(&self) -> &[(Q, Q)] {
        &self.points
    }

    pub fn endpoint(&self) -> (Q, Q) {
        self.points.last().cloned().unwrap()
    }

    pub fn width(&self) -> Q {
        self.endpoint().0
    }

    pub fn eval(&self, x: &Q) -> Q {
        let pts = &self.points;
        if pts.len() == 1 {
            return pts[0].1.clone();
        }
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
            if x <= x1 {
                return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
            }
        }
        let n = pts.len();
        let ((x0, y0), (x1, y1)) = (&pts[n - 2], &pts[n - 1]);
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Slopes with the horizontal lengths they occupy.
    pub fn segments(&self) -> Vec<(Q, Q)> {
        self.points
            .windows(2)
            .map(|w| {
                let dx = &w[1].0 - &w[0].0;
                ((&w[1].1 - &w[0].1) / &dx, dx)
            })
            .collect()
    }

    pub fn is_concave(&self) -> bool {
        self.segments().windows(2).all(|w| w[0].0 >= w[1].0)
    }

    /// The type, when every breakpoint has integral abscissa.
    pub fn to_type(&self) -> Option<TypeVector> {
        let mut v = Vec::new();
        for (s, dx) in self.segments() {
            if !dx.is_integer() {
                return None;
            }
            for _ in 0..dx.to_integer().try_into().unwrap_or(0u64) {
                v.push(s.clone());
            }
        }
        Some(TypeVector::new(v))
    }

    fn abscissas(&self, o: &PolygonFunction) -> Vec<Q> {
        let mut xs: Vec<Q> = self.points.iter().chain(o.points.iter()).map(|p| p.0.clone()).collect();
        xs.sort();
        xs.dedup();
        xs
    }

    /// `self <= other` pointwise; endpoints must agree.
    pub fn le(&self, o: &PolygonFunction) -> Result<bool> {
        if self.endpoint() != o.endpoint() {
            return Err(Error::DomainMismatch(format!(
                "endpoints ({}, {}) and ({}, {})",
                fmt_q(&self.endpoint().0),
                fmt_q(&self.endpoint().1),
                fmt_q(&o.endpoint().0),
                fmt_q(&o.endpoint().1)
            )));
        }
        Ok(self.abscissas(o).iter().all(|x| self.eval(x) <= o.eval(x)))
    }

    /// `x -> f(n x) / n`, viewed on `[0, r/n]`.
    pub fn rescale(&self, n: u64) -> PolygonFunction {
        let n = q(n as i64);
        PolygonFunction { points: self.points.iter().map(|(x, y)| (x / &n, y / &n)).collect() }
    }

    pub fn scale_y(&self, c: &Q) -> PolygonFunction {
        PolygonFunction { points: self.points.iter().map(|(x, y)| (x.clone(), y * c)).collect() }.simplified()
    }

    pub fn shift_slopes(&self, s: &Q) -> PolygonFunction {
        PolygonFunction { points: self.points.iter().map(|(x, y)| (x.clone(), y + s * x)).collect() }.simplified()
    }

    /// Pointwise minimum of polygons on a common domain.
    pub fn min(&self, o: &PolygonFunction) -> Result<PolygonFunction> {
        if self.width() != o.width() {
            return Err(Error::DomainMismatch("polygons of different widths".into()));
        }
        let xs = self.abscissas(o);
        let mut pts: Vec<(Q, Q)> = Vec::new();
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                // add the crossing inside (xs[i-1], x) if the order flips
                let x0 = &xs[i - 1];
                let d0 = self.eval(x0) - o.eval(x0);
                let d1 = self.eval(x) - o.eval(x);
                if (d0.is_positive() && d1.is_negative()) || (d0.is_negative() && d1.is_positive()) {
                    let t = &d0 / (&d0 - &d1);
                    let xc = x0 + (x - x0) * t;
                    let yc = self.eval(&xc);
                    pts.push((xc, yc));
                }
            }
            let y = std::cmp::min(self.eval(x), o.eval(x));
            pts.push((x.clone(), y));
        }
        Ok(PolygonFunction { points: pts }.simplified())
    }

    pub fn max_gap(&self, o: &PolygonFunction) -> Q {
        self.abscissas(o).iter().map(|x| self.eval(x) - o.eval(x)).max().unwrap_or_else(Q::zero)
    }
}

impl fmt::Display for PolygonFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.points.iter().map(|(x, y)| format!("({}, {})", fmt_q(x), fmt_q(y))).collect();
        write!(f, "[{}]", parts.join(", "))
    }
}
