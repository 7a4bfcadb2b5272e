//! Decreasing filtrations on finite-dimensional vector spaces over `Q` or
//! `F_p`, with subspaces stored in reduced row-echelon form.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::arith::rational::{q, reduce_mod, Q};
use crate::error::{Error, Result};
use crate::types::TypeVector;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Field {
    Rationals,
    Prime(u64),
}

impl Field {
    /// Canonical representative; for `F_p` the residue in `[0, p)`.
    pub fn norm(&self, x: &Q) -> Q {
        match *self {
            Field::Rationals => x.clone(),
            Field::Prime(p) => q(reduce_mod(x, p).expect("element not integral at p") as i64),
        }
    }

    pub fn add(&self, a: &Q, b: &Q) -> Q {
        self.norm(&(a + b))
    }

    pub fn sub(&self, a: &Q, b: &Q) -> Q {
        self.norm(&(a - b))
    }

    pub fn mul(&self, a: &Q, b: &Q) -> Q {
        self.norm(&(a * b))
    }

    pub fn inv(&self, a: &Q) -> Q {
        assert!(!a.is_zero(), "inverse of zero");
        match *self {
            Field::Rationals => a.recip(),
            Field::Prime(p) => {
                let r = reduce_mod(a, p).unwrap();
                q(crate::arith::rational::inv_mod(r, p).unwrap() as i64)
            }
        }
    }

    pub fn vec(&self, v: &[Q]) -> Vec<Q> {
        v.iter().map(|x| self.norm(x)).collect()
    }

    /// Reduced row-echelon form with zero rows removed, and pivot columns.
    pub fn rref(&self, rows: &[Vec<Q>]) -> (Vec<Vec<Q>>, Vec<usize>) {
        let mut m: Vec<Vec<Q>> = rows.iter().map(|r| self.vec(r)).collect();
        let ncols = m.first().map_or(0, |r| r.len());
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..ncols {
            let Some(pr) = (row..m.len()).find(|&i| !m[i][col].is_zero()) else {
                continue;
            };
            m.swap(row, pr);
            let s = self.inv(&m[row][col]);
            for x in m[row].iter_mut() {
                *x = self.mul(x, &s);
            }
            for i in 0..m.len() {
                if i != row && !m[i][col].is_zero() {
                    let f = m[i][col].clone();
                    for j in 0..ncols {
                        let t = self.mul(&f, &m[row][j]);
                        m[i][j] = self.sub(&m[i][j], &t);
                    }
                }
            }
            pivots.push(col);
            row += 1;
            if row == m.len() {
                break;
            }
        }
        m.truncate(row);
        (m, pivots)
    }

    /// Basis of `{x : A x = 0}` for `A` given by rows with `ncols` columns.
    pub fn nullspace(&self, a: &[Vec<Q>], ncols: usize) -> Vec<Vec<Q>> {
        let (r, piv) = self.rref(a);
        let free: Vec<usize> = (0..ncols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); ncols];
                v[f] = Q::one();
                for (i, &pc) in piv.iter().enumerate() {
                    v[pc] = self.norm(&-&r[i][f]);
                }
                v
            })
            .collect()
    }

    pub fn rank(&self, rows: &[Vec<Q>]) -> usize {
        self.rref(rows).0.len()
    }
}

/// A subspace of `K^n`, canonically in reduced row-echelon form.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Subspace {
    pub field: Field,
    pub n: usize,
    rows: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn span(field: Field, n: usize, vecs: &[Vec<Q>]) -> Subspace {
        for v in vecs {
            assert_eq!(v.len(), n, "vector length");
        }
        let (rows, pivots) = field.rref(vecs);
        Subspace { field, n, rows, pivots }
    }

    pub fn zero(field: Field, n: usize) -> Subspace {
        Subspace { field, n, rows: vec![], pivots: vec![] }
    }

    pub fn whole(field: Field, n: usize) -> Subspace {
        let e: Vec<Vec<Q>> = (0..n).map(|i| unit(n, i)).collect();
        Subspace::span(field, n, &e)
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn basis(&self) -> &[Vec<Q>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduce `v` modulo the subspace.
    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let f = self.field;
        let mut v = f.vec(v);
        for (row, &pc) in self.rows.iter().zip(&self.pivots) {
            if !v[pc].is_zero() {
                let c = v[pc].clone();
                for j in 0..self.n {
                    let t = f.mul(&c, &row[j]);
                    v[j] = f.sub(&v[j], &t);
                }
            }
        }
        v
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    pub fn contains_space(&self, o: &Subspace) -> bool {
        o.rows.iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, o: &Subspace) -> Subspace {
        let mut v = self.rows.clone();
        v.extend(o.rows.iter().cloned());
        Subspace::span(self.field, self.n, &v)
    }

    pub fn intersect(&self, o: &Subspace) -> Subspace {
        let f = self.field;
        let (k, l) = (self.dim(), o.dim());
        if k == 0 || l == 0 {
            return Subspace::zero(f, self.n);
        }
        // solve a*U + b*W = 0
        let a: Vec<Vec<Q>> = (0..self.n)
            .map(|j| {
                let mut r: Vec<Q> = self.rows.iter().map(|u| u[j].clone()).collect();
                r.extend(o.rows.iter().map(|w| w[j].clone()));
                r
            })
            .collect();
        let ns = f.nullspace(&a, k + l);
        let vecs: Vec<Vec<Q>> = ns
            .iter()
            .map(|x| {
                let mut v = vec![Q::zero(); self.n];
                for i in 0..k {
                    for j in 0..self.n {
                        let t = f.mul(&x[i], &self.rows[i][j]);
                        v[j] = f.add(&v[j], &t);
                    }
                }
                v
            })
            .collect();
        Subspace::span(f, self.n, &vecs)
    }

    /// Coordinates of a member vector in the row basis.
    pub fn coords(&self, v: &[Q]) -> Vec<Q> {
        self.pivots.iter().map(|&pc| self.field.norm(&v[pc])).collect()
    }

    /// Coordinates of `v mod self` on the non-pivot columns.
    pub fn quotient_coords(&self, v: &[Q]) -> Vec<Q> {
        let r = self.reduce(v);
        (0..self.n).filter(|c| !self.pivots.contains(c)).map(|c| r[c].clone()).collect()
    }

    /// Extend a basis of `self` by vectors of `big` to a basis of `big`.
    pub fn complement_in(&self, big: &Subspace) -> Vec<Vec<Q>> {
        let mut cur = self.clone();
        let mut out = Vec::new();
        for v in big.basis() {
            if !cur.contains(v) {
                out.push(v.clone());
                cur = cur.sum(&Subspace::span(self.field, self.n, std::slice::from_ref(v)));
            }
        }
        out
    }
}

pub fn unit(n: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    v[i] = Q::one();
    v
}

/// `F^{>=breaks[j]} = steps[j]`, breaks strictly decreasing, steps strictly
/// increasing, last step the whole space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FlagFiltration {
    pub field: Field,
    pub dim: usize,
    breaks: Vec<Q>,
    steps: Vec<Subspace>,
}

impl FlagFiltration {
    pub fn new(field: Field, dim: usize, breaks: Vec<Q>, steps: Vec<Subspace>) -> Result<Self> {
        if breaks.len() != steps.len() {
            return Err(Error::LengthMismatch(breaks.len(), steps.len()));
        }
        if breaks.windows(2).any(|w| w[0] <= w[1]) {
            return Err(Error::InvalidInput("breaks must be strictly decreasing".into()));
        }
        for w in steps.windows(2) {
            if w[1].dim() <= w[0].dim() || !w[1].contains_space(&w[0]) {
                return Err(Error::InvalidInput("steps must be strictly increasing".into()));
            }
        }
        if dim > 0 && steps.last().is_none_or(|s| s.dim() != dim) {
            return Err(Error::InvalidInput("last step must be the whole space".into()));
        }
        if steps.first().is_some_and(|s| s.dim() == 0) {
            return Err(Error::InvalidInput("steps must be nonzero".into()));
        }
        Ok(FlagFiltration { field, dim, breaks, steps })
    }

    /// `V(g)`: everything in degree `g`.
    pub fn single(field: Field, dim: usize, g: Q) -> Self {
        if dim == 0 {
            return FlagFiltration { field, dim, breaks: vec![], steps: vec![] };
        }
        FlagFiltration { field, dim, breaks: vec![g], steps: vec![Subspace::whole(field, dim)] }
    }

    /// The filtration for which `vecs[i]` has weight `weights[i]`; the
    /// vectors must form a basis.
    pub fn from_weighted_basis(field: Field, dim: usize, vecs: &[Vec<Q>], weights: &[Q]) -> Result<Self> {
        if vecs.len() != dim || weights.len() != dim {
            return Err(Error::LengthMismatch(vecs.len(), dim));
        }
        if field.rank(vecs) != dim {
            return Err(Error::NotFullRank);
        }
        let mut ws: Vec<Q> = weights.to_vec();
        ws.sort_by(|a, b| b.cmp(a));
        ws.dedup();
        let steps = ws
            .iter()
            .map(|g| {
                let sel: Vec<Vec<Q>> =
                    vecs.iter().zip(weights).filter(|(_, w)| *w >= g).map(|(v, _)| v.clone()).collect();
                Subspace::span(field, dim, &sel)
            })
            .collect();
        FlagFiltration::new(field, dim, ws, steps)
    }

    /// From `(weight, spanning vectors of a graded complement)` pieces.
    pub fn from_pieces(field: Field, dim: usize, pieces: &[(Q, Vec<Vec<Q>>)]) -> Result<Self> {
        let mut vecs = Vec::new();
        let mut weights = Vec::new();
        for (w, b) in pieces {
            for v in b {
                vecs.push(v.clone());
                weights.push(w.clone());
            }
        }
        FlagFiltration::from_weighted_basis(field, dim, &vecs, &weights)
    }

    pub fn breaks(&self) -> &[Q] {
        &self.breaks
    }

    pub fn steps(&self) -> &[Subspace] {
        &self.steps
    }

    /// `F^{>=g}`
    pub fn at(&self, g: &Q) -> Subspace {
        match self.breaks.iter().rposition(|b| b >= g) {
            Some(j) => self.steps[j].clone(),
            None => Subspace::zero(self.field, self.dim),
        }
    }

    /// `F^{>g}`
    pub fn above(&self, g: &Q) -> Subspace {
        match self.breaks.iter().rposition(|b| b > g) {
            Some(j) => self.steps[j].clone(),
            None => Subspace::zero(self.field, self.dim),
        }
    }

    pub fn type_of(&self) -> TypeVector {
        let mut v = Vec::new();
        let mut prev = 0;
        for (b, s) in self.breaks.iter().zip(&self.steps) {
            for _ in prev..s.dim() {
                v.push(b.clone());
            }
            prev = s.dim();
        }
        TypeVector::new(v)
    }

    pub fn is_integral(&self) -> bool {
        self.breaks.iter().all(|b| b.is_integer())
    }

    /// Basis `e_1..e_r` adapted to the flag, with weights.
    pub fn adapted_basis(&self) -> (Vec<Vec<Q>>, Vec<Q>) {
        let mut vecs = Vec::new();
        let mut weights = Vec::new();
        let mut cur = Subspace::zero(self.field, self.dim);
        for (b, s) in self.breaks.iter().zip(&self.steps) {
            for v in cur.complement_in(s) {
                vecs.push(v);
                weights.push(b.clone());
            }
            cur = s.clone();
        }
        (vecs, weights)
    }

    fn from_subspace_chain(field: Field, dim: usize, chain: Vec<(Q, Subspace)>) -> Self {
        // keep the jumps only
        let mut breaks = Vec::new();
        let mut steps: Vec<Subspace> = Vec::new();
        for (g, s) in chain {
            if s.dim() == 0 || steps.last().is_some_and(|t| t.dim() == s.dim()) {
                continue;
            }
            breaks.push(g);
            steps.push(s);
        }
        FlagFiltration { field, dim, breaks, steps }
    }

    /// Filtrations induced on `W` and on `V/W`, each in its own coordinates:
    /// the row basis of `W` and the non-pivot coordinates of `V/W`.
    pub fn induce(&self, w: &Subspace) -> (FlagFiltration, FlagFiltration) {
        let f = self.field;
        let k = w.dim();
        let qd = self.dim - k;
        let mut sub_chain = Vec::new();
        let mut quo_chain = Vec::new();
        for (b, s) in self.breaks.iter().zip(&self.steps) {
            let inter = s.intersect(w);
            let c: Vec<Vec<Q>> = inter.basis().iter().map(|v| w.coords(v)).collect();
            sub_chain.push((b.clone(), Subspace::span(f, k, &c)));
            let qv: Vec<Vec<Q>> = s.basis().iter().map(|v| w.quotient_coords(v)).collect();
            quo_chain.push((b.clone(), Subspace::span(f, qd, &qv)));
        }
        (
            FlagFiltration::from_subspace_chain(f, k, sub_chain),
            FlagFiltration::from_subspace_chain(f, qd, quo_chain),
        )
    }

    pub fn direct_sum(&self, o: &FlagFiltration) -> FlagFiltration {
        let (a, wa) = self.adapted_basis();
        let (b, wb) = o.adapted_basis();
        let n = self.dim + o.dim;
        let mut vecs = Vec::new();
        for v in &a {
            let mut x = v.clone();
            x.extend(std::iter::repeat_n(Q::zero(), o.dim));
            vecs.push(x);
        }
        for v in &b {
            let mut x = vec![Q::zero(); self.dim];
            x.extend(v.iter().cloned());
            vecs.push(x);
        }
        let mut w = wa;
        w.extend(wb);
        FlagFiltration::from_weighted_basis(self.field, n, &vecs, &w).expect("adapted bases")
    }

    pub fn tensor(&self, o: &FlagFiltration) -> FlagFiltration {
        let f = self.field;
        let (a, wa) = self.adapted_basis();
        let (b, wb) = o.adapted_basis();
        let n = self.dim * o.dim;
        let mut vecs = Vec::new();
        let mut w = Vec::new();
        for (x, gx) in a.iter().zip(&wa) {
            for (y, gy) in b.iter().zip(&wb) {
                vecs.push(kron(f, x, y));
                w.push(gx + gy);
            }
        }
        FlagFiltration::from_weighted_basis(f, n, &vecs, &w).expect("adapted bases")
    }

    /// `Sym^k`, in the monomial basis ordered lexicographically.
    pub fn sym_power(&self, k: usize) -> FlagFiltration {
        let f = self.field;
        let (a, wa) = self.adapted_basis();
        let monos = multisets(self.dim, k);
        let index: BTreeMap<Vec<usize>, usize> = monos.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();
        let mut vecs = Vec::new();
        let mut w = Vec::new();
        for m in &monos {
            // product of the adapted vectors a[m_1] ... a[m_k]
            let mut poly: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
            poly.insert(vec![], Q::one());
            for &i in m {
                let mut next: BTreeMap<Vec<usize>, Q> = BTreeMap::new();
                for (mono, c) in &poly {
                    for (j, x) in a[i].iter().enumerate() {
                        if x.is_zero() {
                            continue;
                        }
                        let mut nm = mono.clone();
                        nm.push(j);
                        nm.sort();
                        let e = next.entry(nm).or_insert_with(Q::zero);
                        *e = f.add(e, &f.mul(c, x));
                    }
                }
                poly = next;
            }
            let mut v = vec![Q::zero(); monos.len()];
            for (mono, c) in poly {
                v[index[&mono]] = c;
            }
            vecs.push(v);
            w.push(m.iter().fold(Q::zero(), |s, &i| s + &wa[i]));
        }
        FlagFiltration::from_weighted_basis(f, monos.len(), &vecs, &w).expect("monomial basis")
    }

    /// `Lambda^k`, in the basis of increasing index sets.
    pub fn ext_power(&self, k: usize) -> FlagFiltration {
        let f = self.field;
        let (a, wa) = self.adapted_basis();
        let sets = subsets(self.dim, k);
        let mut vecs = Vec::new();
        let mut w = Vec::new();
        for s in &sets {
            let v: Vec<Q> = sets
                .iter()
                .map(|t| {
                    let minor: Vec<Vec<Q>> = s.iter().map(|&i| t.iter().map(|&j| a[i][j].clone()).collect()).collect();
                    det_field(f, &minor)
                })
                .collect();
            vecs.push(v);
            w.push(s.iter().fold(Q::zero(), |acc, &i| acc + &wa[i]));
        }
        FlagFiltration::from_weighted_basis(f, sets.len(), &vecs, &w).expect("wedge basis")
    }
}

/// Type of `Gr_{F1}(F2)`: the filtration induced by `F2` on each graded
/// piece of `F1`.
pub fn graded_type(f1: &FlagFiltration, f2: &FlagFiltration) -> TypeVector {
    let mut out = TypeVector::default();
    let mut prev = Subspace::zero(f1.field, f1.dim);
    for s in f1.steps() {
        let (on_s, _) = f2.induce(s);
        let prev_in_s: Vec<Vec<Q>> = prev.basis().iter().map(|v| s.coords(v)).collect();
        let pw = Subspace::span(f1.field, s.dim(), &prev_in_s);
        let (_, gr) = on_s.induce(&pw);
        out = out.concat(&gr.type_of());
        prev = s.clone();
    }
    out
}

fn kron(f: Field, x: &[Q], y: &[Q]) -> Vec<Q> {
    let mut v = Vec::with_capacity(x.len() * y.len());
    for a in x {
        for b in y {
            v.push(f.mul(a, b));
        }
    }
    v
}

pub fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for m in multisets(n, k - 1) {
        let start = m.last().copied().unwrap_or(0);
        for i in start..n {
            let mut x = m.clone();
            x.push(i);
            out.push(x);
        }
    }
    out
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for m in subsets(n, k - 1) {
        let start = m.last().map_or(0, |&x| x + 1);
        for i in start..n {
            let mut x = m.clone();
            x.push(i);
            out.push(x);
        }
    }
    out
}

pub fn det_field(f: Field, a: &[Vec<Q>]) -> Q {
    let n = a.len();
    let mut m: Vec<Vec<Q>> = a.iter().map(|r| f.vec(r)).collect();
    let mut d = Q::one();
    for k in 0..n {
        let Some(p) = (k..n).find(|&i| !m[i][k].is_zero()) else {
            return Q::zero();
        };
        if p != k {
            m.swap(p, k);
            d = f.norm(&-d);
        }
        d = f.mul(&d, &m[k][k]);
        let inv = f.inv(&m[k][k]);
        for i in k + 1..n {
            if m[i][k].is_zero() {
                continue;
            }
            let c = f.mul(&m[i][k], &inv);
            for j in k..n {
                let t = f.mul(&c, &m[k][j]);
                m[i][j] = f.sub(&m[i][j], &t);
            }
        }
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    const QQ: Field = Field::Rationals;

    fn v(x: &[i64]) -> Vec<Q> {
        x.iter().map(|&a| q(a)).collect()
    }

    #[test]
    fn types_of_flags() {
        assert_eq!(FlagFiltration::single(QQ, 3, q(2)).type_of(), TypeVector::from_ints(&[2, 2, 2]));
        let f = FlagFiltration::from_weighted_basis(QQ, 3, &[v(&[1, 0, 0]), v(&[0, 1, 0]), v(&[0, 0, 1])], &[q(1), q(0), q(0)])
            .unwrap();
        assert_eq!(f.type_of(), TypeVector::from_ints(&[1, 0, 0]));
        assert_eq!(FlagFiltration::single(QQ, 2, q(0)).type_of(), TypeVector::from_ints(&[0, 0]));
    }

    #[test]
    fn induced() {
        let f = FlagFiltration::from_weighted_basis(QQ, 2, &[v(&[1, 0]), v(&[0, 1])], &[q(1), q(0)]).unwrap();
        let line = Subspace::span(QQ, 2, &[v(&[1, 0])]);
        let (s, qt) = f.induce(&line);
        assert_eq!(s.type_of(), TypeVector::from_ints(&[1]));
        assert_eq!(qt.type_of(), TypeVector::from_ints(&[0]));
        let generic = Subspace::span(QQ, 2, &[v(&[1, 1])]);
        let (s, qt) = f.induce(&generic);
        assert_eq!(s.type_of(), TypeVector::from_ints(&[0]));
        assert_eq!(qt.type_of(), TypeVector::from_ints(&[1]));
        let (s, qt) = f.induce(&Subspace::whole(QQ, 2));
        assert_eq!(s, f);
        assert_eq!(qt.dim, 0);
    }

    #[test]
    fn combinations() {
        let a = FlagFiltration::single(QQ, 1, q(1));
        let b = FlagFiltration::single(QQ, 1, q(0));
        assert_eq!(a.direct_sum(&b).type_of(), TypeVector::from_ints(&[1, 0]));
        let x = FlagFiltration::single(QQ, 2, q(2));
        let y = FlagFiltration::single(QQ, 3, q(-5));
        assert_eq!(x.tensor(&y).breaks(), &[q(-3)]);
        let f = FlagFiltration::from_weighted_basis(
            QQ,
            3,
            &[v(&[1, 1, 0]), v(&[0, 1, 0]), v(&[1, 0, 2])],
            &[q(1), q(0), q(-1)],
        )
        .unwrap();
        assert_eq!(f.ext_power(2).type_of(), TypeVector::from_ints(&[1, 0, -1]));
        assert_eq!(f.sym_power(2).type_of(), f.type_of().sym_power(2));
    }

    #[test]
    fn prime_field_intersections() {
        let f = Field::Prime(3);
        let u = Subspace::span(f, 3, &[v(&[1, 1, 0]), v(&[0, 1, 1])]);
        let w = Subspace::span(f, 3, &[v(&[1, 0, 0]), v(&[0, 0, 1])]);
        let i = u.intersect(&w);
        assert_eq!(i.dim(), 1);
        assert!(i.contains(&v(&[1, 0, 2])));
    }
}
