//! Isocrystals `(Q_p^r, b sigma)` with `sigma` trivial on coefficients,
//! their lattices, Mazur's inequality and filtered isocrystals.

use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::dvr::{det, mat_mul, PAdic};
use crate::arith::poly::QPoly;
use crate::arith::rational::{pow_u64, q, vp, Q};
use crate::error::{Error, Result};
use crate::filtrations::{unit, Field, FlagFiltration, Subspace};
use crate::hncore::{self, Certificate, Enumeration, HnFlag, SlopeCategory};
use crate::lattices::DvrLattice;
use crate::types::TypeVector;

pub type WittLattice = DvrLattice<PAdic>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Isocrystal {
    p: u64,
    b: Vec<Vec<Q>>,
    s: u32,
}

#[derive(Clone, Debug)]
pub struct FilteredIsocrystal {
    pub iso: Isocrystal,
    pub hodge: FlagFiltration,
}

fn identity(r: usize) -> Vec<Vec<Q>> {
    (0..r).map(|i| unit(r, i)).collect()
}

fn qmul(a: &[Vec<Q>], b: &[Vec<Q>]) -> Vec<Vec<Q>> {
    mat_mul(&PAdic { p: 2 }, &a.to_vec(), &b.to_vec())
}

fn qdet(a: &[Vec<Q>]) -> Q {
    if a.is_empty() {
        return Q::one();
    }
    det(&PAdic { p: 2 }, &a.to_vec()).expect("determinant over Q")
}

fn mat_vec(a: &[Vec<Q>], v: &[Q]) -> Vec<Q> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

/// `det(x - A)` by Faddeev-LeVerrier.
pub fn char_poly(a: &[Vec<Q>]) -> QPoly {
    let n = a.len();
    let mut c = vec![Q::zero(); n + 1];
    c[n] = Q::one();
    let mut m = vec![vec![Q::zero(); n]; n];
    for k in 1..=n {
        let mut mk = qmul(a, &m);
        for i in 0..n {
            mk[i][i] += &c[n + 1 - k];
        }
        let am = qmul(a, &mk);
        let tr: Q = (0..n).map(|i| am[i][i].clone()).sum();
        c[n - k] = -tr / q(k as i64);
        m = mk;
    }
    QPoly::new(c)
}

/// Valuations of the roots of `f` from its `p`-adic Newton polygon, decreasing.
pub fn root_valuations(f: &QPoly, p: u64) -> Vec<Q> {
    let n = f.degree().unwrap_or(0);
    let pts: Vec<(i64, i64)> =
        (0..=n).filter_map(|i| vp(&f.coeff(i), p).map(|v| (i as i64, v))).collect();
    let mut out = Vec::new();
    // roots equal to zero have infinite valuation; they cannot occur for invertible b
    let mut i = 0;
    while i + 1 < pts.len() {
        let (x0, y0) = pts[i];
        let mut best = i + 1;
        for j in i + 1..pts.len() {
            let (x, y) = pts[j];
            let (bx, by) = pts[best];
            // smallest slope, farthest point on ties
            if (y - y0) * (bx - x0) <= (by - y0) * (x - x0) {
                best = j;
            }
        }
        let (x1, y1) = pts[best];
        let slope = Q::new((y0 - y1).into(), (x1 - x0).into());
        for _ in 0..(x1 - x0) {
            out.push(slope.clone());
        }
        i = best;
    }
    out.sort_by(|a, b| b.cmp(a));
    out
}

/// Rational roots with multiplicity.
pub fn rational_roots(f: &QPoly) -> Vec<Q> {
    let mut f = f.clone();
    let mut out = Vec::new();
    while f.degree().is_some_and(|d| d > 0) && f.coeff(0).is_zero() {
        out.push(Q::zero());
        f = f.divmod(&QPoly::u()).0;
    }
    let Some(d) = f.degree() else { return out };
    if d == 0 {
        return out;
    }
    let den = f.coeffs().iter().fold(num_bigint::BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let ints: Vec<num_bigint::BigInt> = f.coeffs().iter().map(|c| (c * Q::from_integer(den.clone())).to_integer()).collect();
    let divisors = |n: &num_bigint::BigInt| -> Vec<i64> {
        let n = n.abs().to_i64().unwrap_or(0);
        (1..=n).filter(|k| n % k == 0).collect()
    };
    let cands: Vec<Q> = {
        let mut v = Vec::new();
        for a in divisors(&ints[0]) {
            for b in divisors(&ints[d]) {
                v.push(Q::new(a.into(), b.into()));
                v.push(Q::new((-a).into(), b.into()));
            }
        }
        v.sort();
        v.dedup();
        v
    };
    for r in cands {
        loop {
            if f.degree().is_none_or(|d| d == 0) || !f.eval(&r).is_zero() {
                break;
            }
            out.push(r.clone());
            f = f.divmod(&QPoly::new(vec![-r.clone(), Q::one()])).0;
        }
    }
    out.sort();
    out
}

impl Isocrystal {
    pub fn new(p: u64, b: Vec<Vec<Q>>, s: u32) -> Result<Self> {
        let r = b.len();
        if r == 0 || b.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidInput("Frobenius matrix must be square and nonempty".into()));
        }
        if s == 0 {
            return Err(Error::InvalidInput("residue Frobenius order must be positive".into()));
        }
        if qdet(&b).is_zero() {
            return Err(Error::NotFullRank);
        }
        Ok(Isocrystal { p, b, s })
    }

    pub fn from_ints(p: u64, b: &[&[i64]]) -> Result<Self> {
        Isocrystal::new(p, b.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect(), 1)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn rank(&self) -> usize {
        self.b.len()
    }

    pub fn matrix(&self) -> &[Vec<Q>] {
        &self.b
    }

    pub fn s(&self) -> u32 {
        self.s
    }

    /// `b sigma(b) ... sigma^{s-1}(b)`, which is `b^s` for trivial `sigma`.
    pub fn frobenius_power(&self) -> Vec<Vec<Q>> {
        let mut m = identity(self.rank());
        for _ in 0..self.s {
            m = qmul(&m, &self.b);
        }
        m
    }

    pub fn newton_type(&self) -> TypeVector {
        let f = char_poly(&self.frobenius_power());
        let s = q(self.s as i64);
        TypeVector::new(root_valuations(&f, self.p).into_iter().map(|v| v / &s).collect())
    }

    /// `kappa = v_p(det b)`
    pub fn kottwitz_point(&self) -> i64 {
        vp(&qdet(&self.b), self.p).unwrap()
    }

    fn ctx(&self) -> PAdic {
        PAdic { p: self.p }
    }

    pub fn lattice(&self, basis: Vec<Vec<Q>>) -> Result<WittLattice> {
        DvrLattice::new(self.ctx(), basis)
    }

    pub fn standard_lattice(&self) -> WittLattice {
        DvrLattice::standard(self.ctx(), self.rank())
    }

    /// `t_H(y) = Pos(y, b sigma(y))`
    pub fn lattice_hodge_type(&self, y: &WittLattice) -> Result<TypeVector> {
        y.pos(&y.transform(&self.b)?)
    }

    /// Mazur's inequality `t_N^iota <= t_H(y)`.
    pub fn mazur_check(&self, y: &WittLattice) -> Result<bool> {
        self.newton_type().involution().dominance_le(&self.lattice_hodge_type(y)?)
    }

    /// Lattices `p^B L_0 <= y <= p^{-B} L_0` with `t_H(y) = mu`.
    pub fn lattice_set(&self, mu: &TypeVector, bound: u32) -> Result<Vec<WittLattice>> {
        let mut out = Vec::new();
        for y in window_lattices(self.p, self.rank(), bound)? {
            if &self.lattice_hodge_type(&y)? == mu {
                out.push(y);
            }
        }
        Ok(out)
    }

    /// The group-theoretic criterion: `t_N^iota <= mu` and `kappa = -deg mu`.
    pub fn gashi_criterion(&self, mu: &TypeVector) -> Result<bool> {
        let newton = self.newton_type().involution().dominance_le(mu)?;
        Ok(newton && q(self.kottwitz_point()) == -mu.degree())
    }

    pub fn is_mu_ordinary(&self, mu: &TypeVector, bound: u32) -> Result<bool> {
        Ok(&self.newton_type().involution() == mu && !self.lattice_set(mu, bound)?.is_empty())
    }

    /// Eigenvalues with their eigenspaces, when `b` is diagonalizable over `Q`.
    pub fn eigen_decomposition(&self) -> Result<Vec<(Q, Subspace)>> {
        let r = self.rank();
        let mut roots = rational_roots(&char_poly(&self.b));
        if roots.len() != r {
            return Err(Error::NotDiagonalizable);
        }
        roots.dedup();
        let mut out = Vec::new();
        let mut total = 0;
        for l in roots {
            let m: Vec<Vec<Q>> =
                (0..r).map(|i| (0..r).map(|j| if i == j { &self.b[i][j] - &l } else { self.b[i][j].clone() }).collect()).collect();
            let ns = Field::Rationals.nullspace(&m, r);
            total += ns.len();
            out.push((l, Subspace::span(Field::Rationals, r, &ns)));
        }
        if total != r {
            return Err(Error::NotDiagonalizable);
        }
        Ok(out)
    }

    /// `F_N^iota`: the eigenspace of slope `v` placed in degree `-v`.
    pub fn opposed_newton_filtration(&self) -> Result<FlagFiltration> {
        let mut vecs = Vec::new();
        let mut weights = Vec::new();
        for (l, sp) in self.eigen_decomposition()? {
            let v = q(vp(&l, self.p).unwrap());
            for x in sp.basis() {
                vecs.push(x.clone());
                weights.push(-v.clone());
            }
        }
        FlagFiltration::from_weighted_basis(Field::Rationals, self.rank(), &vecs, &weights)
    }

    /// `Phi_cris^s(y) = y + s F_N^iota`.
    pub fn phi_cris(&self, y: &WittLattice, s: u32) -> Result<WittLattice> {
        let f = self.opposed_newton_filtration()?;
        let (vecs, w) = f.adapted_basis();
        let w: Vec<Q> = w.iter().map(|x| x * q(s as i64)).collect();
        let fs = FlagFiltration::from_weighted_basis(Field::Rationals, self.rank(), &vecs, &w)?;
        y.add_filtration(&fs)
    }

    /// `F(y) = (b sigma)^s y`
    pub fn frobenius_translate(&self, y: &WittLattice, s: u32) -> Result<WittLattice> {
        let mut out = y.clone();
        for _ in 0..s {
            out = out.transform(&self.b)?;
        }
        Ok(out)
    }

    fn restricted_det_val(&self, w: &Subspace) -> i64 {
        let k = w.dim();
        let cols: Vec<Vec<Q>> = w.basis().iter().map(|v| w.coords(&mat_vec(&self.b, v))).collect();
        let m: Vec<Vec<Q>> = (0..k).map(|i| (0..k).map(|j| cols[j][i].clone()).collect()).collect();
        vp(&qdet(&m), self.p).unwrap()
    }

    fn is_stable(&self, w: &Subspace) -> bool {
        w.basis().iter().all(|v| w.contains(&mat_vec(&self.b, v)))
    }
}

/// All lattices between `p^B Z_p^r` and `p^{-B} Z_p^r`, `r <= 2`, by Hermite forms.
pub fn window_lattices(p: u64, r: usize, bound: u32) -> Result<Vec<WittLattice>> {
    if r > 2 || bound > 2 {
        return Err(Error::SearchBudgetExceeded(format!("lattice window needs rank <= 2 and B <= 2, got r = {}, B = {}", r, bound)));
    }
    let ctx = PAdic { p };
    let n = 2 * bound;
    let scale = Q::new(1.into(), pow_u64(p, bound).into());
    let mut out = Vec::new();
    if r == 1 {
        for a in 0..=n {
            out.push(DvrLattice::new(ctx.clone(), vec![vec![q(pow_u64(p, a) as i64) * &scale]])?);
        }
        return Ok(out);
    }
    for a in 0..=n {
        let pa = pow_u64(p, a);
        for d in 0..=n {
            let need = pow_u64(p, a.saturating_sub(n - d));
            for x in 0..pa {
                if x % need != 0 {
                    continue;
                }
                let basis = vec![vec![q(pa as i64) * &scale, q(x as i64) * &scale], vec![Q::zero(), q(pow_u64(p, d) as i64) * &scale]];
                out.push(DvrLattice::new(ctx.clone(), basis)?);
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Degree {
    /// `deg t_H - deg t_N`
    Admissibility,
    /// `-deg t_H`
    Fargues,
}

/// Sub-isocrystals of a filtered isocrystal with one of its degree functions.
#[derive(Clone, Debug)]
pub struct FiCategory<'a> {
    fi: &'a FilteredIsocrystal,
    mode: Degree,
}

impl FilteredIsocrystal {
    pub fn new(iso: Isocrystal, hodge: FlagFiltration) -> Result<Self> {
        if hodge.dim != iso.rank() || hodge.field != Field::Rationals {
            return Err(Error::InvalidInput("Hodge flag must be a rational flag on the isocrystal".into()));
        }
        if !hodge.is_integral() {
            return Err(Error::NonIntegralFiltration(hodge.type_of().to_string()));
        }
        Ok(FilteredIsocrystal { iso, hodge })
    }

    /// The flag `F^i = line`, `F^{i'} = D` below, on a rank-two isocrystal.
    pub fn with_line(iso: Isocrystal, line: Vec<Q>, top: i64, bottom: i64) -> Result<Self> {
        let r = iso.rank();
        let f = FlagFiltration::new(
            Field::Rationals,
            r,
            vec![q(top), q(bottom)],
            vec![Subspace::span(Field::Rationals, r, &[line]), Subspace::whole(Field::Rationals, r)],
        )?;
        FilteredIsocrystal::new(iso, f)
    }

    pub fn hodge_type(&self) -> TypeVector {
        self.hodge.type_of()
    }

    pub fn newton_type(&self) -> TypeVector {
        self.iso.newton_type()
    }

    /// `deg D = deg t_H - deg t_N`
    pub fn deg(&self) -> Q {
        self.hodge_type().degree() - self.newton_type().degree()
    }

    fn sub_hodge_degree(&self, w: &Subspace) -> Q {
        self.hodge.induce(w).0.type_of().degree()
    }

    /// Sub-isocrystals: rational eigenlines, eigenplanes and, inside
    /// eigenspaces of dimension at least two, the lines that meet the flag.
    pub fn sub_isocrystals(&self) -> Result<Enumeration<Subspace>> {
        let r = self.iso.rank();
        if r > 3 {
            return Err(Error::SearchBudgetExceeded(format!("sub-isocrystal search supports rank <= 3, got {}", r)));
        }
        let f = Field::Rationals;
        let mut subs: Vec<Subspace> = Vec::new();
        let push = |w: Subspace, subs: &mut Vec<Subspace>| {
            if w.dim() > 0 && w.dim() < r && !subs.contains(&w) {
                subs.push(w);
            }
        };
        let roots = {
            let mut v = rational_roots(&char_poly(&self.iso.b));
            v.dedup();
            v
        };
        let mut eig: Vec<Subspace> = Vec::new();
        for l in &roots {
            let m: Vec<Vec<Q>> = (0..r)
                .map(|i| (0..r).map(|j| if i == j { &self.iso.b[i][j] - l } else { self.iso.b[i][j].clone() }).collect())
                .collect();
            eig.push(Subspace::span(f, r, &f.nullspace(&m, r)));
        }
        for e in &eig {
            if e.dim() == 1 {
                push(e.clone(), &mut subs);
                continue;
            }
            push(e.clone(), &mut subs);
            for st in self.hodge.steps() {
                let x = st.intersect(e);
                push(x.clone(), &mut subs);
                if x.dim() + 1 < e.dim() || x.dim() == 0 {
                    // a line of the eigenspace in general position with the flag
                    if let Some(g) = e.basis().iter().cloned().chain(std::iter::once(e.basis().iter().fold(vec![Q::zero(); r], |acc, v| {
                        acc.iter().zip(v).map(|(a, b)| a + b).collect()
                    })))
                    .find(|v| self.hodge.steps().iter().all(|s| s.dim() == r || !s.contains(v)))
                    {
                        push(Subspace::span(f, r, &[g]), &mut subs);
                    }
                }
            }
            if self.hodge.steps().len() <= 1 {
                push(Subspace::span(f, r, &[e.basis()[0].clone()]), &mut subs);
            }
        }
        if r == 3 {
            let lines: Vec<Subspace> = subs.iter().filter(|w| w.dim() == 1).cloned().collect();
            for i in 0..lines.len() {
                for j in i + 1..lines.len() {
                    push(lines[i].sum(&lines[j]), &mut subs);
                }
            }
        }
        subs.retain(|w| self.iso.is_stable(w));
        let certificate = if r <= 2 {
            Certificate::Exhaustive
        } else {
            Certificate::Bounded("rank-three sub-isocrystals from eigenlines and their sums".into())
        };
        Ok(Enumeration { subs, certificate })
    }

    fn category(&self, mode: Degree) -> FiCategory<'_> {
        FiCategory { fi: self, mode }
    }

    /// `deg D = 0` and every sub-isocrystal has `deg <= 0`.
    pub fn is_weakly_admissible(&self) -> Result<(bool, Certificate)> {
        let cat = self.category(Degree::Admissibility);
        let e = cat.strict_subobjects()?;
        if !self.deg().is_zero() {
            return Ok((false, e.certificate));
        }
        for w in &e.subs {
            if cat.degree(w)? > Q::zero() {
                return Ok((false, e.certificate));
            }
        }
        Ok((true, e.certificate))
    }

    /// The HN filtration for `deg = -t_H` on a weakly admissible object.
    pub fn fargues(&self) -> Result<(HnFlag<Subspace>, TypeVector)> {
        if !self.is_weakly_admissible()?.0 {
            return Err(Error::NotWeaklyAdmissible);
        }
        let cat = self.category(Degree::Fargues);
        let flag = hncore::hn_flag(&cat)?;
        let t = flag.polygon();
        Ok((flag, t))
    }
}

impl SlopeCategory for FiCategory<'_> {
    type Obj = Subspace;

    fn rank(&self, x: &Subspace) -> usize {
        x.dim()
    }

    fn degree(&self, x: &Subspace) -> Result<Q> {
        let h = self.fi.sub_hodge_degree(x);
        Ok(match self.mode {
            Degree::Admissibility => h - q(self.fi.iso.restricted_det_val(x)),
            Degree::Fargues => -h,
        })
    }

    fn whole(&self) -> Subspace {
        Subspace::whole(Field::Rationals, self.fi.iso.rank())
    }

    fn contains(&self, big: &Subspace, small: &Subspace) -> bool {
        big.contains_space(small)
    }

    /// For the Fargues degree the ambient category is that of weakly
    /// admissible objects, so only sub-isocrystals of admissibility degree zero count.
    fn strict_subobjects(&self) -> Result<Enumeration<Subspace>> {
        let mut e = self.fi.sub_isocrystals()?;
        if self.mode == Degree::Fargues {
            let adm = self.fi.category(Degree::Admissibility);
            let mut keep = Vec::new();
            for w in e.subs {
                if adm.degree(&w)?.is_zero() {
                    keep.push(w);
                }
            }
            e.subs = keep;
        }
        Ok(e)
    }
}
