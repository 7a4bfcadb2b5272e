//! Frobenius modules over `F_p[[u]]` and `(Z/p^n)[[u]]`.
//!
//! A module of rank `r` is `F_p[[u]]^r` with `phi(v) = A * phi(v)`, where
//! `A = u^{-shift} P` for an exact polynomial matrix `P`.

pub mod torsion;

use std::fmt;

use crate::arith::dvr::{Mat, UAdic};
use crate::arith::laurent::Laurent;
use crate::arith::poly::QPoly;
use crate::arith::rational::{q, Q};
use crate::error::{Error, Result};
use crate::hncore::{self, Certificate, Enumeration, HnFlag, SlopeCategory};
use crate::lattices::DvrLattice;
use crate::types::TypeVector;

pub use torsion::TorsionKisinModule;

/// Search parameters for stable lines.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Depth budget of the coefficient search: coordinates are explored to
    /// `u^{search_degree}` before a branch is declared unresolved.
    pub search_degree: usize,
    /// u-adic precision of refined roots.
    pub work_precision: i64,
}

impl SearchOptions {
    pub fn for_precision(nu: usize) -> Self {
        SearchOptions { search_degree: nu.saturating_sub(1).max(1), work_precision: (nu as i64).max(48) }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PtModule {
    p: u64,
    nu: usize,
    shift: i64,
    mat: Mat<Laurent>,
}

/// A saturated line `F_p[[u]] v` with `P phi(v) = lambda v`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StableLine {
    /// first coordinate equal to one, known modulo `u^prec`
    pub piv: usize,
    pub v: Vec<Laurent>,
    /// the eigenvalue for the polynomial part `P`
    pub lambda: Laurent,
    pub s: i64,
}

impl PtModule {
    /// `entries` may have negative powers of `u`; they are absorbed in the shift.
    pub fn new(p: u64, nu: usize, entries: Mat<Laurent>) -> Result<Self> {
        let r = entries.len();
        if r == 0 || entries.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidInput("Frobenius matrix must be square and nonempty".into()));
        }
        for x in entries.iter().flatten() {
            if x.p() != p || x.c() != 1 || !x.is_exact() {
                return Err(Error::RingMismatch("entries must be exact series over F_p".into()));
            }
        }
        let low = entries.iter().flatten().filter_map(|x| x.val()).min().unwrap_or(0);
        let shift = (-low).max(0);
        let mat: Mat<Laurent> = entries.iter().map(|row| row.iter().map(|x| x.shift(shift)).collect()).collect();
        let m = PtModule { p, nu, shift, mat };
        if m.det_val().is_none() {
            return Err(Error::NotFullRank);
        }
        Ok(m)
    }

    pub fn from_qpolys(p: u64, nu: usize, a: &[Vec<QPoly>], shift: i64) -> Result<Self> {
        let entries = a
            .iter()
            .map(|row| row.iter().map(|f| Laurent::from_qpoly(p, 1, f, -shift)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        PtModule::new(p, nu, entries)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    /// The polynomial part `P = u^{shift} A`.
    pub fn poly_matrix(&self) -> &Mat<Laurent> {
        &self.mat
    }

    pub fn rank(&self) -> usize {
        self.mat.len()
    }

    /// The Frobenius matrix `A` itself.
    pub fn matrix(&self) -> Mat<Laurent> {
        self.mat.iter().map(|row| row.iter().map(|x| x.shift(-self.shift)).collect()).collect()
    }

    fn det_val(&self) -> Option<i64> {
        let cols: Vec<usize> = (0..self.rank()).collect();
        laplace_det(&self.mat, 0, &cols).val()
    }

    /// `deg = nu(M, A phi^* M) = -v(det A)`, optionally divided by `e`.
    pub fn degree(&self) -> Q {
        q(-(self.det_val().unwrap() - self.rank() as i64 * self.shift))
    }

    pub fn degree_normalized(&self, e: u64) -> Q {
        self.degree() / q(e as i64)
    }

    /// `t_H(M) = Pos(M, A M)`.
    pub fn hodge_type(&self) -> Result<TypeVector> {
        let ctx = UAdic { p: self.p, prec: self.nu as i64 + 4 * self.det_val().unwrap_or(0) + 8 };
        let m = DvrLattice::standard(ctx.clone(), self.rank());
        let am = DvrLattice::new(ctx, self.matrix())?;
        m.pos(&am)
    }

    /// `(M, u^i phi)`
    pub fn twist(&self, i: i64) -> PtModule {
        let s = self.shift - i;
        if s >= 0 {
            PtModule { shift: s, ..self.clone() }
        } else {
            let mat = self.mat.iter().map(|row| row.iter().map(|x| x.shift(-s)).collect()).collect();
            PtModule { shift: 0, mat, ..self.clone() }
        }
    }

    pub fn tensor(&self, o: &PtModule) -> PtModule {
        let (r, t) = (self.rank(), o.rank());
        let mut mat = vec![vec![Laurent::zero(self.p, 1); r * t]; r * t];
        for i in 0..r {
            for j in 0..r {
                for k in 0..t {
                    for l in 0..t {
                        mat[i * t + k][j * t + l] = self.mat[i][j].mul(&o.mat[k][l]);
                    }
                }
            }
        }
        PtModule { p: self.p, nu: self.nu.min(o.nu), shift: self.shift + o.shift, mat }
    }

    pub fn direct_sum(&self, o: &PtModule) -> PtModule {
        let (a, b) = (self.matrix(), o.matrix());
        let (r, t) = (self.rank(), o.rank());
        let z = Laurent::zero(self.p, 1);
        let mut m = vec![vec![z; r + t]; r + t];
        for i in 0..r {
            for j in 0..r {
                m[i][j] = a[i][j].clone();
            }
        }
        for i in 0..t {
            for j in 0..t {
                m[r + i][r + j] = b[i][j].clone();
            }
        }
        PtModule::new(self.p, self.nu.min(o.nu), m).expect("direct sum of invertible blocks")
    }

    /// Stable lines for `P`, with the certificate of the search.
    pub fn stable_lines(&self, opts: &SearchOptions) -> Result<(Vec<StableLine>, Certificate)> {
        stable_lines(self.p, &self.mat, opts)
    }

    pub fn strict_subobjects(&self, opts: &SearchOptions) -> Result<PtCategory> {
        PtCategory::build(self.clone(), opts)
    }

    /// Fargues filtration and its polygon `t_{F,1}`.
    pub fn fargues(&self, opts: &SearchOptions) -> Result<(HnFlag<PtSub>, TypeVector)> {
        let cat = self.strict_subobjects(opts)?;
        let flag = hncore::hn_flag(&cat)?;
        let poly = flag.polygon();
        Ok((flag, poly))
    }
}

impl fmt::Display for PtModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .mat
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        write!(f, "u^-{} * [{}] over F_{}", self.shift, rows.join(", "), self.p)
    }
}

fn mat_vec(p: &Mat<Laurent>, v: &[Laurent]) -> Vec<Laurent> {
    p.iter()
        .map(|row| row.iter().zip(v).fold(Laurent::zero(v[0].p(), v[0].c()), |acc, (a, x)| acc.add(&a.mul(x))))
        .collect()
}

/// `G_j = (P phi(v))_j - lambda v_j` with `lambda = (P phi(v))_piv`.
fn residual(p: &Mat<Laurent>, v: &[Laurent], piv: usize) -> (Laurent, Vec<Laurent>) {
    let fv: Vec<Laurent> = v.iter().map(|x| x.frobenius()).collect();
    let w = mat_vec(p, &fv);
    let lambda = w[piv].clone();
    let g = (0..v.len()).filter(|&j| j != piv).map(|j| w[j].sub(&lambda.mul(&v[j]))).collect();
    (lambda, g)
}

fn min_val(g: &[Laurent]) -> i64 {
    g.iter().map(|x| x.val_bound()).min().unwrap_or(i64::MAX)
}

/// Newton iteration `x <- x + G / lambda` until the root is known mod `u^w`.
fn refine(pm: &Mat<Laurent>, mut v: Vec<Laurent>, piv: usize, s: i64, w: i64) -> Result<StableLine> {
    let others: Vec<usize> = (0..v.len()).filter(|&j| j != piv).collect();
    for _ in 0..200 {
        let (lambda, g) = residual(pm, &v, piv);
        let mv = min_val(&g);
        if mv >= w + s {
            let v = v.iter().map(|x| x.truncate(w)).collect();
            let lambda = lambda.truncate(w + s);
            return Ok(StableLine { piv, v, lambda, s });
        }
        let inv = lambda.inverse(w + 1)?;
        for (k, &j) in others.iter().enumerate() {
            let d = g[k].mul(&inv).truncate(w).as_exact();
            v[j] = v[j].add(&d).truncate(w).as_exact();
        }
    }
    Err(Error::PrecisionExhausted("Newton refinement did not converge".into()))
}

/// All saturated lines `v` (normalized at their first unit coordinate) with
/// `P phi(v)` proportional to `v`.
pub fn stable_lines(p: u64, pm: &Mat<Laurent>, opts: &SearchOptions) -> Result<(Vec<StableLine>, Certificate)> {
    let r = pm.len();
    let max_depth = opts.search_degree as i64 + 1;
    let w = opts.work_precision;
    let mut roots: Vec<StableLine> = Vec::new();
    let mut unresolved = 0usize;
    for piv in 0..r {
        let mut v0 = vec![Laurent::zero(p, 1); r];
        v0[piv] = Laurent::one(p, 1);
        let mut frontier = vec![v0];
        let mut t: i64 = 0;
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for v in frontier {
                // inside the disk of a known root: only that root lies below
                if roots.iter().any(|rt| rt.piv == piv && t > rt.s && (0..r).all(|j| v[j].sub(&rt.v[j]).val_bound() >= t)) {
                    continue;
                }
                let (lambda, g) = residual(pm, &v, piv);
                let st = lambda.val();
                let bound = match st {
                    Some(s) => (s + t).min(p as i64 * t),
                    None => p as i64 * t,
                };
                let mv = min_val(&g);
                if mv < bound {
                    continue;
                }
                if let Some(s) = st {
                    if s < p as i64 * t.max(1) && mv > 2 * s && t > 0 || (s == 0 && mv > 0) {
                        let root = refine(pm, v.clone(), piv, s, w)?;
                        let dup = roots
                            .iter()
                            .any(|rt| rt.piv == piv && (0..r).all(|j| rt.v[j].sub(&root.v[j]).is_zero()));
                        if !dup {
                            roots.push(root);
                        }
                        continue;
                    }
                }
                if t >= max_depth {
                    unresolved += 1;
                    continue;
                }
                // children: one more coefficient in every free coordinate
                let free: Vec<usize> = (0..r).filter(|&j| j != piv && !(j < piv && t == 0)).collect();
                let total = (p as usize).pow(free.len() as u32);
                for code in 0..total {
                    let mut c = code;
                    let mut child = v.clone();
                    for &j in &free {
                        let a = (c % p as usize) as u64;
                        c /= p as usize;
                        if a != 0 {
                            child[j] = child[j].add(&Laurent::monomial(p, 1, a, t));
                        }
                    }
                    next.push(child);
                }
            }
            frontier = next;
            t += 1;
        }
    }
    let cert = if unresolved == 0 {
        Certificate::Exhaustive
    } else {
        Certificate::Bounded(format!(
            "{} branches unresolved at search degree {}",
            unresolved, opts.search_degree
        ))
    };
    Ok((roots, cert))
}

/// Exact determinant of the rows from `row` on, restricted to `cols`.
pub(crate) fn laplace_det(m: &Mat<Laurent>, row: usize, cols: &[usize]) -> Laurent {
    let p = m[0][0].p();
    if cols.is_empty() {
        return Laurent::one(p, 1);
    }
    let mut acc = Laurent::zero(p, 1);
    for (k, &c) in cols.iter().enumerate() {
        if m[row][c].is_zero() {
            continue;
        }
        let rest: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let term = m[row][c].mul(&laplace_det(m, row + 1, &rest));
        acc = if k % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// Adjugate of a polynomial matrix of rank at most 3.
fn adjugate(m: &Mat<Laurent>) -> Mat<Laurent> {
    let r = m.len();
    let p = m[0][0].p();
    match r {
        1 => vec![vec![Laurent::one(p, 1)]],
        2 => vec![vec![m[1][1].clone(), m[0][1].neg()], vec![m[1][0].neg(), m[0][0].clone()]],
        _ => {
            let mut a = vec![vec![Laurent::zero(p, 1); r]; r];
            for i in 0..r {
                for j in 0..r {
                    let rows: Vec<usize> = (0..r).filter(|&x| x != j).collect();
                    let cols: Vec<usize> = (0..r).filter(|&x| x != i).collect();
                    let minor = z_minor(m, &rows, &cols);
                    a[i][j] = if (i + j) % 2 == 0 { minor } else { minor.neg() };
                }
            }
            a
        }
    }
}

fn z_minor(m: &Mat<Laurent>, rows: &[usize], cols: &[usize]) -> Laurent {
    m[rows[0]][cols[0]].mul(&m[rows[1]][cols[1]]).sub(&m[rows[0]][cols[1]].mul(&m[rows[1]][cols[0]]))
}

fn transpose(m: &Mat<Laurent>) -> Mat<Laurent> {
    let r = m.len();
    (0..r).map(|i| (0..r).map(|j| m[j][i].clone()).collect()).collect()
}

/// A subobject of a module over `F_p[[u]]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PtSub {
    Line(usize),
    Plane(usize),
    Whole,
}

/// The module with its enumerated stable lines (and, in rank 3, planes).
#[derive(Clone, Debug)]
pub struct PtCategory {
    pub module: PtModule,
    pub lines: Vec<StableLine>,
    /// planes as kernels of stable lines of `adj(P)^T`
    pub planes: Vec<StableLine>,
    pub certificate: Certificate,
    pub work_precision: i64,
}

impl PtCategory {
    pub fn build(module: PtModule, opts: &SearchOptions) -> Result<Self> {
        let r = module.rank();
        if r > 3 {
            return Err(Error::SearchBudgetExceeded(format!(
                "subobject search supports rank at most 3, got {}",
                r
            )));
        }
        let (lines, mut cert) = if r >= 2 { module.stable_lines(opts)? } else { (vec![], Certificate::Exhaustive) };
        let mut planes = Vec::new();
        if r == 3 {
            let dual = transpose(&adjugate(&module.mat));
            let (pl, c2) = stable_lines(module.p, &dual, opts)?;
            planes = pl;
            cert = cert.and(&c2);
        }
        Ok(PtCategory { module, lines, planes, certificate: cert, work_precision: opts.work_precision })
    }

    pub fn line_degree(&self, l: &StableLine) -> Q {
        q(-(l.s - self.module.shift))
    }

    pub fn plane_degree(&self, l: &StableLine) -> Q {
        q(-(l.s - 2 * self.module.shift))
    }

    /// Generators of a subobject, as truncated column vectors.
    pub fn generators(&self, x: &PtSub) -> Vec<Vec<Laurent>> {
        let r = self.module.rank();
        match *x {
            PtSub::Line(i) => vec![self.lines[i].v.clone()],
            PtSub::Plane(i) => {
                // kernel of w^T over the fraction field, saturated by hand
                let w = &self.planes[i].v;
                let piv = self.planes[i].piv;
                let p = self.module.p;
                let inv = Laurent::one(p, 1);
                (0..r)
                    .filter(|&j| j != piv)
                    .map(|j| {
                        let mut v = vec![Laurent::zero(p, 1); r];
                        v[j] = inv.clone();
                        v[piv] = w[j].neg();
                        v
                    })
                    .collect()
            }
            PtSub::Whole => (0..r)
                .map(|j| {
                    let mut v = vec![Laurent::zero(self.module.p, 1); r];
                    v[j] = Laurent::one(self.module.p, 1);
                    v
                })
                .collect(),
        }
    }
}

impl SlopeCategory for PtCategory {
    type Obj = PtSub;

    fn rank(&self, x: &PtSub) -> usize {
        match x {
            PtSub::Line(_) => 1,
            PtSub::Plane(_) => 2,
            PtSub::Whole => self.module.rank(),
        }
    }

    fn degree(&self, x: &PtSub) -> Result<Q> {
        Ok(match *x {
            PtSub::Line(i) => self.line_degree(&self.lines[i]),
            PtSub::Plane(i) => self.plane_degree(&self.planes[i]),
            PtSub::Whole => self.module.degree(),
        })
    }

    fn whole(&self) -> PtSub {
        PtSub::Whole
    }

    fn contains(&self, big: &PtSub, small: &PtSub) -> bool {
        match (big, small) {
            (PtSub::Whole, _) => true,
            (_, PtSub::Whole) => false,
            (a, b) if a == b => true,
            (PtSub::Plane(i), PtSub::Line(j)) => {
                let w = &self.planes[*i].v;
                let v = &self.lines[*j].v;
                let dot = w.iter().zip(v).fold(Laurent::zero(self.module.p, 1), |acc, (a, b)| acc.add(&a.mul(b)));
                dot.is_zero()
            }
            _ => false,
        }
    }

    fn strict_subobjects(&self) -> Result<Enumeration<PtSub>> {
        let mut subs: Vec<PtSub> = (0..self.lines.len()).map(PtSub::Line).collect();
        subs.extend((0..self.planes.len()).map(PtSub::Plane));
        Ok(Enumeration { subs, certificate: self.certificate.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(t: &[(i64, u64)]) -> Laurent {
        Laurent::from_terms(2, 1, t, None)
    }

    fn opts() -> SearchOptions {
        SearchOptions::for_precision(8)
    }

    #[test]
    fn degrees_and_hodge() {
        let m = PtModule::new(2, 8, vec![vec![l(&[(3, 1)])]]).unwrap();
        assert_eq!(m.degree(), q(-3));
        let m = PtModule::new(2, 8, vec![vec![l(&[(0, 1)]), l(&[])], vec![l(&[]), l(&[(2, 1)])]]).unwrap();
        assert_eq!(m.degree(), q(-2));
        assert_eq!(m.hodge_type().unwrap(), TypeVector::from_ints(&[0, -2]));
        let m = PtModule::new(2, 8, vec![vec![l(&[(1, 1)]), l(&[])], vec![l(&[]), l(&[(1, 1)])]]).unwrap();
        assert_eq!(m.hodge_type().unwrap(), TypeVector::from_ints(&[-1, -1]));
        let m = PtModule::new(2, 8, vec![vec![l(&[(0, 1)]), l(&[])], vec![l(&[(0, 1)]), l(&[(2, 1)])]]).unwrap();
        assert_eq!(m.degree(), q(-2));
        assert_eq!(m.hodge_type().unwrap(), TypeVector::from_ints(&[0, -2]));
    }

    #[test]
    fn fixed_line_example() {
        // b = 1 + u^2 b(u^2)
        let m = PtModule::new(2, 8, vec![vec![l(&[(0, 1)]), l(&[])], vec![l(&[(0, 1)]), l(&[(2, 1)])]]).unwrap();
        let (lines, cert) = m.stable_lines(&opts()).unwrap();
        assert!(cert.is_exhaustive());
        let fixed = lines.iter().find(|x| x.s == 0).unwrap();
        assert_eq!(fixed.v[1].truncate(16), l(&[(0, 1), (2, 1), (6, 1), (14, 1)]).truncate(16));
        let (flag, poly) = m.fargues(&opts()).unwrap();
        assert_eq!(poly, TypeVector::from_ints(&[0, -2]));
        assert_eq!(flag.steps.len(), 2);
    }

    #[test]
    fn diagonal_modules() {
        let m = PtModule::new(2, 8, vec![vec![l(&[(0, 1)]), l(&[])], vec![l(&[]), l(&[(2, 1)])]]).unwrap();
        let (lines, _) = m.stable_lines(&opts()).unwrap();
        let mut degs: Vec<i64> = lines.iter().map(|x| x.s).collect();
        degs.sort();
        assert_eq!(degs, vec![0, 2]);
        assert_eq!(m.fargues(&opts()).unwrap().1, TypeVector::from_ints(&[0, -2]));
        let m = PtModule::new(2, 8, vec![vec![l(&[(1, 1)]), l(&[])], vec![l(&[]), l(&[(1, 1)])]]).unwrap();
        let (flag, poly) = m.fargues(&opts()).unwrap();
        assert!(flag.is_semistable());
        assert_eq!(poly, TypeVector::from_ints(&[-1, -1]));
        let one = PtModule::new(2, 8, vec![vec![l(&[(2, 1)])]]).unwrap();
        assert!(one.stable_lines(&opts()).unwrap().0.len() == 1);
        assert!(one.fargues(&opts()).unwrap().0.is_semistable());
    }

    #[test]
    fn rank_three_split() {
        let m = PtModule::new(
            2,
            8,
            vec![
                vec![l(&[(1, 1)]), l(&[]), l(&[])],
                vec![l(&[]), l(&[(3, 1)]), l(&[])],
                vec![l(&[]), l(&[]), l(&[(0, 1)])],
            ],
        )
        .unwrap();
        let (_, poly) = m.fargues(&opts()).unwrap();
        assert_eq!(poly, TypeVector::from_ints(&[0, -1, -3]));
    }

    #[test]
    fn negative_powers_shift() {
        let m = PtModule::new(2, 8, vec![vec![l(&[(-1, 1)]), l(&[])], vec![l(&[]), l(&[(1, 1)])]]).unwrap();
        assert_eq!(m.shift(), 1);
        assert_eq!(m.degree(), q(0));
        assert_eq!(m.fargues(&opts()).unwrap().1, TypeVector::from_ints(&[1, -1]));
    }
}
