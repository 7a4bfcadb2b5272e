//! Frobenius modules over `(Z/p^n)[[u]]` that are free of rank at most two.
//!
//! Strict subobjects of `M_n = R^2` are `p^a (R v + p^c R^2)` where `v`
//! spans a stable line modulo `p^c`; their rank is `2(n - a) - c`.

use num_traits::Zero;

use super::{PtModule, SearchOptions};
use crate::arith::chain::{kernel, span_log, RMat};
use crate::arith::dvr::Mat;
use crate::arith::laurent::Laurent;
use crate::arith::poly::QPoly;
use crate::arith::rational::{inv_mod, pow_u64, q, Q};
use crate::error::{Error, Result};
use crate::hncore::{self, Certificate, Enumeration, HnFlag, SlopeCategory};
use crate::types::{PolygonFunction, TypeVector};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionKisinModule {
    p: u64,
    n: u32,
    e: u64,
    shift: i64,
    mat: Mat<Laurent>,
}

/// `p^a (R v + p^c R^2)`; `line` is `None` exactly when `c = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TkSub {
    pub a: u32,
    pub c: u32,
    pub line: Option<usize>,
}

/// A stable line modulo `p^level`, in the chart where its first
/// coordinate (after swapping when `chart = 1`) is one.
#[derive(Clone, Debug)]
pub struct LineNode {
    pub level: u32,
    pub chart: usize,
    pub b: Laurent,
    pub parent: Option<usize>,
    pub degree: Q,
}

/// The minimal-slope quotient `M_n / F` of the Fargues filtration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TorsionQuotient {
    pub sub: Option<TkSub>,
    pub rank: usize,
    pub degree: Q,
    pub slope: Q,
}

impl TorsionKisinModule {
    pub fn new(p: u64, n: u32, e: u64, entries: Mat<Laurent>) -> Result<Self> {
        let r = entries.len();
        if r == 0 || entries.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidInput("Frobenius matrix must be square and nonempty".into()));
        }
        if n == 0 || e == 0 {
            return Err(Error::InvalidInput("torsion level and e must be positive".into()));
        }
        for x in entries.iter().flatten() {
            if x.p() != p || x.c() != n || !x.is_exact() {
                return Err(Error::RingMismatch(format!("entries must be exact series over Z/{}^{}", p, n)));
            }
        }
        let low = entries.iter().flatten().filter_map(|x| x.val()).min().unwrap_or(0);
        let shift = (-low).max(0);
        let mat = entries.iter().map(|row| row.iter().map(|x| x.shift(shift)).collect()).collect();
        let m = TorsionKisinModule { p, n, e, shift, mat };
        m.det_val_mod_p()?;
        Ok(m)
    }

    pub fn from_qpolys(p: u64, n: u32, e: u64, a: &[Vec<QPoly>], shift: i64) -> Result<Self> {
        let entries = a
            .iter()
            .map(|row| row.iter().map(|f| Laurent::from_qpoly(p, n, f, -shift)).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        TorsionKisinModule::new(p, n, e, entries)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.n
    }

    pub fn e(&self) -> u64 {
        self.e
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn rank(&self) -> usize {
        self.mat.len()
    }

    pub fn poly_matrix(&self) -> &Mat<Laurent> {
        &self.mat
    }

    /// Length of `M_n / u M_n` over `W(k)`.
    pub fn mu_rank(&self) -> usize {
        self.rank() * self.n as usize
    }

    fn reduced(&self, c: u32) -> Mat<Laurent> {
        self.mat.iter().map(|row| row.iter().map(|x| x.reduce(c)).collect()).collect()
    }

    fn det_val_mod_p(&self) -> Result<i64> {
        let cols: Vec<usize> = (0..self.rank()).collect();
        super::laplace_det(&self.reduced(1), 0, &cols).val().ok_or(Error::NotFullRank)
    }

    /// Degree of `M_k`, additive along `0 -> M_{k-1} -> M_k -> M_1 -> 0`.
    fn free_degree(&self, k: u32) -> Q {
        let r = self.rank() as i64;
        q(k as i64 * (-self.det_val_mod_p().unwrap() + self.shift * r))
    }

    pub fn degree(&self) -> Q {
        self.free_degree(self.n)
    }

    /// `(M, u^i phi)`
    pub fn twist(&self, i: i64) -> TorsionKisinModule {
        let s = self.shift - i;
        if s >= 0 {
            TorsionKisinModule { shift: s, ..self.clone() }
        } else {
            let mat = self.mat.iter().map(|row| row.iter().map(|x| x.shift(-s)).collect()).collect();
            TorsionKisinModule { shift: 0, mat, ..self.clone() }
        }
    }

    /// `M / p^k M`.
    pub fn reduce(&self, k: u32) -> Result<TorsionKisinModule> {
        if k == 0 || k > self.n {
            return Err(Error::InvalidInput(format!("cannot reduce level {} to {}", self.n, k)));
        }
        Ok(TorsionKisinModule { n: k, mat: self.reduced(k), ..self.clone() })
    }

    pub fn mod_p(&self) -> PtModule {
        PtModule { p: self.p, nu: 0, shift: self.shift, mat: self.reduced(1) }
    }

    /// Stable lines modulo `p^c` for `c = 1..=n`, each pointing to its reduction.
    pub fn line_tree(&self, opts: &SearchOptions) -> Result<(Vec<LineNode>, Certificate)> {
        if self.rank() != 2 {
            return Ok((vec![], Certificate::Exhaustive));
        }
        let pm = self.mod_p();
        let (roots, cert) = pm.stable_lines(opts)?;
        let mut nodes: Vec<LineNode> = roots
            .iter()
            .map(|r| LineNode {
                level: 1,
                chart: r.piv,
                b: r.v[1 - r.piv].clone(),
                parent: None,
                degree: q(-(r.s - self.shift)),
            })
            .collect();
        let mut start = 0;
        for k in 1..self.n {
            let end = nodes.len();
            for i in start..end {
                let node = nodes[i].clone();
                let pk = chart_matrix(&self.reduced(k + 1), node.chart);
                for b in lift_line(self.p, k, &pk, &node.b)? {
                    let degree = q(-line_length(self.p, k + 1, &pk, &b)? + self.shift * (k + 1) as i64);
                    nodes.push(LineNode { level: k + 1, chart: node.chart, b, parent: Some(i), degree });
                }
            }
            start = end;
        }
        Ok((nodes, cert))
    }

    pub fn category(&self, opts: &SearchOptions) -> Result<TkCategory> {
        if self.rank() > 2 {
            return Err(Error::SearchBudgetExceeded(format!(
                "torsion subobject search supports rank at most 2, got {}",
                self.rank()
            )));
        }
        let (lines, certificate) = self.line_tree(opts)?;
        Ok(TkCategory { module: self.clone(), lines, certificate })
    }

    pub fn fargues(&self, opts: &SearchOptions) -> Result<(HnFlag<TkSub>, TypeVector)> {
        let cat = self.category(opts)?;
        let flag = hncore::hn_flag(&cat)?;
        let poly = flag.polygon();
        Ok((flag, poly))
    }

    /// `t_{F,n}`: the Fargues polygon on `[0, rank]`, divided by `n` and `e`.
    pub fn normalized_polygon(&self, opts: &SearchOptions) -> Result<PolygonFunction> {
        let (_, t) = self.fargues(opts)?;
        Ok(PolygonFunction::of_type(&t).rescale(self.n as u64).scale_y(&(Q::from_integer(1.into()) / q(self.e as i64))))
    }

    pub fn is_semistable(&self, opts: &SearchOptions) -> Result<(bool, Certificate)> {
        let (f, _) = self.fargues(opts)?;
        Ok((f.is_semistable(), f.certificate))
    }

    pub fn min_quotient(&self, opts: &SearchOptions) -> Result<TorsionQuotient> {
        let (f, _) = self.fargues(opts)?;
        let k = f.steps.len();
        let (sub, r0, d0) =
            if k >= 2 { (Some(f.steps[k - 2]), f.ranks[k - 2], f.degrees[k - 2].clone()) } else { (None, 0, Q::zero()) };
        let rank = self.mu_rank() - r0;
        let degree = self.degree() - d0;
        let slope = &degree / q(rank as i64);
        Ok(TorsionQuotient { sub, rank, degree, slope })
    }
}

pub(crate) fn chart_matrix(m: &Mat<Laurent>, chart: usize) -> Mat<Laurent> {
    if chart == 0 {
        m.clone()
    } else {
        vec![vec![m[1][1].clone(), m[1][0].clone()], vec![m[0][1].clone(), m[0][0].clone()]]
    }
}

/// `F(b) = a21 + a22 phi(b) - b (a11 + a12 phi(b))`, zero iff `(1, b)` is stable.
pub(crate) fn stability_defect(a: &Mat<Laurent>, b: &Laurent) -> Laurent {
    let fb = b.frobenius();
    a[1][0].add(&a[1][1].mul(&fb)).sub(&b.mul(&a[0][0].add(&a[0][1].mul(&fb))))
}

/// All lifts of a stable line `b` modulo `p^k` to `p^{k+1}`.
pub(crate) fn lift_line(p: u64, k: u32, a: &Mat<Laurent>, b: &Laurent) -> Result<Vec<Laurent>> {
    let bt = b.lift(k + 1);
    let rho = stability_defect(a, &bt)
        .div_p(k)
        .map_err(|_| Error::VerificationFailed("line is not stable to the claimed p-adic precision".into()))?;
    let bb = b.reduce(1);
    let a1: Mat<Laurent> = a.iter().map(|r| r.iter().map(|x| x.reduce(1)).collect()).collect();
    let lam = a1[0][0].add(&a1[0][1].mul(&bb.frobenius()));
    let alpha = a1[1][1].sub(&a1[0][1].mul(&bb));
    let pk = pow_u64(p, k);
    Ok(solve_twisted(p, &lam, &alpha, &rho)?
        .into_iter()
        .map(|x| bt.add(&x.lift(k + 1).scale(pk)))
        .collect())
}

/// Solutions `x` in `F_p((u))` of `lam x - alpha phi(x) = rho`, truncated.
pub(crate) fn solve_twisted(p: u64, lam: &Laurent, alpha: &Laurent, rho: &Laurent) -> Result<Vec<Laurent>> {
    let s = lam.val().ok_or_else(|| Error::PrecisionExhausted("eigenvalue vanishes to working precision".into()))?;
    let pi = p as i64;
    let av = alpha.val();
    let vr = rho.val_bound();
    let mut t_min = vr.saturating_sub(s);
    if let Some(a) = av {
        if vr < i64::MAX / 2 {
            t_min = t_min.min((vr - a).div_euclid(pi));
        }
        t_min = t_min.min((s - a).div_euclid(pi - 1));
    }
    let cap = |x: Option<i64>, off: i64| x.map_or(i64::MAX, |n| n.saturating_add(off));
    let j_end = cap(rho.prec(), 0).min(cap(lam.prec(), t_min)).min(if av.is_some() {
        cap(alpha.prec(), pi * t_min)
    } else {
        i64::MAX
    });
    if j_end == i64::MAX {
        return Err(Error::PrecisionExhausted("no finite precision to solve against".into()));
    }
    let t_end = j_end - s;
    let balance_ok = match av {
        Some(a) => (pi - 1) * t_end > s - a,
        None => true,
    };
    if t_end <= t_min || !balance_ok {
        return Err(Error::PrecisionExhausted("u-adic precision too small to lift a line".into()));
    }
    let mut j_lo = (s + t_min).min(vr);
    if let Some(a) = av {
        j_lo = j_lo.min(a + pi * t_min);
    }
    let rows = (j_end - j_lo) as usize;
    let cols = (t_end - t_min) as usize;
    let mut m: Vec<Vec<u64>> = vec![vec![0; cols + 1]; rows];
    for (ci, t) in (t_min..t_end).enumerate() {
        for (ri, j) in (j_lo..j_end).enumerate() {
            let x = lam.coeff(j - t) + p - alpha.coeff(j - pi * t);
            m[ri][ci] = x % p;
        }
    }
    for (ri, j) in (j_lo..j_end).enumerate() {
        m[ri][cols] = rho.coeff(j) % p;
    }
    // an inconsistent system means the line does not lift
    let Some((part, ker)) = solve_fp(&mut m, cols, p) else { return Ok(vec![]) };
    if ker.len() > 1 {
        return Err(Error::PrecisionExhausted("lifting system underdetermined at this precision".into()));
    }
    let mk = |v: &[u64]| Laurent::from_dense(p, 1, t_min, v.to_vec(), Some(t_end));
    let mut out = vec![mk(&part)];
    if let Some(k) = ker.first() {
        for a in 1..p {
            let v: Vec<u64> = part.iter().zip(k).map(|(x, y)| (x + a * y) % p).collect();
            out.push(mk(&v));
        }
    }
    Ok(out)
}

/// Row reduce an augmented system over `F_p`; particular solution and kernel basis.
fn solve_fp(m: &mut [Vec<u64>], cols: usize, p: u64) -> Option<(Vec<u64>, Vec<Vec<u64>>)> {
    let rows = m.len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..rows).find(|&i| m[i][c] != 0) else { continue };
        m.swap(r, pr);
        let inv = inv_mod(m[r][c], p).unwrap();
        for x in m[r].iter_mut() {
            *x = *x * inv % p;
        }
        for i in 0..rows {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..=cols {
                    m[i][j] = (m[i][j] + p * p - f * m[r][j] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if m[r..].iter().any(|row| row[cols] != 0) {
        return None;
    }
    let mut part = vec![0u64; cols];
    for (i, &c) in pivots.iter().enumerate() {
        part[c] = m[i][cols];
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let ker = free
        .iter()
        .map(|&f| {
            let mut v = vec![0u64; cols];
            v[f] = 1;
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = (p - m[i][f]) % p;
            }
            v
        })
        .collect();
    Some((part, ker))
}

/// `length(I / lambda phi(I))` for the line `{(nu, nu b) : nu b integral}`
/// over `Z/p^c`, with `I` its ideal of first coordinates.
fn line_length(p: u64, c: u32, a: &Mat<Laurent>, b: &Laurent) -> Result<i64> {
    let pole = b.val().map_or(0, |v| (-v).max(0));
    let mut gens: Vec<Laurent> = Vec::new();
    let ker_log: u32;
    if pole == 0 {
        gens.push(Laurent::one(p, c));
        ker_log = 0;
    } else {
        let nn = pole as usize;
        let mx: RMat =
            (1..=pole).map(|j| (0..pole).map(|i| b.coeff(-j - i)).collect()).collect();
        let k = kernel(&mx, p, c);
        let ng = k.first().map_or(0, |r| r.len());
        for g in 0..ng {
            gens.push(Laurent::from_dense(p, c, 0, (0..nn).map(|r| k[r][g]).collect(), None));
        }
        gens.push(Laurent::monomial(p, c, 1, pole));
        ker_log = c * pole as u32 - span_log(&mx, p, c);
    }
    let lam = a[0][0].add(&a[0][1].mul(&b.frobenius()));
    let images: Vec<Laurent> = gens.iter().map(|g| lam.mul(&g.frobenius())).collect();
    let avail = images.iter().map(|h| h.prec().unwrap_or(i64::MAX)).min().unwrap();
    if images.iter().any(|h| h.val_bound() < 0) {
        return Err(Error::VerificationFailed("image of a stable line is not integral".into()));
    }
    let mut kk = pole + 8;
    while kk < avail {
        let k1 = (kk + 1) as usize;
        let mut cols: Vec<Vec<u64>> = Vec::new();
        for h in &images {
            for j in 0..=kk {
                cols.push(h.shift(j).dense_window(0, k1));
            }
        }
        let mat: RMat = (0..k1).map(|r| cols.iter().map(|v| v[r]).collect()).collect();
        let sl = span_log(&mat, p, c);
        let mut with_top = mat.clone();
        for (r, row) in with_top.iter_mut().enumerate() {
            row.push((r == kk as usize) as u64);
        }
        if span_log(&with_top, p, c) == sl {
            let i_log = c as i64 * (kk - pole) + ker_log as i64;
            let j_log = sl as i64 - c as i64;
            return Ok(i_log - j_log);
        }
        kk *= 2;
    }
    Err(Error::PrecisionExhausted("cannot certify the colength of a line image".into()))
}

/// A free module over `(Z/p^n)[[u]]` with its enumerated strict subobjects.
#[derive(Clone, Debug)]
pub struct TkCategory {
    pub module: TorsionKisinModule,
    pub lines: Vec<LineNode>,
    pub certificate: Certificate,
}

impl TkCategory {
    fn ancestor(&self, mut i: usize, level: u32) -> usize {
        while self.lines[i].level > level {
            i = self.lines[i].parent.unwrap();
        }
        i
    }

    pub fn line(&self, x: &TkSub) -> Option<&LineNode> {
        x.line.map(|i| &self.lines[i])
    }
}

impl SlopeCategory for TkCategory {
    type Obj = TkSub;

    fn rank(&self, x: &TkSub) -> usize {
        let m = (self.module.n - x.a) as usize;
        self.module.rank() * m - x.c as usize
    }

    fn degree(&self, x: &TkSub) -> Result<Q> {
        let m = self.module.n - x.a;
        let free = self.module.free_degree(m - x.c);
        Ok(match x.line {
            Some(i) => free + &self.lines[i].degree,
            None => free,
        })
    }

    fn whole(&self) -> TkSub {
        TkSub { a: 0, c: 0, line: None }
    }

    fn contains(&self, big: &TkSub, small: &TkSub) -> bool {
        if small.a >= self.module.n {
            return true;
        }
        if small.a < big.a {
            return false;
        }
        let d = small.a - big.a;
        if d + small.c < big.c {
            return false;
        }
        if d < big.c {
            let lev = big.c - d;
            let (Some(i), Some(j)) = (small.line, big.line) else { return false };
            return self.ancestor(i, lev) == self.ancestor(j, lev);
        }
        true
    }

    fn strict_subobjects(&self) -> Result<Enumeration<TkSub>> {
        let n = self.module.n;
        let mut subs = Vec::new();
        for a in 0..n {
            if a > 0 {
                subs.push(TkSub { a, c: 0, line: None });
            }
            for (i, l) in self.lines.iter().enumerate() {
                if l.level <= n - a {
                    subs.push(TkSub { a, c: l.level, line: Some(i) });
                }
            }
        }
        Ok(Enumeration { subs, certificate: self.certificate.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tk(p: u64, n: u32, a: &[&[&[i64]]]) -> TorsionKisinModule {
        let m = a
            .iter()
            .map(|row| row.iter().map(|f| QPoly::from_ints(f)).collect())
            .collect::<Vec<Vec<QPoly>>>();
        TorsionKisinModule::from_qpolys(p, n, 1, &m, 0).unwrap()
    }

    fn opts() -> SearchOptions {
        SearchOptions { search_degree: 8, work_precision: 64 }
    }

    #[test]
    fn rank_one_reduction() {
        let m = tk(2, 2, &[&[&[0, 0, 0, 1]]]);
        assert_eq!(m.mu_rank(), 2);
        assert_eq!(m.degree(), q(-6));
        let (f, t) = m.fargues(&opts()).unwrap();
        assert!(f.is_semistable());
        assert_eq!(t, TypeVector::from_ints(&[-3, -3]));
    }

    #[test]
    fn level_one_matches_mod_p() {
        let m = tk(2, 1, &[&[&[1], &[]], &[&[1], &[0, 0, 1]]]);
        let (_, t) = m.fargues(&opts()).unwrap();
        let (_, t1) = m.mod_p().fargues(&opts()).unwrap();
        assert_eq!(t, t1);
    }

    #[test]
    fn diagonal_levels() {
        // diag(1, u^2) over Z/4: sub lines of degree 0 and -2 at each level
        let m = tk(2, 2, &[&[&[1], &[]], &[&[], &[0, 0, 1]]]);
        let (_, t) = m.fargues(&opts()).unwrap();
        assert_eq!(t, TypeVector::from_ints(&[0, 0, -2, -2]));
        let m = tk(3, 3, &[&[&[0, 1], &[]], &[&[], &[0, 0, 0, 1]]]);
        let (_, t) = m.fargues(&opts()).unwrap();
        assert_eq!(t, TypeVector::from_ints(&[-1, -1, -1, -3, -3, -3]));
    }

    #[test]
    fn line_lengths_at_level_two() {
        // (1, b) with b integral and lambda = u: colength 2 over Z/4
        let p = 2;
        let a: Mat<Laurent> = vec![
            vec![Laurent::monomial(p, 2, 1, 1), Laurent::zero(p, 2)],
            vec![Laurent::zero(p, 2), Laurent::one(p, 2)],
        ];
        assert_eq!(line_length(p, 2, &a, &Laurent::zero_mod(p, 2, 40)).unwrap(), 2);
        let z = Laurent::zero_mod(p, 1, 40);
        let lam = Laurent::monomial(p, 1, 1, 1);
        let alpha = Laurent::one(p, 1).with_prec(Some(40));
        let sols = solve_twisted(p, &lam, &alpha, &z).unwrap();
        assert_eq!(sols.len(), 2);
    }

    #[test]
    fn containment_rules() {
        let m = tk(2, 2, &[&[&[1], &[]], &[&[], &[0, 0, 1]]]);
        let cat = m.category(&opts()).unwrap();
        let e = cat.strict_subobjects().unwrap();
        let w = cat.whole();
        for s in &e.subs {
            assert!(cat.contains(&w, s));
            assert!(!cat.contains(s, &w));
            assert!(cat.contains(s, s));
            let p_times = TkSub { a: s.a + 1, ..*s };
            if p_times.a < 2 && p_times.c <= 2 - p_times.a {
                assert!(cat.contains(s, &p_times));
            }
        }
    }
}
