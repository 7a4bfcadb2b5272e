//! Kisin modules over `W[[u]]` with `phi = E^{-s} A`, their Hodge and
//! Fargues polygons, and the theta-algorithm producing an isogenous module
//! of Harder-Narasimhan type.

use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::arith::dvr::{EAdic, Mat, PAdic};
use crate::arith::laurent::Laurent;
use crate::arith::poly::{QPoly, RatFunc};
use crate::arith::rational::{inv_mod, is_prime, pow_u64, q, vp, Q};
use crate::error::{Error, Result};
use crate::hncore::{self, Certificate, HnFlag};
use crate::lattices::DvrLattice;
use crate::phimod::torsion::{chart_matrix, lift_line, stability_defect, TkSub};
use crate::phimod::{PtModule, SearchOptions, TorsionKisinModule};
use crate::types::{PolygonFunction, TypeVector};

/// A monic Eisenstein polynomial over `Z_p`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Eisenstein {
    p: u64,
    poly: QPoly,
}

impl Eisenstein {
    pub fn new(p: u64, poly: QPoly) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::InvalidInput(format!("{} is not prime", p)));
        }
        let e = poly.degree().unwrap_or(0);
        if e == 0 || !poly.is_monic() {
            return Err(Error::InvalidInput("E must be monic of positive degree".into()));
        }
        for i in 0..e {
            let c = poly.coeff(i);
            if !c.is_integer() {
                return Err(Error::InvalidInput(format!("E has a non-integral coefficient {}", c)));
            }
            let v = vp(&c, p).unwrap_or(i64::MAX);
            if v < 1 || (i == 0 && v != 1) {
                return Err(Error::InvalidInput(format!("{} is not Eisenstein at {}", poly, p)));
            }
        }
        Ok(Eisenstein { p, poly })
    }

    /// `u - p`
    pub fn linear(p: u64) -> Result<Self> {
        Eisenstein::new(p, QPoly::from_ints(&[-(p as i64), 1]))
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn poly(&self) -> &QPoly {
        &self.poly
    }

    pub fn e(&self) -> u64 {
        self.poly.degree().unwrap() as u64
    }

    /// `E^{-1}` in `(Z/p^c)((u))`, exact: `u^{-e} sum_{k<c} (-y)^k` with
    /// `y = (E - u^e) u^{-e}` divisible by `p`.
    fn inverse_mod(&self, c: u32) -> Result<Laurent> {
        let e = self.e() as i64;
        let low = self.poly.sub_monomial_top();
        let y = Laurent::from_qpoly(self.p, c, &low, -e)?;
        let my = y.neg();
        let mut acc = Laurent::one(self.p, c);
        let mut pw = Laurent::one(self.p, c);
        for _ in 1..c {
            pw = pw.mul(&my);
            acc = acc.add(&pw);
        }
        Ok(acc.shift(-e))
    }
}

trait TopMonomial {
    fn sub_monomial_top(&self) -> QPoly;
}

impl TopMonomial for QPoly {
    fn sub_monomial_top(&self) -> QPoly {
        let d = self.degree().unwrap_or(0);
        self - &QPoly::monomial(self.lead(), d)
    }
}

impl fmt::Display for Eisenstein {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}

/// A free `W[[u]]`-module with `phi(v) = E^{-shift} A phi(v)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KisinModule {
    eis: Eisenstein,
    a: Vec<Vec<QPoly>>,
    shift: i64,
    det_e: u32,
}

/// Options of the theta-algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ThetaOptions {
    pub search: SearchOptions,
    /// torsion levels examined while looking for the stabilization index
    pub level_budget: u32,
    /// extra p-adic digits carried by the witness beyond the stabilization index
    pub extra_digits: u32,
    /// u-adic precision of the witness and of the off-diagonal entries
    pub witness_u: i64,
}

impl Default for ThetaOptions {
    fn default() -> Self {
        ThetaOptions {
            search: SearchOptions { search_degree: 8, work_precision: 128 },
            level_budget: 8,
            extra_digits: 4,
            witness_u: 24,
        }
    }
}

/// `A phi(W) = W A'` modulo `(p^{p_precision}, u^{u_precision})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub matrix: Vec<Vec<QPoly>>,
    pub p_precision: u32,
    pub u_precision: i64,
    pub verified: bool,
}

impl Witness {
    /// Exact identities carry no truncation.
    pub fn is_exact(&self) -> bool {
        self.p_precision == u32::MAX && self.u_precision == i64::MAX
    }

    pub fn precision(&self) -> String {
        if self.is_exact() {
            "exact".into()
        } else {
            format!("mod (p^{}, u^{})", self.p_precision, self.u_precision)
        }
    }
}

/// One application of theta: `theta M` is the maximal-slope part of the
/// stabilized Fargues filtration, `M' = theta M + p^{k0} M`, and `K` the
/// complementary graded piece.
#[derive(Clone, Debug)]
pub struct ThetaStep {
    pub theta: Option<KisinModule>,
    pub prime: KisinModule,
    pub kernel: Option<KisinModule>,
    pub k0: u32,
    /// `M'` is upper triangular with `theta M` spanned by its first vector
    pub split: bool,
    /// basis of `M'` in coordinates of `M`
    pub witness: Witness,
    /// `t(M_{k0} / F_{k0})`, unnormalized
    pub quotient_type: TypeVector,
    pub certificate: Certificate,
}

/// Output of `hn_decompose`: an isogenous module of HN type in block
/// upper-triangular form.
#[derive(Clone, Debug)]
pub struct HnDecomposition {
    pub module: KisinModule,
    /// ranks of the flag `0 < N_1 < ... < N`, spanned by leading basis vectors
    pub ranks: Vec<usize>,
    pub slopes: Vec<Q>,
    pub witness: Witness,
    pub iterations: usize,
    pub step_bound: u64,
    /// normalized constant with `t_{F,n}(N) <= t_{F,n}(M) + C/n`
    pub constant: Q,
    pub certificate: Certificate,
}

fn poly_det(a: &[Vec<QPoly>]) -> QPoly {
    let n = a.len();
    if n == 1 {
        return a[0][0].clone();
    }
    let mut acc = QPoly::zero();
    for j in 0..n {
        if a[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<QPoly>> =
            a[1..].iter().map(|row| row.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, x)| x.clone()).collect()).collect();
        let t = &a[0][j] * &poly_det(&minor);
        acc = if j % 2 == 0 { &acc + &t } else { &acc - &t };
    }
    acc
}

fn to_laurent(p: u64, c: u32, a: &[Vec<QPoly>]) -> Result<Mat<Laurent>> {
    a.iter().map(|row| row.iter().map(|f| Laurent::from_qpoly(p, c, f, 0)).collect()).collect()
}

/// Polynomial part of a series with symmetric integer residues.
fn to_qpoly(x: &Laurent) -> Result<QPoly> {
    let m = x.modulus() as i64;
    let mut c: Vec<Q> = Vec::new();
    for (e, a) in x.terms() {
        if e < 0 {
            return Err(Error::VerificationFailed("series has a pole where an integral one was expected".into()));
        }
        let a = a as i64;
        let a = if a > m / 2 { a - m } else { a };
        let e = e as usize;
        if c.len() <= e {
            c.resize(e + 1, Q::zero());
        }
        c[e] = q(a);
    }
    Ok(QPoly::new(c))
}

fn is_integral(x: &Laurent) -> bool {
    x.val().is_none_or(|v| v >= 0)
}

fn qpoly_mat_mul(a: &[Vec<QPoly>], b: &[Vec<QPoly>]) -> Vec<Vec<QPoly>> {
    (0..a.len())
        .map(|i| (0..b[0].len()).map(|j| (0..b.len()).fold(QPoly::zero(), |acc, k| &acc + &(&a[i][k] * &b[k][j]))).collect())
        .collect()
}

fn frobenius_mat(a: &[Vec<QPoly>], p: u64) -> Vec<Vec<QPoly>> {
    a.iter().map(|row| row.iter().map(|f| f.frobenius(p)).collect()).collect()
}

fn mat_mul(a: &Mat<Laurent>, b: &Mat<Laurent>) -> Mat<Laurent> {
    let (p, c) = (a[0][0].p(), a[0][0].c());
    (0..a.len())
        .map(|i| {
            (0..b[0].len())
                .map(|j| (0..b.len()).fold(Laurent::zero(p, c), |acc, k| acc.add(&a[i][k].mul(&b[k][j]))))
                .collect()
        })
        .collect()
}

/// `prod_{k >= 0} phi^k(eps)` modulo `u^v`, for `eps = 1 mod u`.
fn frobenius_product(eps: &Laurent, v: i64) -> Laurent {
    let one = Laurent::one(eps.p(), eps.c());
    let mut g = one.clone().truncate(v);
    let mut t = eps.truncate(v);
    while !t.sub(&one).truncate(v).is_zero() {
        g = g.mul(&t).truncate(v);
        t = t.frobenius().truncate(v);
    }
    g
}

/// Chain of torsion levels `1, 2, 4, ...` up to `n_max`.
pub fn level_chain(n_max: u32) -> Vec<u32> {
    let mut v = vec![1];
    while v.last().unwrap() * 2 <= n_max {
        let n = v.last().unwrap() * 2;
        v.push(n);
    }
    v
}

impl KisinModule {
    /// Validates integrality and `det A = unit * E^m`.
    pub fn new(eis: Eisenstein, a: Vec<Vec<QPoly>>, shift: i64) -> Result<Self> {
        let r = a.len();
        if r == 0 || a.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidInput("Frobenius matrix must be square and nonempty".into()));
        }
        let p = eis.p;
        for f in a.iter().flatten() {
            for c in f.coeffs() {
                if vp(c, p).is_some_and(|v| v < 0) {
                    return Err(Error::InvalidInput(format!("entry {} is not p-integral", f)));
                }
            }
        }
        let d = poly_det(&a);
        let m = d.val_e(eis.poly()).ok_or(Error::NotFullRank)?;
        let (cof, _) = d.divmod_monic(&eis.poly().pow(m));
        if vp(&cof.coeff(0), p) != Some(0) {
            return Err(Error::InvalidInput("det A is not a unit times a power of E".into()));
        }
        Ok(KisinModule { eis, a, shift, det_e: m })
    }

    pub fn from_ints(eis: Eisenstein, a: &[&[&[i64]]], shift: i64) -> Result<Self> {
        let m = a.iter().map(|row| row.iter().map(|f| QPoly::from_ints(f)).collect()).collect();
        KisinModule::new(eis, m, shift)
    }

    pub fn p(&self) -> u64 {
        self.eis.p
    }

    pub fn e(&self) -> u64 {
        self.eis.e()
    }

    pub fn eisenstein(&self) -> &Eisenstein {
        &self.eis
    }

    pub fn matrix(&self) -> &[Vec<QPoly>] {
        &self.a
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn rank(&self) -> usize {
        self.a.len()
    }

    /// `v_E(det A)`
    pub fn det_exponent(&self) -> u32 {
        self.det_e
    }

    pub fn is_effective(&self) -> bool {
        self.shift <= 0
    }

    /// `deg M = -v_E(det A) + s r`
    pub fn degree(&self) -> Q {
        q(-(self.det_e as i64) + self.shift * self.rank() as i64)
    }

    /// `(M, E^{-i} phi)`
    pub fn twist(&self, i: i64) -> KisinModule {
        KisinModule { shift: self.shift + i, ..self.clone() }
    }

    fn with_matrix(&self, a: Vec<Vec<QPoly>>) -> Result<KisinModule> {
        KisinModule::new(self.eis.clone(), a, self.shift)
    }

    pub fn direct_sum(&self, o: &KisinModule) -> Result<KisinModule> {
        if self.eis != o.eis || self.shift != o.shift {
            return Err(Error::RingMismatch("direct sum needs equal E and shift".into()));
        }
        let (r, t) = (self.rank(), o.rank());
        let mut m = vec![vec![QPoly::zero(); r + t]; r + t];
        for i in 0..r {
            for j in 0..r {
                m[i][j] = self.a[i][j].clone();
            }
        }
        for i in 0..t {
            for j in 0..t {
                m[r + i][r + j] = o.a[i][j].clone();
            }
        }
        self.with_matrix(m)
    }

    /// `t_H(M) = Pos(M, phi^* M)`, relative to the `E`-adic valuation.
    pub fn hodge_type(&self) -> Result<TypeVector> {
        let ctx = EAdic::new(self.eis.poly().clone())?;
        let m = DvrLattice::standard(ctx.clone(), self.rank());
        let basis = self.a.iter().map(|row| row.iter().map(|f| RatFunc::from_poly(f.clone())).collect()).collect();
        let am = DvrLattice::new(ctx, basis)?;
        Ok(self.shifted(m.pos(&am)?))
    }

    /// The Hodge type of `M/uM`, i.e. of `A(0)` over `Z_p`.
    pub fn hodge_type_at_zero(&self) -> Result<TypeVector> {
        let ctx = PAdic { p: self.p() };
        let a0 = self.a.iter().map(|row| row.iter().map(|f| f.coeff(0)).collect()).collect();
        let m = DvrLattice::standard(ctx.clone(), self.rank());
        let am = DvrLattice::new(ctx, a0)?;
        Ok(self.shifted(m.pos(&am)?))
    }

    fn shifted(&self, t: TypeVector) -> TypeVector {
        t.add(&TypeVector::constant(q(self.shift), self.rank())).unwrap()
    }

    pub fn mod_p(&self) -> Result<PtModule> {
        PtModule::from_qpolys(self.p(), 8, &self.a, self.shift * self.e() as i64)
    }

    /// `t_H(M/pM)`, unnormalized (u-adic).
    pub fn mod_p_hodge_type(&self) -> Result<TypeVector> {
        self.mod_p()?.hodge_type()
    }

    /// `M/p^n M` as a torsion module with `phi = u^{-e s} A`; the twist by
    /// `E^s` and by `u^{e s}` agree modulo `p` and give the same polygons.
    pub fn reduce(&self, n: u32) -> Result<TorsionKisinModule> {
        TorsionKisinModule::from_qpolys(self.p(), n, self.e(), &self.a, self.shift * self.e() as i64)
    }

    /// `t_{F,n}`, normalized by `1/(n e)` on `[0, rank]`.
    pub fn fargues_n(&self, n: u32, opts: &SearchOptions) -> Result<PolygonFunction> {
        if n == 1 || self.rank() > 2 {
            if n != 1 {
                return Err(Error::SearchBudgetExceeded(format!(
                    "torsion Fargues filtrations need rank at most 2, got {}",
                    self.rank()
                )));
            }
            let (_, t) = self.mod_p()?.fargues(opts)?;
            return Ok(PolygonFunction::of_type(&t).scale_y(&(Q::one() / q(self.e() as i64))));
        }
        self.reduce(n)?.normalized_polygon(opts)
    }

    /// `t_{F,n}` for `n = 1, 2, 4, ... <= n_max`.
    pub fn fargues_tower(&self, n_max: u32, opts: &SearchOptions) -> Result<Vec<(u32, PolygonFunction)>> {
        level_chain(n_max).into_iter().map(|n| Ok((n, self.fargues_n(n, opts)?))).collect()
    }

    /// Pointwise minimum of the tower, approximating `t_F = lim t_{F,n}`.
    pub fn fargues_limit(&self, n_max: u32, opts: &SearchOptions) -> Result<PolygonFunction> {
        let tower = self.fargues_tower(n_max, opts)?;
        let mut acc = tower[0].1.clone();
        for (_, t) in &tower[1..] {
            acc = acc.min(t)?;
        }
        Ok(acc)
    }

    /// Semistability of `M/pM`.
    pub fn is_semistable(&self, opts: &SearchOptions) -> Result<(bool, Certificate)> {
        let (f, _) = self.mod_p()?.fargues(opts)?;
        Ok((f.is_semistable(), f.certificate))
    }

    /// `t_{F,n} = t_{F,1}` for every `n` of the chain up to `n_max`.
    pub fn is_hn_type(&self, n_max: u32, opts: &SearchOptions) -> Result<bool> {
        let tower = self.fargues_tower(n_max, opts)?;
        Ok(tower.iter().all(|(_, t)| t == &tower[0].1))
    }

    /// Minimal slope of the Fargues filtration of `M/pM`, normalized.
    pub fn mu_min(&self, opts: &SearchOptions) -> Result<Q> {
        let (f, _) = self.mod_p()?.fargues(opts)?;
        Ok(f.min_slope() / q(self.e() as i64))
    }

    fn diagonal_exponents(&self) -> Option<Vec<u32>> {
        let r = self.rank();
        for i in 0..r {
            for j in 0..r {
                if i != j && !self.a[i][j].is_zero() {
                    return None;
                }
            }
        }
        self.a.iter().enumerate().map(|(i, row)| row[i].val_e(self.eis.poly())).collect()
    }

    fn diagonal_of(&self, idx: &[usize]) -> Result<KisinModule> {
        let n = idx.len();
        let mut m = vec![vec![QPoly::zero(); n]; n];
        for (k, &i) in idx.iter().enumerate() {
            m[k][k] = self.a[i][i].clone();
        }
        self.with_matrix(m)
    }

    fn identity_witness(&self) -> Witness {
        let r = self.rank();
        let matrix = (0..r).map(|i| (0..r).map(|j| if i == j { QPoly::one() } else { QPoly::zero() }).collect()).collect();
        Witness { matrix, p_precision: u32::MAX, u_precision: i64::MAX, verified: true }
    }

    /// One step of the theta-algorithm.
    pub fn theta_step(&self, opts: &ThetaOptions) -> Result<ThetaStep> {
        let (ss, cert) = self.is_semistable(&opts.search)?;
        if ss {
            return Ok(ThetaStep {
                theta: None,
                prime: self.clone(),
                kernel: Some(self.clone()),
                split: false,
                k0: 1,
                witness: self.identity_witness(),
                quotient_type: TypeVector::new(vec![]),
                certificate: cert,
            });
        }
        if let Some(d) = self.diagonal_exponents() {
            let dmax = *d.iter().max().unwrap();
            let top: Vec<usize> = (0..d.len()).filter(|&i| d[i] < dmax).collect();
            let low: Vec<usize> = (0..d.len()).filter(|&i| d[i] == dmax).collect();
            let order: Vec<usize> = top.iter().chain(&low).copied().collect();
            let r = self.rank();
            let mut w = vec![vec![QPoly::zero(); r]; r];
            for (k, &i) in order.iter().enumerate() {
                w[i][k] = if d[i] == dmax { QPoly::constant(q(self.p() as i64)) } else { QPoly::one() };
            }
            let e = self.e() as i64;
            let qt = TypeVector::constant(q(-(dmax as i64) * e + self.shift * e), low.len());
            return Ok(ThetaStep {
                theta: Some(self.diagonal_of(&top)?),
                prime: self.diagonal_of(&order)?,
                kernel: Some(self.diagonal_of(&low)?),
                split: true,
                k0: 1,
                witness: Witness { matrix: w, p_precision: u32::MAX, u_precision: i64::MAX, verified: true },
                quotient_type: qt,
                certificate: cert,
            });
        }
        if self.rank() != 2 {
            return Err(Error::SearchBudgetExceeded(format!(
                "theta-algorithm supports rank at most 2 beyond split modules, got rank {}",
                self.rank()
            )));
        }
        self.theta_rank_two(opts)
    }

    fn theta_rank_two(&self, opts: &ThetaOptions) -> Result<ThetaStep> {
        let eff = KisinModule { shift: 0, ..self.clone() };
        let mut cats = Vec::new();
        let mut flags: Vec<HnFlag<TkSub>> = Vec::new();
        let mut minrank: Vec<i64> = Vec::new();
        let mut cert = Certificate::Exhaustive;
        let mut chosen: Option<(u32, i64)> = None;
        for k in 1..=opts.level_budget {
            let cat = eff.reduce(k)?.category(&opts.search)?;
            let flag = hncore::hn_flag(&cat)?;
            cert = cert.and(&flag.certificate);
            let nk = flag.ranks.len();
            let rf = if nk >= 2 { flag.ranks[nk - 2] } else { 0 };
            minrank.push(2 * k as i64 - rf as i64);
            cats.push(cat);
            flags.push(flag);
            let kk = minrank.len();
            if kk < 4 {
                continue;
            }
            let al = |i: usize| minrank[i + 1] - minrank[i];
            let i = kk - 4;
            if al(i) != al(i + 1) || al(i + 1) != al(i + 2) {
                continue;
            }
            let f = &flags[i];
            let nf = f.steps.len();
            if nf < 2 {
                continue;
            }
            let sub = f.steps[nf - 2];
            let k0 = i as u32 + 1;
            // a growing minimal quotient comes from a saturated line, which
            // shows up as a cyclic step p^a R v
            let ok = match al(i) {
                0 => sub.line.is_some(),
                1 => sub.line.is_some() && sub.a + sub.c == k0,
                _ => false,
            };
            if ok {
                chosen = Some((k0, al(i)));
                break;
            }
        }
        let (k0, alpha) = chosen.ok_or_else(|| {
            Error::PrecisionExhausted(format!("Fargues filtrations did not stabilize within {} levels", opts.level_budget))
        })?;
        let ki = (k0 - 1) as usize;
        let (cat, flag) = (&cats[ki], &flags[ki]);
        let nf = flag.steps.len();
        let sub = flag.steps[nf - 2];
        let node = cat.line(&sub).unwrap().clone();
        let (a, c) = (sub.a, sub.c);
        if !is_integral(&node.b) {
            return Err(Error::VerificationFailed("the stabilized line is not integral".into()));
        }
        let qrank = 2 * k0 as usize - flag.ranks[nf - 2];
        let qdeg = cat.module.degree() - &flag.degrees[nf - 2];
        let qslope = &qdeg / q(qrank as i64);
        let shift = self.shift;
        let e = self.e() as i64;
        let quotient_type = TypeVector::constant(qslope + q(e * shift), qrank);
        if alpha == 0 {
            let (prime, witness) = self.preimage(node.chart, &node.b, a, c)?;
            return Ok(ThetaStep {
                theta: Some(prime.clone()),
                prime,
                kernel: None,
                k0,
                split: false,
                witness,
                quotient_type,
                certificate: cert,
            });
        }
        let pp = k0 + opts.extra_digits;
        let b = self.lift_integral(node.chart, node.b.clone(), c, pp)?;
        let tri = self.triangularize(node.chart, &b, a, c, pp, opts.witness_u)?;
        let rank_one = |f: &QPoly| KisinModule::new(self.eis.clone(), vec![vec![f.clone()]], shift);
        Ok(ThetaStep {
            theta: Some(rank_one(&tri.diag[0])?),
            kernel: Some(rank_one(&tri.diag[1])?),
            prime: KisinModule::new(self.eis.clone(), tri.matrix, shift)?,
            k0,
            split: true,
            witness: tri.witness,
            quotient_type,
            certificate: cert,
        })
    }

    /// The preimage `p^a (R (1, b) + p^c M)` of a step of the torsion
    /// filtration, for a line that is polynomial and stable modulo `p^c`.
    fn preimage(&self, chart: usize, b: &Laurent, a: u32, c: u32) -> Result<(KisinModule, Witness)> {
        let p = self.p();
        let bx = b.as_exact();
        let am = chart_matrix(&to_laurent(p, c, &self.a)?, chart);
        if !stability_defect(&am, &bx).is_zero() {
            return Err(Error::PrecisionExhausted("the stabilized line is not a polynomial modulo p^c".into()));
        }
        let bq = to_qpoly(&bx)?;
        let sw = |m: &[Vec<QPoly>]| -> Vec<Vec<QPoly>> {
            if chart == 0 {
                m.to_vec()
            } else {
                vec![vec![m[1][1].clone(), m[1][0].clone()], vec![m[0][1].clone(), m[0][0].clone()]]
            }
        };
        let ac = sw(&self.a);
        let fb = bq.frobenius(p);
        let lam = &ac[0][0] + &(&ac[0][1] * &fb);
        let kap = &ac[1][1] - &(&bq * &ac[0][1]);
        let defect = &(&ac[1][0] + &(&ac[1][1] * &fb)) - &(&bq * &lam);
        let pc = q(pow_u64(p, c) as i64);
        let prime = vec![
            vec![lam, ac[0][1].scale(&pc)],
            vec![defect.scale(&(Q::one() / &pc)), kap],
        ];
        let prime = KisinModule::new(self.eis.clone(), prime, self.shift)?;
        let pa = q(pow_u64(p, a) as i64);
        let mut w = vec![vec![QPoly::constant(pa.clone()), QPoly::zero()], vec![bq.scale(&pa), QPoly::constant(&pa * &pc)]];
        if chart == 1 {
            w.swap(0, 1);
        }
        let verified = qpoly_mat_mul(&self.a, &frobenius_mat(&w, p)) == qpoly_mat_mul(&w, prime.matrix());
        if !verified {
            return Err(Error::VerificationFailed("preimage basis does not intertwine the Frobenii".into()));
        }
        Ok((prime, Witness { matrix: w, p_precision: u32::MAX, u_precision: i64::MAX, verified }))
    }

    /// Lift an integral stable line from `p^level` to `p^target`, keeping
    /// only integral lifts that extend all the way.
    fn lift_integral(&self, chart: usize, b: Laurent, level: u32, target: u32) -> Result<Laurent> {
        if level >= target {
            return Ok(b);
        }
        let am = chart_matrix(&to_laurent(self.p(), level + 1, &self.a)?, chart);
        let cands = lift_line(self.p(), level, &am, &b)?;
        let mut last = None;
        for x in cands.into_iter().filter(is_integral) {
            match self.lift_integral(chart, x, level + 1, target) {
                Ok(y) => return Ok(y),
                Err(e) => last = Some(e),
            }
        }
        Err(last.unwrap_or_else(|| Error::VerificationFailed(format!("no integral lift of the line to level {}", level + 1))))
    }

    /// Conjugate by `p^a (1, 0; b, p^c) diag(g1, g0)` to reach
    /// `(c1 E^{d1}, beta; 0, c0 E^{d0})` modulo `(p^pp, u^v)`.
    fn triangularize(&self, chart: usize, b: &Laurent, a: u32, c: u32, pp: u32, v_want: i64) -> Result<Triangular> {
        let p = self.p();
        let am = chart_matrix(&to_laurent(p, pp, &self.a)?, chart);
        if !stability_defect(&am, b).is_zero() {
            return Err(Error::VerificationFailed("lifted line is not stable".into()));
        }
        let fb = b.frobenius();
        let lam = am[0][0].add(&am[0][1].mul(&fb));
        let kap = am[1][1].sub(&b.mul(&am[0][1]));
        let e = self.e() as i64;
        let einv = self.eis.inverse_mod(pp)?;
        let split = |x: &Laurent| -> Result<(u32, Laurent)> {
            let v = x.reduce(1).val().ok_or_else(|| Error::PrecisionExhausted("diagonal entry vanishes mod p".into()))?;
            if v % e != 0 {
                return Err(Error::VerificationFailed("diagonal entry is not a unit times a power of E".into()));
            }
            let d = (v / e) as u32;
            let mut eps = x.clone();
            for _ in 0..d {
                eps = eps.mul(&einv);
            }
            if !is_integral(&eps) {
                return Err(Error::VerificationFailed("diagonal entry is not divisible by its E-power".into()));
            }
            Ok((d, eps))
        };
        let (d1, eps1) = split(&lam)?;
        let (d0, eps0) = split(&kap)?;
        if d1 + d0 != self.det_e {
            return Err(Error::VerificationFailed("diagonal E-powers do not add up to the determinant".into()));
        }
        let avail = [&eps1, &eps0, b].iter().map(|x| x.prec().unwrap_or(i64::MAX)).min().unwrap();
        let v = v_want.min(avail);
        if v < 4 {
            return Err(Error::PrecisionExhausted("too little u-adic precision left for the witness".into()));
        }
        let md = pow_u64(p, pp);
        let unit = |eps: &Laurent| -> Result<(u64, Laurent)> {
            let c0 = eps.coeff(0);
            let inv = inv_mod(c0, md).ok_or_else(|| Error::VerificationFailed("unit part has non-unit constant term".into()))?;
            Ok((c0, frobenius_product(&eps.scale(inv), v)))
        };
        let (c1, g1) = unit(&eps1)?;
        let (c0, g0) = unit(&eps0)?;
        let pc = pow_u64(p, c);
        let beta = am[0][1].mul(&g0.frobenius()).mul(&g1.inverse(v)?).scale(pc).truncate(v);
        let ep = self.eis.poly();
        let signed = |x: u64| if x > md / 2 { x as i64 - md as i64 } else { x as i64 };
        let diag1 = ep.pow(d1).scale(&q(signed(c1)));
        let diag0 = ep.pow(d0).scale(&q(signed(c0)));
        let matrix = vec![vec![diag1.clone(), to_qpoly(&beta.as_exact())?], vec![QPoly::zero(), diag0.clone()]];
        let pa = pow_u64(p, a);
        let z = Laurent::zero(p, pp);
        let mut w = [vec![g1.scale(pa), z.clone()],
            vec![b.mul(&g1).scale(pa).truncate(v), g0.scale(pa * pc % md)]];
        if chart == 1 {
            w.swap(0, 1);
        }
        let wq: Vec<Vec<QPoly>> =
            w.iter().map(|row| row.iter().map(|x| to_qpoly(&x.truncate(v).as_exact())).collect()).collect::<Result<_>>()?;
        let verified = verify_witness(p, pp, v, &self.a, &matrix, &wq)?;
        if !verified {
            return Err(Error::VerificationFailed("isogeny witness does not intertwine the Frobenii".into()));
        }
        Ok(Triangular {
            diag: [diag1, diag0],
            matrix,
            witness: Witness { matrix: wq, p_precision: pp, u_precision: v, verified },
        })
    }

    /// Iterate theta until the module splits into its HN pieces.
    pub fn hn_decompose(&self, opts: &ThetaOptions) -> Result<HnDecomposition> {
        let r = self.rank();
        let e = self.e() as i64;
        let (f, _) = self.mod_p()?.fargues(&opts.search)?;
        let mu_un = f.min_slope();
        let fact: u64 = (1..=r as u64).product();
        let step_bound = (mu_un.abs() * q(fact as i64)).ceil().to_integer().to_u64().unwrap_or(u64::MAX / 2) + 1;
        if f.is_semistable() {
            return Ok(HnDecomposition {
                module: self.clone(),
                ranks: vec![r],
                slopes: vec![self.degree() / q(r as i64)],
                witness: self.identity_witness(),
                iterations: 0,
                step_bound,
                constant: Q::zero(),
                certificate: f.certificate,
            });
        }
        if let Some(d) = self.diagonal_exponents() {
            let mut order: Vec<usize> = (0..r).collect();
            order.sort_by_key(|&i| d[i]);
            let mut ranks = Vec::new();
            let mut slopes = Vec::new();
            for (k, &i) in order.iter().enumerate() {
                if k + 1 == r || d[order[k + 1]] != d[i] {
                    ranks.push(k + 1);
                    slopes.push(q(-(d[i] as i64) + self.shift));
                }
            }
            let mut w = vec![vec![QPoly::zero(); r]; r];
            for (k, &i) in order.iter().enumerate() {
                w[i][k] = QPoly::one();
            }
            let iterations = slopes.len() - 1;
            if iterations as u64 > step_bound {
                return Err(Error::StepBudgetExceeded { steps: iterations, bound: step_bound.to_string() });
            }
            return Ok(HnDecomposition {
                module: self.diagonal_of(&order)?,
                ranks,
                slopes,
                witness: Witness { matrix: w, p_precision: u32::MAX, u_precision: i64::MAX, verified: true },
                iterations,
                step_bound,
                constant: Q::zero(),
                certificate: f.certificate,
            });
        }
        let mut cur = self.clone();
        let mut iterations = 0usize;
        let mut constant = Q::zero();
        let mut cert = f.certificate.clone();
        let mut total: Option<Witness> = None;
        loop {
            let (fc, _) = cur.mod_p()?.fargues(&opts.search)?;
            if fc.is_semistable() {
                let r = cur.rank();
                return Ok(HnDecomposition {
                    slopes: vec![cur.degree() / q(r as i64)],
                    module: cur,
                    ranks: vec![r],
                    witness: total.unwrap_or_else(|| self.identity_witness()),
                    iterations,
                    step_bound,
                    constant,
                    certificate: cert,
                });
            }
            let st = cur.theta_step(opts)?;
            iterations += 1;
            if iterations as u64 > step_bound {
                return Err(Error::StepBudgetExceeded { steps: iterations, bound: step_bound.to_string() });
            }
            cert = cert.and(&st.certificate);
            let (fp, _) = st.prime.mod_p()?.fargues(&opts.search)?;
            let kmin = fp.min_slope();
            for (i, s) in st.quotient_type.entries().iter().enumerate() {
                let gap = (s - &kmin) * q(i as i64 + 1) / q(e);
                if gap > constant {
                    constant = gap;
                }
            }
            total = Some(match total {
                None => st.witness.clone(),
                Some(w) => compose_witness(self.p(), &w, &st.witness)?,
            });
            cur = st.prime;
            if st.split {
                break;
            }
        }
        let d1 = cur.a[0][0].val_e(self.eis.poly()).unwrap() as i64;
        let d0 = cur.a[1][1].val_e(self.eis.poly()).unwrap() as i64;
        Ok(HnDecomposition {
            slopes: vec![q(-d1 + self.shift), q(-d0 + self.shift)],
            module: cur,
            ranks: vec![1, 2],
            witness: total.unwrap(),
            iterations,
            step_bound,
            constant,
            certificate: cert,
        })
    }

    /// The submodule spanned by `e_j` (`j != i`) and `p e_i`, when stable.
    pub fn scale_basis_vector(&self, i: usize) -> Result<KisinModule> {
        let r = self.rank();
        let pq = q(self.p() as i64);
        let mut m = self.a.clone();
        for j in 0..r {
            if j == i {
                continue;
            }
            m[i][j] = self.a[i][j].scale(&(Q::one() / &pq));
            m[j][i] = self.a[j][i].scale(&pq);
        }
        if m[i].iter().flat_map(|f| f.coeffs()).any(|c| vp(c, self.p()).is_some_and(|v| v < 0)) {
            return Err(Error::InvalidInput(format!("row {} off the diagonal is not divisible by p", i)));
        }
        self.with_matrix(m)
    }
}

struct Triangular {
    diag: [QPoly; 2],
    matrix: Vec<Vec<QPoly>>,
    witness: Witness,
}

/// Check `A phi(W) = W B` modulo `(p^c, u^v)`.
pub fn verify_witness(p: u64, c: u32, v: i64, a: &[Vec<QPoly>], b: &[Vec<QPoly>], w: &[Vec<QPoly>]) -> Result<bool> {
    let al = to_laurent(p, c, a)?;
    let bl = to_laurent(p, c, b)?;
    let wl = to_laurent(p, c, w)?;
    let fw: Mat<Laurent> = wl.iter().map(|row| row.iter().map(|x| x.frobenius()).collect()).collect();
    let lhs = mat_mul(&al, &fw);
    let rhs = mat_mul(&wl, &bl);
    Ok(lhs.iter().flatten().zip(rhs.iter().flatten()).all(|(x, y)| x.sub(y).truncate(v).is_zero()))
}

fn compose_witness(p: u64, w1: &Witness, w2: &Witness) -> Result<Witness> {
    let c = w1.p_precision.min(w2.p_precision);
    let v = w1.u_precision.min(w2.u_precision);
    let verified = w1.verified && w2.verified;
    if w1.is_exact() && w2.is_exact() {
        return Ok(Witness { matrix: qpoly_mat_mul(&w1.matrix, &w2.matrix), p_precision: c, u_precision: v, verified });
    }
    let (c, v) = (c.min(12), v.min(1 << 16));
    let a = to_laurent(p, c, &w1.matrix)?;
    let b = to_laurent(p, c, &w2.matrix)?;
    let prod = mat_mul(&a, &b);
    let matrix = prod.iter().map(|row| row.iter().map(|x| to_qpoly(&x.truncate(v).as_exact())).collect()).collect::<Result<_>>()?;
    Ok(Witness { matrix, p_precision: c, u_precision: v, verified: w1.verified && w2.verified })
}

impl fmt::Display for KisinModule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .a
            .iter()
            .map(|r| format!("[{}]", r.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        if self.shift == 0 {
            write!(f, "[{}]", rows.join(", "))
        } else {
            write!(f, "E^{} * [{}]", -self.shift, rows.join(", "))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eis(p: u64) -> Eisenstein {
        Eisenstein::linear(p).unwrap()
    }

    fn e_pow(p: u64, k: u32) -> Vec<i64> {
        let e = QPoly::from_ints(&[-(p as i64), 1]).pow(k);
        e.coeffs().iter().map(|c| c.to_integer().to_i64().unwrap()).collect()
    }

    fn so() -> SearchOptions {
        SearchOptions { search_degree: 8, work_precision: 64 }
    }

    #[test]
    fn eisenstein_validation() {
        assert!(Eisenstein::new(2, QPoly::from_ints(&[-2, 0, 1])).is_ok());
        assert!(Eisenstein::new(2, QPoly::from_ints(&[-4, 1])).is_err());
        assert!(Eisenstein::new(3, QPoly::from_ints(&[-3, 1, 1])).is_err());
        assert!(Eisenstein::new(4, QPoly::from_ints(&[-2, 1])).is_err());
    }

    #[test]
    fn inverse_of_e() {
        for (p, e) in [(2u64, QPoly::from_ints(&[-2, 1])), (3, QPoly::from_ints(&[-3, 0, 1]))] {
            let eis = Eisenstein::new(p, e.clone()).unwrap();
            let inv = eis.inverse_mod(5).unwrap();
            let prod = Laurent::from_qpoly(p, 5, &e, 0).unwrap().mul(&inv);
            assert!(prod.sub(&Laurent::one(p, 5)).is_zero());
        }
    }

    #[test]
    fn rejects_non_kisin_determinant() {
        assert!(KisinModule::from_ints(eis(2), &[&[&[0, 1]]], 0).is_err());
        assert!(KisinModule::from_ints(eis(2), &[&[&[2]]], 0).is_err());
        assert!(KisinModule::from_ints(eis(2), &[&[&[-2, 1]]], 0).is_ok());
    }

    #[test]
    fn hodge_types() {
        let e1 = e_pow(2, 1);
        let m = KisinModule::from_ints(eis(2), &[&[&e1, &[0]], &[&[0], &[1]]], 0).unwrap();
        assert_eq!(m.hodge_type().unwrap(), TypeVector::from_ints(&[0, -1]));
        assert_eq!(m.hodge_type_at_zero().unwrap(), TypeVector::from_ints(&[0, -1]));
        assert_eq!(m.degree(), q(-1));
        let e2 = e_pow(3, 2);
        let e1 = e_pow(3, 1);
        let m = KisinModule::from_ints(eis(3), &[&[&e2, &[0]], &[&[0], &e1]], 0).unwrap();
        assert_eq!(m.hodge_type().unwrap(), TypeVector::from_ints(&[-1, -2]));
        assert_eq!(m.twist(2).hodge_type().unwrap(), TypeVector::from_ints(&[1, 0]));
    }

    #[test]
    fn reduction_degree() {
        let m = KisinModule::from_ints(eis(2), &[&[&e_pow(2, 1)]], 0).unwrap();
        let t = m.reduce(2).unwrap();
        assert_eq!(t.degree(), q(-2));
        let m3 = KisinModule::new(Eisenstein::new(3, QPoly::from_ints(&[-3, 0, 1])).unwrap(), vec![vec![QPoly::from_ints(&[-3, 0, 1])]], 0).unwrap();
        assert_eq!(m3.reduce(2).unwrap().degree(), q(-4));
        assert_eq!(m3.fargues_n(2, &so()).unwrap().endpoint(), (q(1), q(-1)));
    }

    #[test]
    fn split_module_theta() {
        let e2 = e_pow(2, 2);
        let m = KisinModule::from_ints(eis(2), &[&[&[1], &[0]], &[&[0], &e2]], 0).unwrap();
        let st = m.theta_step(&ThetaOptions::default()).unwrap();
        assert_eq!(st.k0, 1);
        assert_eq!(st.theta.unwrap().degree(), q(0));
        assert_eq!(st.kernel.unwrap().degree(), q(-2));
        let d = m.hn_decompose(&ThetaOptions::default()).unwrap();
        assert_eq!(d.iterations, 1);
        assert_eq!(d.slopes, vec![q(0), q(-2)]);
        assert!(d.module.is_hn_type(4, &so()).unwrap());
    }

    #[test]
    fn three_slopes_take_two_steps() {
        let m = KisinModule::from_ints(
            eis(3),
            &[&[&e_pow(3, 2), &[0], &[0]], &[&[0], &[1], &[0]], &[&[0], &[0], &e_pow(3, 1)]],
            0,
        )
        .unwrap();
        let d = m.hn_decompose(&ThetaOptions::default()).unwrap();
        assert_eq!(d.iterations, 2);
        assert_eq!(d.slopes, vec![q(0), q(-1), q(-2)]);
        assert_eq!(d.ranks, vec![1, 2, 3]);
    }

    #[test]
    fn tower_is_monotone_on_triangular_module() {
        let e = e_pow(2, 1);
        let e3 = e_pow(2, 3);
        let m = KisinModule::from_ints(eis(2), &[&[&e, &[0]], &[&[2], &e3]], 0).unwrap();
        let tower = m.fargues_tower(4, &so()).unwrap();
        for w in tower.windows(2) {
            assert!(w[1].1.le(&w[0].1).unwrap());
        }
        let th = PolygonFunction::of_type(&m.mod_p_hodge_type().unwrap()).scale_y(&(Q::one() / q(1)));
        assert!(tower[0].1.le(&th).unwrap());
    }

    #[test]
    fn theta_on_non_hn_type_module() {
        let e = e_pow(2, 1);
        let e3 = e_pow(2, 3);
        let m = KisinModule::from_ints(eis(2), &[&[&e, &[0]], &[&[2], &e3]], 0).unwrap();
        let t1 = m.fargues_n(1, &so()).unwrap();
        let t2 = m.fargues_n(2, &so()).unwrap();
        assert!(t2.le(&t1).unwrap() && t2 != t1);
        let st = m.theta_step(&ThetaOptions::default()).unwrap();
        assert_eq!(st.k0, 1);
        assert!(!st.split);
        assert_eq!(st.prime.matrix()[1][0], QPoly::from_ints(&[1]));
        let d = m.hn_decompose(&ThetaOptions::default()).unwrap();
        assert_eq!(d.iterations, 1);
        assert!(d.witness.verified);
        assert!(d.module.is_hn_type(4, &so()).unwrap());
        assert_eq!(d.module.degree(), m.degree());
    }

    #[test]
    fn scaling_a_basis_vector() {
        let e = e_pow(2, 1);
        let m = KisinModule::from_ints(eis(2), &[&[&e, &[2]], &[&[0], &[1]]], 0).unwrap();
        let m2 = m.scale_basis_vector(0).unwrap();
        assert_eq!(m2.matrix()[0][1], QPoly::from_ints(&[1]));
        assert_eq!(m2.degree(), m.degree());
        assert!(m.scale_basis_vector(1).is_ok());
        let bad = KisinModule::from_ints(eis(2), &[&[&e, &[1]], &[&[0], &[1]]], 0).unwrap();
        assert!(bad.scale_basis_vector(0).is_err());
    }
}
