//! Full-rank lattices over a discrete valuation ring inside `K^r`.

use num_traits::Zero;

use crate::arith::dvr::{det, identity, is_integral, mat_inv, mat_mul, snf, transpose, Dvr, Mat, Val};
use crate::arith::rational::{q, Q};
use crate::error::{Error, Result};
use crate::filtrations::{Field, FlagFiltration, Subspace};
use crate::types::{sqrt_sum_ge, TypeVector};

/// The lattice spanned by the columns of `basis`.
#[derive(Clone, Debug)]
pub struct DvrLattice<D: Dvr> {
    ctx: D,
    basis: Mat<D::Elem>,
}

fn columns<E: Clone>(a: &Mat<E>) -> Vec<Vec<E>> {
    transpose(a)
}

fn from_columns<E: Clone>(cols: &[Vec<E>]) -> Mat<E> {
    transpose(&cols.to_vec())
}

/// A matrix with constant rational entries, embedded in the context.
fn embed<D: Dvr>(ctx: &D, a: &[Vec<Q>]) -> Result<Mat<D::Elem>> {
    a.iter().map(|r| r.iter().map(|x| ctx.from_q(x)).collect()).collect()
}

fn diag<D: Dvr>(ctx: &D, v: &[i64]) -> Mat<D::Elem> {
    let n = v.len();
    (0..n).map(|i| (0..n).map(|j| if i == j { ctx.pi_pow(v[i]) } else { ctx.zero() }).collect()).collect()
}

/// Matrix of a `Field`-linear map given as a function on coordinate vectors.
fn map_matrix(n: usize, f: impl Fn(&[Q]) -> Vec<Q>) -> Vec<Vec<Q>> {
    let cols: Vec<Vec<Q>> = (0..n).map(|i| f(&crate::filtrations::unit(n, i))).collect();
    let m = cols.first().map_or(0, |c| c.len());
    (0..m).map(|r| cols.iter().map(|c| c[r].clone()).collect()).collect()
}

impl<D: Dvr> DvrLattice<D> {
    pub fn new(ctx: D, basis: Mat<D::Elem>) -> Result<Self> {
        let r = basis.len();
        if basis.iter().any(|row| row.len() != r) {
            return Err(Error::InvalidInput("lattice basis must be square".into()));
        }
        match ctx.val(&det(&ctx, &basis)?) {
            Val::Zero => return Err(Error::NotFullRank),
            Val::AtLeast(_) => return Err(Error::PrecisionExhausted("basis determinant vanishes to known precision".into())),
            Val::Finite(_) => {}
        }
        Ok(DvrLattice { ctx, basis })
    }

    pub fn standard(ctx: D, r: usize) -> Self {
        let basis = identity(&ctx, r);
        DvrLattice { ctx, basis }
    }

    pub fn ctx(&self) -> &D {
        &self.ctx
    }

    pub fn basis(&self) -> &Mat<D::Elem> {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    /// `pi^k M`
    pub fn scaled(&self, k: i64) -> Self {
        let s = self.ctx.pi_pow(k);
        let basis = self.basis.iter().map(|r| r.iter().map(|x| self.ctx.mul(x, &s)).collect()).collect();
        DvrLattice { ctx: self.ctx.clone(), basis }
    }

    /// `g M` for an invertible `g`.
    pub fn transform(&self, g: &Mat<D::Elem>) -> Result<Self> {
        DvrLattice::new(self.ctx.clone(), mat_mul(&self.ctx, g, &self.basis))
    }

    /// The lattice spanned by the columns of an `r x N` generator matrix.
    pub fn from_generators(ctx: D, gens: &Mat<D::Elem>) -> Result<Self> {
        let r = gens.len();
        let s = snf(&ctx, gens)?;
        if s.diag.len() < r {
            return Err(Error::NotFullRank);
        }
        let linv = mat_inv(&ctx, &s.left)?;
        let basis = mat_mul(&ctx, &linv, &diag(&ctx, &s.diag));
        DvrLattice::new(ctx, basis)
    }

    /// Adapted exponents `a_1 >= ... >= a_r` with `M2 = sum O pi^{-a_i} e_i`.
    pub fn pos(&self, o: &Self) -> Result<TypeVector> {
        let s = self.relative_snf(o)?;
        Ok(TypeVector::new(s.diag.iter().map(|&d| q(-d)).collect()))
    }

    fn relative_snf(&self, o: &Self) -> Result<crate::arith::dvr::Snf<D::Elem>> {
        if self.rank() != o.rank() {
            return Err(Error::LengthMismatch(self.rank(), o.rank()));
        }
        let c = mat_mul(&self.ctx, &mat_inv(&self.ctx, &self.basis)?, &o.basis);
        snf(&self.ctx, &c)
    }

    pub fn nu(&self, o: &Self) -> Result<Q> {
        Ok(self.pos(o)?.degree())
    }

    pub fn dist_sq(&self, o: &Self) -> Result<Q> {
        Ok(self.pos(o)?.norm_sq())
    }

    pub fn same_as(&self, o: &Self) -> Result<bool> {
        Ok(self.pos(o)?.entries().iter().all(|x| x.is_zero()))
    }

    pub fn contains_vector(&self, v: &[D::Elem]) -> Result<bool> {
        let inv = mat_inv(&self.ctx, &self.basis)?;
        let col: Mat<D::Elem> = v.iter().map(|x| vec![x.clone()]).collect();
        Ok(is_integral(&self.ctx, &mat_mul(&self.ctx, &inv, &col)))
    }

    pub fn contains(&self, o: &Self) -> Result<bool> {
        let inv = mat_inv(&self.ctx, &self.basis)?;
        Ok(is_integral(&self.ctx, &mat_mul(&self.ctx, &inv, &o.basis)))
    }

    pub fn intersect(&self, o: &Self) -> Result<Self> {
        let c = mat_mul(&self.ctx, &mat_inv(&self.ctx, &o.basis)?, &self.basis);
        let s = snf(&self.ctx, &c)?;
        let shift: Vec<i64> = s.diag.iter().map(|&d| (-d).max(0)).collect();
        let basis = mat_mul(&self.ctx, &mat_mul(&self.ctx, &self.basis, &s.right), &diag(&self.ctx, &shift));
        DvrLattice::new(self.ctx.clone(), basis)
    }

    pub fn sum(&self, o: &Self) -> Result<Self> {
        let gens: Mat<D::Elem> =
            self.basis.iter().zip(&o.basis).map(|(a, b)| a.iter().chain(b.iter()).cloned().collect()).collect();
        DvrLattice::from_generators(self.ctx.clone(), &gens)
    }

    /// `F^i(M1, M2) = (pi^i M2 cap M1 + pi M1) / pi M1`, in the coordinates
    /// of the basis of `M1` reduced to the residue field.
    pub fn pair_filtration(&self, o: &Self) -> Result<FlagFiltration> {
        let field = self
            .ctx
            .residue_field()
            .ok_or_else(|| Error::InvalidInput(format!("no supported residue field for {}", self.ctx.describe())))?;
        let s = self.relative_snf(o)?;
        let linv = mat_inv(&self.ctx, &s.left)?;
        let r = self.rank();
        let mut vecs = Vec::with_capacity(r);
        for j in 0..r {
            let v = (0..r).map(|i| self.ctx.residue(&linv[i][j]).map(|x| field.norm(&x))).collect::<Result<Vec<_>>>()?;
            vecs.push(v);
        }
        let weights: Vec<Q> = s.diag.iter().map(|&d| q(-d)).collect();
        FlagFiltration::from_weighted_basis(field, r, &vecs, &weights)
    }

    /// `M cap W` as generators in `K^r` (columns), for `W` rational.
    fn intersect_subspace_gens(&self, w: &Subspace) -> Result<Vec<Vec<D::Elem>>> {
        if w.dim() == 0 {
            return Ok(vec![]);
        }
        let g = embed(&self.ctx, &transpose(&w.basis().to_vec()))?;
        let c = mat_mul(&self.ctx, &mat_inv(&self.ctx, &self.basis)?, &g);
        let s = snf(&self.ctx, &c)?;
        let neg: Vec<i64> = s.diag.iter().map(|&d| -d).collect();
        let b = mat_mul(&self.ctx, &mat_mul(&self.ctx, &g, &s.right), &diag(&self.ctx, &neg));
        Ok(columns(&b))
    }

    /// `M + F = sum_i pi^{-i} M cap F^i`, for `F` with integral breaks.
    pub fn add_filtration(&self, f: &FlagFiltration) -> Result<Self> {
        if !f.is_integral() {
            return Err(Error::NonIntegralFiltration(f.type_of().to_string()));
        }
        if f.dim != self.rank() {
            return Err(Error::LengthMismatch(f.dim, self.rank()));
        }
        let mut gens: Vec<Vec<D::Elem>> = Vec::new();
        for (b, step) in f.breaks().iter().zip(f.steps()) {
            let i: i64 = b.to_integer().try_into().map_err(|_| Error::InvalidInput("break too large".into()))?;
            gens.extend(self.scaled(-i).intersect_subspace_gens(step)?);
        }
        DvrLattice::from_generators(self.ctx.clone(), &from_columns(&gens))
    }

    /// Lattices `M cap W` (in the row coordinates of `W`) and the image of
    /// `M` in `V/W` (in its quotient coordinates).
    pub fn sub_quotient(&self, w: &Subspace) -> Result<(Option<Self>, Option<Self>)> {
        let r = self.rank();
        let sub = if w.dim() == 0 {
            None
        } else {
            let gens = self.intersect_subspace_gens(w)?;
            let pm = embed(&self.ctx, &map_matrix(r, |v| w.coords(v)))?;
            let g = mat_mul(&self.ctx, &pm, &from_columns(&gens));
            Some(DvrLattice::from_generators(self.ctx.clone(), &g)?)
        };
        let quo = if w.dim() == r {
            None
        } else {
            let qm = embed(&self.ctx, &map_matrix(r, |v| w.quotient_coords(v)))?;
            let g = mat_mul(&self.ctx, &qm, &self.basis);
            Some(DvrLattice::from_generators(self.ctx.clone(), &g)?)
        };
        Ok((sub, quo))
    }

    /// `Gr^g M = (M cap F^{>=g}) / (M cap F^{>g})` for each break `g`, each
    /// in the coordinates of `F^{>=g}/F^{>g}`.
    pub fn graded(&self, f: &FlagFiltration) -> Result<Vec<(Q, Self)>> {
        let mut out = Vec::new();
        let mut prev = Subspace::zero(f.field, f.dim);
        for (b, step) in f.breaks().iter().zip(f.steps()) {
            let (sub, _) = self.sub_quotient(step)?;
            let sub = sub.expect("steps are nonzero");
            let prev_in: Vec<Vec<Q>> = prev.basis().iter().map(|v| step.coords(v)).collect();
            let pw = Subspace::span(f.field, step.dim(), &prev_in);
            let (_, gr) = sub.sub_quotient(&pw)?;
            out.push((b.clone(), gr.expect("graded pieces are nonzero")));
            prev = step.clone();
        }
        Ok(out)
    }

    pub fn direct_sum(&self, o: &Self) -> Self {
        let (r, s) = (self.rank(), o.rank());
        let z = self.ctx.zero();
        let mut basis = Vec::with_capacity(r + s);
        for row in &self.basis {
            let mut x = row.clone();
            x.extend(std::iter::repeat_n(z.clone(), s));
            basis.push(x);
        }
        for row in &o.basis {
            let mut x = vec![z.clone(); r];
            x.extend(row.iter().cloned());
            basis.push(x);
        }
        DvrLattice { ctx: self.ctx.clone(), basis }
    }

    pub fn tensor(&self, o: &Self) -> Self {
        let (r, s) = (self.rank(), o.rank());
        let mut basis = vec![vec![self.ctx.zero(); r * s]; r * s];
        for i in 0..r {
            for j in 0..r {
                for k in 0..s {
                    for l in 0..s {
                        basis[i * s + k][j * s + l] = self.ctx.mul(&self.basis[i][j], &o.basis[k][l]);
                    }
                }
            }
        }
        DvrLattice { ctx: self.ctx.clone(), basis }
    }
}

/// Triangle inequality for the distance, in squared rational form.
pub fn distance_triangle_holds<D: Dvr>(m1: &DvrLattice<D>, m2: &DvrLattice<D>, m3: &DvrLattice<D>) -> Result<bool> {
    Ok(sqrt_sum_ge(&m1.dist_sq(m3)?, &m1.dist_sq(m2)?, &m2.dist_sq(m3)?))
}

/// A basis of `M1` adapted to `M1`, `M2` and the subspace `W` (its first
/// `dim W` vectors span `M1 cap W`), with the exponents. Fails with
/// `NoAdaptedBasis` when no such basis exists.
pub fn adapted_basis_for_subspace<D: Dvr>(
    m1: &DvrLattice<D>,
    m2: &DvrLattice<D>,
    w: &Subspace,
) -> Result<(Mat<D::Elem>, Vec<i64>)> {
    let ctx = m1.ctx();
    let r = m1.rank();
    let k = w.dim();
    let mut cols: Vec<Vec<D::Elem>> = Vec::new();
    let mut exps: Vec<i64> = Vec::new();
    // adapted basis of the pair of sublattices, pushed back into K^r
    if k > 0 {
        let (n1, _) = m1.sub_quotient(w)?;
        let (n2, _) = m2.sub_quotient(w)?;
        let (n1, n2) = (n1.unwrap(), n2.unwrap());
        let s = n1.relative_snf(&n2)?;
        let f = mat_mul(ctx, &n1.basis, &mat_inv(ctx, &s.left)?);
        let inc = embed(ctx, &transpose(&w.basis().to_vec()))?;
        cols.extend(columns(&mat_mul(ctx, &inc, &f)));
        exps.extend(s.diag.iter().map(|&d| -d));
    }
    if k < r {
        let (_, q1) = m1.sub_quotient(w)?;
        let (_, q2) = m2.sub_quotient(w)?;
        let (q1, q2) = (q1.unwrap(), q2.unwrap());
        let s = q1.relative_snf(&q2)?;
        let g = mat_mul(ctx, &q1.basis, &mat_inv(ctx, &s.left)?);
        let qm = embed(ctx, &map_matrix(r, |v| w.quotient_coords(v)))?;
        for (j, gj) in columns(&g).into_iter().enumerate() {
            let b = -s.diag[j];
            // lift through M1 cap pi^b M2
            let x = m1.intersect(&m2.scaled(b))?;
            let px = mat_mul(ctx, &qm, &x.basis);
            let t = snf(ctx, &px)?;
            let gcol: Mat<D::Elem> = gj.iter().map(|e| vec![e.clone()]).collect();
            let lg = mat_mul(ctx, &t.left, &gcol);
            let mut y = vec![ctx.zero(); r];
            for i in 0..t.diag.len() {
                let yi = ctx.div(&lg[i][0], &ctx.pi_pow(t.diag[i]))?;
                match ctx.val(&yi) {
                    Val::Finite(v) if v < 0 => return Err(Error::NoAdaptedBasis),
                    Val::AtLeast(v) if v < 0 => return Err(Error::NoAdaptedBasis),
                    _ => {}
                }
                y[i] = yi;
            }
            let ycol: Mat<D::Elem> = y.into_iter().map(|e| vec![e]).collect();
            let c = mat_mul(ctx, &t.right, &ycol);
            let lift = mat_mul(ctx, &x.basis, &c);
            cols.push(lift.into_iter().map(|mut r| r.remove(0)).collect());
            exps.push(b);
        }
    }
    let basis = from_columns(&cols);
    let lat = DvrLattice::new(ctx.clone(), basis.clone())?;
    let neg: Vec<i64> = exps.iter().map(|&a| -a).collect();
    let image = DvrLattice::new(ctx.clone(), mat_mul(ctx, &basis, &diag(ctx, &neg)))?;
    if !lat.same_as(m1)? || !image.same_as(m2)? {
        return Err(Error::NoAdaptedBasis);
    }
    Ok((basis, exps))
}

/// Residue field of a context, for building filtrations on `K^r`.
pub fn constant_field<D: Dvr>(ctx: &D) -> Option<Field> {
    ctx.residue_field()
}
