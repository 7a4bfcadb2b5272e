//! Acceptance criteria 1-10. Each criterion prints one PASS/FAIL line.

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slopeforge::arith::dvr::{Mat, PAdic, UAdic};
use slopeforge::arith::rational::{q, qr};
use slopeforge::filtrations::{unit, multisets, subsets};
use slopeforge::hncore::{self, Enumeration, SlopeCategory};
use slopeforge::isocrystal::{window_lattices, FilteredIsocrystal, Isocrystal};
use slopeforge::phimod::PtSub;
use slopeforge::tori::{self, GaloisSet, Weights};
use slopeforge::*;

/// Every criterion except 5 and 6 is an exact rational comparison.
const EXACT_TOLERANCE: i64 = 0;
/// Slack allowed in criteria 5 and 6 is `C / n` with `C` from the isogeny and nothing more.
const ISOGENY_SLACK_FACTOR: i64 = 1;
const SEED: u64 = 0x51_0e_f0_72;

type Outcome = (bool, String);

fn rng(salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

fn tol() -> Q {
    q(EXACT_TOLERANCE)
}

fn within(a: &Q, b: &Q, slack: &Q) -> bool {
    a <= &(b + slack + tol())
}

fn random_type(r: &mut ChaCha8Rng, len: usize) -> TypeVector {
    TypeVector::new((0..len).map(|_| qr(r.gen_range(-12..=12), r.gen_range(1..=4))).collect())
}

fn binom(n: usize, k: usize) -> i64 {
    if k > n {
        return 0;
    }
    let mut c = 1i64;
    for i in 0..k {
        c = c * (n - i) as i64 / (i + 1) as i64;
    }
    c
}

// ---------------------------------------------------------------- criterion 1

fn criterion_1() -> Outcome {
    let mut r = rng(1);
    let mut bad = 0usize;
    let mut rigidity_checked = 0usize;
    for _ in 0..1000 {
        let n1 = r.gen_range(1..=5);
        let n2 = r.gen_range(1..=5);
        let t1 = random_type(&mut r, n1);
        let t2 = random_type(&mut r, n2);
        let (d1, d2) = (t1.degree(), t2.degree());
        if t1.concat(&t2).degree() != &d1 + &d2 {
            bad += 1;
        }
        if t1.tensor(&t2).degree() != &d1 * q(n2 as i64) + &d2 * q(n1 as i64) {
            bad += 1;
        }
        for k in 1..=n1 {
            if t1.ext_power(k).degree() != &d1 * q(binom(n1 - 1, k - 1)) {
                bad += 1;
            }
            // oracle: sums over index subsets
            let mut want: Vec<Q> = subsets(n1, k).iter().map(|s| s.iter().map(|&i| t1.entries()[i].clone()).sum()).collect();
            want.sort_by(|a, b| b.cmp(a));
            if t1.ext_power(k).entries() != &want[..] {
                bad += 1;
            }
        }
        for k in 1..=3 {
            // oracle: sums over index multisets of size k
            let mut want: Vec<Q> = Vec::new();
            let mut stack = vec![(0usize, 0usize, Q::zero())];
            while let Some((start, depth, acc)) = stack.pop() {
                if depth == k {
                    want.push(acc);
                    continue;
                }
                for i in start..n1 {
                    stack.push((i, depth + 1, &acc + &t1.entries()[i]));
                }
            }
            want.sort_by(|a, b| b.cmp(a));
            let got = t1.sym_power(k);
            if got.entries() != &want[..] || got.degree() != &d1 * q(binom(n1 + k - 1, k - 1)) {
                bad += 1;
            }
            if multisets(n1, k).len() as i64 != binom(n1 + k - 1, k) {
                bad += 1;
            }
        }
        // rigidity: move mass downhill to get t <= t1, then compare norms
        let mut e = t1.entries().to_vec();
        if n1 >= 2 {
            let i = r.gen_range(0..n1 - 1);
            let moved = (&e[i] - &e[n1 - 1]) * qr(r.gen_range(0..=2), 4);
            e[i] -= &moved;
            e[n1 - 1] += &moved;
        }
        let lower = TypeVector::new(e);
        if !lower.dominance_le(&t1).unwrap() {
            bad += 1;
        }
        if lower.norm_sq() == t1.norm_sq() {
            rigidity_checked += 1;
            if lower != t1 {
                bad += 1;
            }
        } else if lower.norm_sq() > t1.norm_sq() {
            bad += 1;
        }
    }
    (bad == 0, format!("1000 random types, {} law violations, {} equal-norm dominance pairs all equal", bad, rigidity_checked))
}

// ---------------------------------------------------------------- criterion 2

fn random_padic(r: &mut ChaCha8Rng, p: u64, n: usize) -> DvrLattice<PAdic> {
    loop {
        let m: Mat<Q> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let k = r.gen_range(-2..=2i32);
                        q(r.gen_range(-4..=4)) * num_traits::pow(q(p as i64), k.unsigned_abs() as usize).pow(k.signum())
                    })
                    .collect()
            })
            .collect();
        if let Ok(l) = DvrLattice::new(PAdic { p }, m) {
            return l;
        }
    }
}

fn random_uadic(r: &mut ChaCha8Rng, p: u64, n: usize) -> DvrLattice<UAdic> {
    loop {
        let m: Mat<Laurent> = (0..n)
            .map(|_| {
                (0..n)
                    .map(|_| {
                        let lo = r.gen_range(-2..=1i64);
                        let terms: Vec<(i64, u64)> = (0..3).map(|j| (lo + j, r.gen_range(0..p))).collect();
                        Laurent::from_terms(p, 1, &terms, None)
                    })
                    .collect()
            })
            .collect();
        if let Ok(l) = DvrLattice::new(UAdic { p, prec: 64 }, m) {
            return l;
        }
    }
}

fn lattice_laws<D: slopeforge::arith::Dvr>(triples: &[(DvrLattice<D>, DvrLattice<D>, DvrLattice<D>)]) -> (usize, usize) {
    let mut tri_bad = 0;
    let mut anti_bad = 0;
    for (a, b, c) in triples {
        let ab = a.pos(b).unwrap();
        let bc = b.pos(c).unwrap();
        let ac = a.pos(c).unwrap();
        if !ac.dominance_le(&ab.add(&bc).unwrap()).unwrap() {
            tri_bad += 1;
        }
        if b.pos(a).unwrap() != ab.involution() {
            anti_bad += 1;
        }
    }
    (tri_bad, anti_bad)
}

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut tp = Vec::new();
    let mut tu = Vec::new();
    for i in 0..500 {
        let n = 1 + i % 4;
        let p = [2u64, 3, 5][i % 3];
        tp.push((random_padic(&mut r, p, n), random_padic(&mut r, p, n), random_padic(&mut r, p, n)));
        tu.push((random_uadic(&mut r, p, n), random_uadic(&mut r, p, n), random_uadic(&mut r, p, n)));
    }
    let (pt, pa) = lattice_laws(&tp);
    let (ut, ua) = lattice_laws(&tu);
    let mut add_bad = 0;
    for i in 0..200 {
        let n = 1 + i % 4;
        let p = [2u64, 3, 5][i % 3];
        let m = random_padic(&mut r, p, n);
        let vecs: Vec<Vec<Q>> = loop {
            let v: Vec<Vec<Q>> = (0..n).map(|_| (0..n).map(|_| q(r.gen_range(-3..=3))).collect()).collect();
            if Field::Rationals.rank(&v) == n {
                break v;
            }
        };
        let weights: Vec<Q> = (0..n).map(|_| q(r.gen_range(-3..=3))).collect();
        let f = FlagFiltration::from_weighted_basis(Field::Rationals, n, &vecs, &weights).unwrap();
        if m.pos(&m.add_filtration(&f).unwrap()).unwrap() != f.type_of() {
            add_bad += 1;
        }
    }
    let ok = pt + pa + ut + ua + add_bad == 0;
    (
        ok,
        format!(
            "triangle p-adic {} / u-adic {} failures, antisymmetry {} / {}, Pos(M, M+F) = t(F) failures {} of 200",
            pt, ut, pa, ua, add_bad
        ),
    )
}

// ---------------------------------------------------------------- criterion 3

/// Polynomials over F_2 as bit masks, truncated at `u^NU`.
const NU: u32 = 8;
const MASK: u32 = (1 << NU) - 1;

fn f2_mul(a: u32, b: u32) -> u32 {
    let mut out = 0;
    for i in 0..NU {
        if (b >> i) & 1 == 1 {
            out ^= a << i;
        }
    }
    out & MASK
}

/// `x(u) -> x(u^2)`
fn f2_frob(a: u32) -> u32 {
    let mut out = 0;
    for i in 0..NU {
        if (a >> i) & 1 == 1 {
            out |= 1 << (2 * i);
        }
    }
    out & MASK
}

fn f2_val(a: u32) -> Option<u32> {
    (a != 0).then(|| a.trailing_zeros())
}

fn f2_mul_full(a: u32, b: u32) -> u32 {
    let mut out = 0;
    for i in 0..16 {
        if (b >> i) & 1 == 1 {
            out ^= a << i;
        }
    }
    out
}

/// Stable lines of `P` modulo `u^8`: (chart, coordinate, v(lambda)).
fn oracle_lines(pm: [[u32; 2]; 2]) -> Vec<(usize, u32, u32)> {
    let mut out = Vec::new();
    for chart in 0..2 {
        let count = if chart == 0 { 1 << NU } else { 1 << (NU - 1) };
        for k in 0..count {
            let x = if chart == 0 { k } else { (k << 1) & MASK };
            let v = if chart == 0 { [1, x] } else { [x, 1] };
            let fv = [f2_frob(v[0]), f2_frob(v[1])];
            let w = [f2_mul(pm[0][0], fv[0]) ^ f2_mul(pm[0][1], fv[1]), f2_mul(pm[1][0], fv[0]) ^ f2_mul(pm[1][1], fv[1])];
            let lambda = w[chart];
            let other = 1 - chart;
            if w[other] ^ f2_mul(lambda, v[other]) == 0 {
                if let Some(s) = f2_val(lambda) {
                    out.push((chart, x, s));
                }
            }
        }
    }
    out
}

fn criterion_3() -> Outcome {
    let opts = SearchOptions { search_degree: 8, work_precision: 48 };
    let mut family = 0usize;
    let mut mismatches = Vec::new();
    let mut reorder_bad = 0usize;
    for code in 0..(1u32 << 12) {
        let pm = [[code & 7, (code >> 3) & 7], [(code >> 6) & 7, (code >> 9) & 7]];
        let det = f2_mul_full(pm[0][0], pm[1][1]) ^ f2_mul_full(pm[0][1], pm[1][0]);
        let Some(vdet) = (det != 0).then(|| det.trailing_zeros()) else { continue };
        if vdet > 3 {
            continue;
        }
        family += 1;
        let polys: Vec<Vec<QPoly>> = pm
            .iter()
            .map(|row| row.iter().map(|&m| QPoly::from_ints(&(0..3).map(|i| ((m >> i) & 1) as i64).collect::<Vec<_>>())).collect())
            .collect();
        let module = PtModule::from_qpolys(2, NU as usize, &polys, 0).unwrap();
        let cat = module.strict_subobjects(&opts).unwrap();
        let flag = hncore::hn_flag(&cat).unwrap();
        // oracle flag
        let lines = oracle_lines(pm);
        let deg = -(vdet as i64);
        let best = lines.iter().map(|l| -(l.2 as i64)).max();
        let oracle_polygon = match best {
            Some(d) if 2 * d > deg => TypeVector::from_ints(&[d, deg - d]),
            _ => TypeVector::new(vec![qr(deg, 2); 2]),
        };
        let mut ok = flag.polygon() == oracle_polygon;
        if let (Some(PtSub::Line(i)), Some(d)) = (flag.steps.first().filter(|_| flag.steps.len() == 2), best) {
            let l = &cat.lines[*i];
            let x = if l.piv == 0 { &l.v[1] } else { &l.v[0] };
            let bits: u32 = (0..4).fold(0, |acc, e| acc | ((x.coeff(e) as u32 & 1) << e));
            ok &= lines.iter().any(|&(c, y, s)| c == l.piv && (y & 15) == bits && -(s as i64) == d);
        }
        if !ok && mismatches.len() < 3 {
            mismatches.push(format!("{:?}", pm));
        }
        if !ok {
            mismatches.push(String::new());
        }
        // reordering the enumeration leaves the flag unchanged
        let e = cat.strict_subobjects().unwrap();
        let mut rev = e.subs.clone();
        rev.reverse();
        let flag2 = hncore::hn_flag_from(&cat, Enumeration { subs: rev, certificate: e.certificate.clone() }).unwrap();
        if flag2.steps != flag.steps || flag2.slopes != flag.slopes {
            reorder_bad += 1;
        }
    }
    let bad: Vec<&String> = mismatches.iter().filter(|s| !s.is_empty()).collect();
    let n_bad = mismatches.iter().filter(|s| s.is_empty()).count();
    (
        n_bad == 0 && reorder_bad == 0 && family > 0,
        format!("{} modules over F_2, {} oracle mismatches {:?}, {} reorder changes", family, n_bad, bad, reorder_bad),
    )
}

// ---------------------------------------------------------------- criterion 4

fn rand_poly(r: &mut ChaCha8Rng, deg: usize, amp: i64) -> QPoly {
    QPoly::new((0..=deg).map(|_| q(r.gen_range(-amp..=amp))).collect())
}

fn qmat_mul(a: &[Vec<QPoly>], b: &[Vec<QPoly>]) -> Vec<Vec<QPoly>> {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).fold(QPoly::zero(), |acc, k| &acc + &(&a[i][k] * &b[k][j]))).collect()).collect()
}

fn elementary(f: QPoly, upper: bool) -> Vec<Vec<QPoly>> {
    if upper {
        vec![vec![QPoly::one(), f], vec![QPoly::zero(), QPoly::one()]]
    } else {
        vec![vec![QPoly::one(), QPoly::zero()], vec![f, QPoly::one()]]
    }
}

fn diag_e(eis: &Eisenstein, a: u32, b: u32) -> Vec<Vec<QPoly>> {
    vec![vec![eis.poly().pow(a), QPoly::zero()], vec![QPoly::zero(), eis.poly().pow(b)]]
}

fn random_kisin(r: &mut ChaCha8Rng, eis: &Eisenstein) -> KisinModule {
    if r.gen_range(0..8) == 0 {
        let a = r.gen_range(0..=2);
        let unit = q(1 + eis.p() as i64 * r.gen_range(0..=2));
        return KisinModule::new(eis.clone(), vec![vec![eis.poly().pow(a).scale(&unit)]], 0).unwrap();
    }
    let (a, b) = (r.gen_range(0..=2), r.gen_range(0..=2));
    let u1 = elementary(rand_poly(r, 1, 2), r.gen_bool(0.5));
    let u2 = elementary(rand_poly(r, 1, 2), r.gen_bool(0.5));
    KisinModule::new(eis.clone(), qmat_mul(&qmat_mul(&u1, &diag_e(eis, a, b)), &u2), 0).unwrap()
}

fn criterion_4() -> Outcome {
    let opts = SearchOptions { search_degree: 8, work_precision: 48 };
    let mut r = rng(4);
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut errors = Vec::new();
    for (count, e) in [(100usize, 1u32), (50, 2)] {
        for i in 0..count {
            let p = [2u64, 3][i % 2];
            let eis = if e == 1 {
                Eisenstein::linear(p).unwrap()
            } else {
                Eisenstein::new(p, QPoly::from_ints(&[-(p as i64), 0, 1])).unwrap()
            };
            let m = random_kisin(&mut r, &eis);
            let res = (|| -> Result<bool> {
                let t4 = m.fargues_n(4, &opts)?;
                let t2 = m.fargues_n(2, &opts)?;
                let t1 = m.fargues_n(1, &opts)?;
                let hp = PolygonFunction::of_type(&m.mod_p_hodge_type()?).scale_y(&(Q::one() / q(e as i64)));
                let h = PolygonFunction::of_type(&m.hodge_type()?);
                let end = (q(m.rank() as i64), m.degree());
                let ends = [&t4, &t2, &t1, &hp, &h].iter().all(|t| t.endpoint() == end);
                Ok(ends && t4.le(&t2)? && t2.le(&t1)? && t1.le(&hp)? && hp.le(&h)?)
            })();
            checked += 1;
            match res {
                Ok(true) => {}
                Ok(false) => bad.push(m.to_string()),
                Err(err) => errors.push(format!("{}: {}", m, err)),
            }
        }
    }
    (
        bad.is_empty() && errors.is_empty(),
        format!("{} modules (E = u - p and u^2 - p), {} chain violations, {} errors {:?}", checked, bad.len(), errors.len(), errors.first()),
    )
}

// ---------------------------------------------------------------- criteria 5 and 6

fn polygon_gap_ok(lo: &PolygonFunction, hi: &PolygonFunction, slack: &Q, upto: &Q) -> bool {
    let mut xs: Vec<Q> = lo.points().iter().chain(hi.points()).map(|(x, _)| x.clone()).collect();
    xs.sort();
    xs.dedup();
    xs.iter().filter(|x| *x <= upto).all(|x| within(&lo.eval(x), &hi.eval(x), slack))
}

fn criterion_5() -> Outcome {
    let opts = ThetaOptions::default();
    let so = opts.search;
    let mut corpus = Vec::new();
    for (p, a21, d2) in [(2u64, 2i64, 3u32), (3, 3, 3), (2, 2, 2), (3, 9, 4), (2, 1, 3)] {
        let eis = Eisenstein::linear(p).unwrap();
        let e = eis.poly().clone();
        corpus.push(KisinModule::new(eis, vec![vec![e.clone(), QPoly::zero()], vec![QPoly::from_ints(&[a21]), e.pow(d2)]], 0).unwrap());
    }
    let eis = Eisenstein::linear(2).unwrap();
    corpus.push(KisinModule::new(eis.clone(), diag_e(&eis, 2, 0), 0).unwrap());
    let mut certified_non_hn = 0;
    let mut lines = Vec::new();
    let mut ok = true;
    for m in &corpus {
        let t1 = m.fargues_n(1, &so).unwrap();
        let t2 = m.fargues_n(2, &so).unwrap();
        if t2.le(&t1).unwrap() && t2 != t1 {
            certified_non_hn += 1;
        }
        let res = (|| -> Result<(bool, String)> {
            let d = m.hn_decompose(&opts)?;
            let mut good = d.iterations as u64 <= d.step_bound && d.witness.verified && d.module.is_hn_type(4, &so)?;
            for n in [1u32, 2, 4] {
                let slack = d.constant.clone() * q(ISOGENY_SLACK_FACTOR) / q(n as i64);
                let (a, b) = (d.module.fargues_n(n, &so)?, m.fargues_n(n, &so)?);
                good &= polygon_gap_ok(&a, &b, &slack, &q(m.rank() as i64));
            }
            Ok((good, format!("{} steps <= {}, C = {}", d.iterations, d.step_bound, d.constant)))
        })();
        match res {
            Ok((g, s)) => {
                ok &= g;
                lines.push(s);
            }
            Err(e) => {
                ok = false;
                lines.push(format!("{}: {}", m, e));
            }
        }
    }
    ok &= certified_non_hn > 0;
    (ok, format!("{} modules, {} certified non-HN-type; {}", corpus.len(), certified_non_hn, lines.join("; ")))
}

/// `deg` of the rank-one quotient `F_p[[u]] e` with `phi(e) = E^{-s} a e`, normalized.
fn rank_one_degree(m: &KisinModule, a: &QPoly) -> Q {
    let p = m.p() as i64;
    let v = a.coeffs().iter().position(|c| !(c.to_integer() % p).is_zero()).expect("unit mod p") as i64;
    q(m.shift()) - qr(v, m.e() as i64)
}

fn criterion_6() -> Outcome {
    let so = SearchOptions { search_degree: 8, work_precision: 48 };
    let mut r = rng(6);
    let mut modules = Vec::new();
    for (p, a21, d2) in [(2u64, 2i64, 3u32), (3, 3, 3), (2, 2, 2), (3, 9, 4), (2, 4, 2)] {
        let eis = Eisenstein::linear(p).unwrap();
        let e = eis.poly().clone();
        modules.push(KisinModule::new(eis, vec![vec![e.clone(), QPoly::zero()], vec![QPoly::from_ints(&[a21]), e.pow(d2)]], 0).unwrap());
    }
    for i in 0..30 {
        let p = [2u64, 3][i % 2];
        let eis = Eisenstein::linear(p).unwrap();
        let (a, b) = (r.gen_range(0..=3), r.gen_range(0..=3));
        let x = rand_poly(&mut r, 2, 2).scale(&q(p as i64));
        let u1 = elementary(x, true);
        let u2 = elementary(rand_poly(&mut r, 2, 2), false);
        modules.push(KisinModule::new(eis.clone(), qmat_mul(&qmat_mul(&u1, &diag_e(&eis, a, b)), &u2), 0).unwrap());
    }
    let mut checked = 0;
    let mut moved = 0;
    let mut bad = Vec::new();
    let mut worst = Q::zero();
    for m in &modules {
        for i in 0..2 {
            let Ok(sub) = m.scale_basis_vector(i) else { continue };
            checked += 1;
            // M' -> M has cokernel e_i mod M'; M -> M' (times p) has cokernel e_j mod pM
            let c1 = (rank_one_degree(m, &m.matrix()[i][i]) - sub.mu_min(&so).unwrap()).max(Q::zero());
            let c2 = (rank_one_degree(m, &m.matrix()[1 - i][1 - i]) - m.mu_min(&so).unwrap()).max(Q::zero());
            let mut changed = false;
            for n in [1u32, 2, 4] {
                let (t_sub, t_m) = (sub.fargues_n(n, &so).unwrap(), m.fargues_n(n, &so).unwrap());
                let nn = q(n as i64);
                let ok = polygon_gap_ok(&t_sub, &t_m, &(&c1 / &nn), &q(2)) && polygon_gap_ok(&t_m, &t_sub, &(&c2 / &nn), &q(2));
                let gap = t_sub.max_gap(&t_m).max(t_m.max_gap(&t_sub)) * &nn;
                changed |= !gap.is_zero();
                if gap > worst {
                    worst = gap;
                }
                if !ok {
                    bad.push(format!("{} scaling e_{} at n = {} (C = {}, {})", m, i, n, c1, c2));
                }
            }
            moved += changed as usize;
        }
    }
    (
        bad.is_empty() && checked >= 10 && moved > 0,
        format!("{} scalings ({} with a visible change), n in {{1, 2, 4}}, largest n * gap {}, failures {:?}", checked, moved, worst, bad.first()),
    )
}

// ---------------------------------------------------------------- criterion 7

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut bad = 0;
    for _ in 0..50 {
        let p = [2u64, 3, 5][r.gen_range(0..3)];
        let n = r.gen_range(1..=4);
        let exps: Vec<u32> = (0..n).map(|_| r.gen_range(0..=3)).collect();
        let b: Vec<Vec<Q>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { q(p.pow(exps[i]) as i64) } else { Q::zero() }).collect())
            .collect();
        let want = TypeVector::from_ints(&exps.iter().map(|&e| e as i64).collect::<Vec<_>>());
        if Isocrystal::new(p, b, 1).unwrap().newton_type() != want {
            bad += 1;
        }
    }
    let comp = Isocrystal::from_ints(3, &[&[0, 3], &[1, 0]]).unwrap();
    let half = comp.newton_type() == TypeVector::new(vec![qr(1, 2); 2]);
    let isos = [
        Isocrystal::from_ints(2, &[&[1, 0], &[0, 2]]).unwrap(),
        Isocrystal::from_ints(2, &[&[0, 2], &[1, 0]]).unwrap(),
        Isocrystal::from_ints(3, &[&[1, 1], &[0, 9]]).unwrap(),
        Isocrystal::from_ints(2, &[&[2, 1], &[0, 4]]).unwrap(),
        Isocrystal::from_ints(3, &[&[0, 1], &[3, 3]]).unwrap(),
        Isocrystal::from_ints(2, &[&[1, 0], &[0, 1]]).unwrap(),
    ];
    let mut lattices = 0;
    let mut mazur_bad = 0;
    for iso in &isos {
        for y in window_lattices(iso.p(), 2, 2).unwrap() {
            lattices += 1;
            if !iso.mazur_check(&y).unwrap() {
                mazur_bad += 1;
            }
        }
    }
    let mu = |v: &[i64]| TypeVector::from_ints(v);
    let instances: Vec<(Isocrystal, TypeVector)> = vec![
        (isos[0].clone(), mu(&[0, -1])),
        (isos[0].clone(), mu(&[1, -2])),
        (isos[0].clone(), mu(&[0, 0])),
        (isos[1].clone(), mu(&[0, -1])),
        (isos[1].clone(), mu(&[1, -2])),
        (isos[2].clone(), mu(&[0, -2])),
        (isos[2].clone(), mu(&[-1, -1])),
        (isos[5].clone(), mu(&[0, 0])),
    ];
    let mut agree = 0;
    for (iso, m) in &instances {
        if iso.gashi_criterion(m).unwrap() == !iso.lattice_set(m, 2).unwrap().is_empty() {
            agree += 1;
        }
    }
    // scalar Frobenius with a non-central mu: only informational, see the notes in the README
    let id = &isos[5];
    let scalar_note = format!(
        "identity with mu = (1, -1): criterion {}, window {}",
        id.gashi_criterion(&mu(&[1, -1])).unwrap(),
        if id.lattice_set(&mu(&[1, -1]), 2).unwrap().is_empty() { "empty" } else { "nonempty" }
    );
    (
        bad == 0 && half && mazur_bad == 0 && agree == instances.len() && instances.len() >= 5,
        format!(
            "50 diagonal Newton types ({} wrong), companion half-slopes {}, Mazur on {} window lattices over {} isocrystals ({} exceptions), Gashi verdicts {}/{} agree; informational: {}",
            bad,
            half,
            lattices,
            isos.len(),
            mazur_bad,
            agree,
            instances.len(),
            scalar_note
        ),
    )
}

// ---------------------------------------------------------------- criterion 8

fn criterion_8() -> Outcome {
    let mut checked = 0;
    let mut bad = 0;
    for p in [2u64, 3] {
        let d = Isocrystal::from_ints(p, &[&[1, 0], &[0, p as i64]]).unwrap();
        for y in d.lattice_set(&TypeVector::from_ints(&[0, -1]), 2).unwrap() {
            checked += 1;
            let by = d.frobenius_translate(&y, 1).unwrap();
            let b2y = d.frobenius_translate(&y, 2).unwrap();
            let once = d.phi_cris(&y, 1).unwrap();
            let twice = d.phi_cris(&once, 1).unwrap();
            if !once.same_as(&by).unwrap() || !twice.same_as(&b2y).unwrap() || !d.phi_cris(&y, 2).unwrap().same_as(&b2y).unwrap() {
                bad += 1;
            }
        }
    }
    (bad == 0 && checked > 0, format!("{} lattices of type (0, -1) in the B = 2 window, {} mismatches with b y and b^2 y", checked, bad))
}

// ---------------------------------------------------------------- criterion 9

fn criterion_9() -> Outcome {
    let d = Isocrystal::from_ints(2, &[&[1, 0], &[0, 2]]).unwrap();
    let verdict = |v: Vec<Q>| {
        let fi = FilteredIsocrystal::with_line(d.clone(), v, 1, 0).unwrap();
        fi.is_weakly_admissible().unwrap()
    };
    let (a, ca) = verdict(unit(2, 0));
    let (b, cb) = verdict(vec![q(1), q(1)]);
    let (c, cc) = verdict(unit(2, 1));
    let exhaustive = ca.is_exhaustive() && cb.is_exhaustive() && cc.is_exhaustive();
    let fi = FilteredIsocrystal::with_line(d.clone(), vec![q(1), q(1)], 1, 0).unwrap();
    let (flag, t) = fi.fargues().unwrap();
    let opposed = d.opposed_newton_filtration().unwrap();
    let flag_ok = flag.steps.len() == 2 && flag.steps[0] == opposed.steps()[0] && t == TypeVector::from_ints(&[0, -1]);
    let refused = matches!(
        FilteredIsocrystal::with_line(d, unit(2, 0), 1, 0).unwrap().fargues(),
        Err(Error::NotWeaklyAdmissible)
    );
    (
        !a && b && c && exhaustive && flag_ok && refused,
        format!("wa on <e1> / generic / <e2>: {} / {} / {}, exhaustive {}, Fargues flag <e1> with slopes {}: {}", a, b, c, exhaustive, t, flag_ok),
    )
}

// ---------------------------------------------------------------- criterion 10

fn criterion_10() -> Outcome {
    let mut bad = 0;
    for n in 1..=4usize {
        for i0 in 0..n {
            let s = GaloisSet::cyclic(n, i0).unwrap();
            let nu = tori::newton_cochar(&s).unwrap();
            // oracle: Haar average of the indicator is 1/n everywhere
            if nu.values != vec![qr(1, n as i64); n] || !nu.is_invariant() {
                bad += 1;
            }
            let stable: Vec<CharacterFunction> = (0..n).map(|i| s.delta(i)).collect();
            if !tori::is_ordinary_abelian(&stable).unwrap() {
                bad += 1;
            }
        }
    }
    let mut r = rng(10);
    let mut deg_bad = 0;
    for _ in 0..200 {
        let n = r.gen_range(1..=4);
        let s = GaloisSet::cyclic(n, r.gen_range(0..n)).unwrap();
        let k = r.gen_range(1..=4);
        let x: Vec<CharacterFunction> =
            (0..k).map(|_| s.int_function(&(0..n).map(|_| r.gen_range(-3..=3)).collect::<Vec<_>>()).unwrap()).collect();
        let h = tori::push_to_weights(&x, Weights::Hodge).unwrap();
        let nw = tori::push_to_weights(&x, Weights::Newton).unwrap();
        let at0: Q = x.iter().map(|f| f.at(s.iota0()).clone()).sum();
        let avg: Q = x.iter().flat_map(|f| f.values.iter()).sum::<Q>() / q(n as i64);
        if h.degree() != at0 || nw.degree() != avg {
            deg_bad += 1;
        }
        // a Galois-stable family: all translates of one character
        let g = &s.generators()[0];
        let mut fam = vec![x[0].clone()];
        for _ in 1..n {
            let next = fam.last().unwrap().act(g);
            fam.push(next);
        }
        let (hf, nf) = (tori::push_to_weights(&fam, Weights::Hodge).unwrap(), tori::push_to_weights(&fam, Weights::Newton).unwrap());
        if hf.degree() != nf.degree() {
            deg_bad += 1;
        }
    }
    (bad + deg_bad == 0, format!("cyclic sizes 1..4: {} failures of nu = average and stable-family ordinarity, {} degree identity failures", bad, deg_bad))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("type algebra laws", criterion_1),
        ("lattice metric", criterion_2),
        ("HN engine against brute force", criterion_3),
        ("polygon chain", criterion_4),
        ("theta-algorithm", criterion_5),
        ("isogeny stability", criterion_6),
        ("Newton and Mazur", criterion_7),
        ("ordinary Frobenius comparison", criterion_8),
        ("weak admissibility", criterion_9),
        ("abelian ordinarity", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = f();
        println!("criterion {:>2} {} [{}]: {}", i + 1, if ok { "PASS" } else { "FAIL" }, name, detail);
        if !ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {:?}", failed);
}
