//! Dispatch of validated documents to kernel operations.

use serde_json::Value;
use slopeforge::arith::dvr::{PAdic, UAdic};
use slopeforge::arith::rational::fmt_q;
use slopeforge::filtrations::Field;
use slopeforge::isocrystal::WittLattice;
use slopeforge::phimod::PtSub;
use slopeforge::tori::{self, Weights};
use slopeforge::{
    Certificate, DvrLattice, Eisenstein, FilteredIsocrystal, FlagFiltration, GaloisSet, Isocrystal, KisinModule,
    PolygonFunction, PtModule, QPoly, SearchOptions, ThetaOptions, TorsionKisinModule, TypeVector, Q,
};

use crate::doc::{self, field, field_path, input, CliError, CliResult, Document, RingKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KisinOp {
    Polygon(u32),
    Limit,
    Theta,
    Decompose,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Types,
    Pos,
    Hn,
    Kisin(KisinOp),
    Newton,
    Mazur,
    Xmu,
    Wa,
    Phicris,
    Abelian,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Types => "types",
            Command::Pos => "pos",
            Command::Hn => "hn",
            Command::Kisin(KisinOp::Polygon(_)) => "kisin polygon",
            Command::Kisin(KisinOp::Limit) => "kisin limit",
            Command::Kisin(KisinOp::Theta) => "kisin theta",
            Command::Kisin(KisinOp::Decompose) => "kisin decompose",
            Command::Newton => "newton",
            Command::Mazur => "mazur",
            Command::Xmu => "xmu",
            Command::Wa => "wa",
            Command::Phicris => "phicris",
            Command::Abelian => "abelian",
        }
    }

    fn object_kinds(&self) -> &'static [&'static str] {
        match self {
            Command::Types => &["types"],
            Command::Pos => &["lattice_pair"],
            Command::Hn => &["phimodule", "kisin"],
            Command::Kisin(_) => &["kisin", "phimodule"],
            Command::Newton | Command::Mazur | Command::Xmu | Command::Phicris => &["isocrystal"],
            Command::Wa => &["filtered"],
            Command::Abelian => &["abelian"],
        }
    }
}

/// Flag values override document options.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub n_max: Option<u32>,
    pub search_degree: Option<usize>,
    pub bound: Option<u32>,
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub fields: Vec<(String, String)>,
    pub polygons: Vec<(String, PolygonFunction)>,
    pub precision: String,
    pub search_bounds: String,
    pub certificate: Certificate,
}

impl Report {
    fn new(command: Command) -> Self {
        Report {
            command: command.name().to_string(),
            fields: Vec::new(),
            polygons: Vec::new(),
            precision: "exact".into(),
            search_bounds: "none".into(),
            certificate: Certificate::Exhaustive,
        }
    }

    fn field(&mut self, k: &str, v: impl ToString) {
        self.fields.push((k.to_string(), v.to_string()));
    }

    fn polygon(&mut self, name: &str, f: PolygonFunction) {
        self.polygons.push((name.to_string(), f));
    }
}

struct Params {
    n_max: u32,
    search_degree: usize,
    bound: u32,
}

fn params(d: &Document, o: &Overrides) -> Params {
    Params {
        n_max: o.n_max.or(d.options.n_max).unwrap_or(4).max(1),
        search_degree: o.search_degree.or(d.options.search_degree).unwrap_or(8),
        bound: o.bound.or(d.options.bounds).unwrap_or(1),
    }
}

fn kernel(e: slopeforge::Error) -> CliError {
    CliError::Kernel(e)
}

fn yes_no(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Validate, build and run one document.
pub fn run(cmd: Command, d: &Document, o: &Overrides) -> CliResult<Report> {
    if !cmd.object_kinds().contains(&d.kind.as_str()) {
        return Err(CliError::Schema {
            path: "object.kind".into(),
            expected: format!("{} for `{}`", cmd.object_kinds().join(" or "), cmd.name()),
        });
    }
    let pr = params(d, o);
    match cmd {
        Command::Types => run_types(d),
        Command::Pos => run_pos(d),
        Command::Hn => run_hn(d, &pr),
        Command::Kisin(op) => run_kisin(d, op, &pr),
        Command::Newton | Command::Mazur | Command::Xmu | Command::Phicris => run_isocrystal(cmd, d, &pr),
        Command::Wa => run_wa(d),
        Command::Abelian => run_abelian(d),
    }
}

fn run_types(d: &Document) -> CliResult<Report> {
    let a = doc::type_vector(field(&d.payload, "a")?, &field_path("a"))?;
    let mut r = Report::new(Command::Types);
    r.field("type", &a);
    r.field("degree", fmt_q(&a.degree()));
    r.field("involution", a.involution());
    r.field("norm_sq", fmt_q(&a.norm_sq()));
    r.polygon("a", a.polygon());
    if let Some(bv) = d.payload.get("b") {
        let b = doc::type_vector(bv, &field_path("b"))?;
        r.field("b", &b);
        r.field("tensor", a.tensor(&b));
        r.field("direct_sum", a.concat(&b));
        match (a.add(&b), a.dominance_le(&b)) {
            (Ok(s), Ok(le)) => {
                r.field("sum", s);
                r.field("a <= b", yes_no(le));
            }
            _ => r.field("sum", "undefined (ranks differ)"),
        }
        r.polygon("b", b.polygon());
    }
    if let Some(kv) = d.payload.get("k") {
        let k = doc::as_u64(kv, &field_path("k"))? as usize;
        r.field("ext_power", a.ext_power(k));
        r.field("sym_power", a.sym_power(k));
    }
    Ok(r)
}

fn ring_prec(d: &Document) -> i64 {
    d.ring.u_precision as i64
}

fn run_pos(d: &Document) -> CliResult<Report> {
    let p = d.ring.p;
    let mut r = Report::new(Command::Pos);
    let (t, nu, dist, filt) = match d.ring.kind {
        RingKind::Padic | RingKind::RationalPoly => {
            let m = |key: &str| -> CliResult<DvrLattice<PAdic>> {
                let rows = doc::matrix(field(&d.payload, key)?, &field_path(key), |x, path| doc::constant(x, path, p))?;
                DvrLattice::new(PAdic { p }, rows).map_err(input)
            };
            let (m1, m2) = (m("m1")?, m("m2")?);
            let t = m1.pos(&m2).map_err(kernel)?;
            let f = m1.pair_filtration(&m2).map_err(kernel)?;
            (t, m1.nu(&m2).map_err(kernel)?, m1.dist_sq(&m2).map_err(kernel)?, f)
        }
        RingKind::FpSeries | RingKind::Uadic | RingKind::ZpnSeries => {
            if d.ring.kind == RingKind::ZpnSeries && d.ring.n != 1 {
                return Err(CliError::Schema { path: "ring.n".into(), expected: "1 for lattices over F_p[[u]]".into() });
            }
            let ctx = UAdic { p, prec: ring_prec(d) };
            r.precision = format!("u-adic {}", ring_prec(d));
            let m = |key: &str| -> CliResult<DvrLattice<UAdic>> {
                let rows = doc::matrix(field(&d.payload, key)?, &field_path(key), |x, path| doc::laurent(x, path, p, 1))?;
                DvrLattice::new(ctx.clone(), rows).map_err(input)
            };
            let (m1, m2) = (m("m1")?, m("m2")?);
            let t = m1.pos(&m2).map_err(kernel)?;
            let f = m1.pair_filtration(&m2).map_err(kernel)?;
            (t, m1.nu(&m2).map_err(kernel)?, m1.dist_sq(&m2).map_err(kernel)?, f)
        }
    };
    r.field("pos", &t);
    r.field("nu", fmt_q(&nu));
    r.field("dist_sq", fmt_q(&dist));
    r.field("pair_filtration_type", filt.type_of());
    r.polygon("pos", t.polygon());
    Ok(r)
}

fn poly_matrix(d: &Document) -> CliResult<(Vec<Vec<QPoly>>, i64)> {
    let p = d.ring.p;
    let a = doc::matrix(field(&d.payload, "matrix")?, &field_path("matrix"), |x, path| doc::poly(x, path, p))?;
    let shift = match d.payload.get("shift") {
        None | Some(Value::Null) => 0,
        Some(v) => doc::as_i64(v, &field_path("shift"))?,
    };
    Ok((a, shift))
}

fn eisenstein(d: &Document) -> CliResult<Eisenstein> {
    match &d.eisenstein {
        None => Eisenstein::linear(d.ring.p).map_err(input),
        Some(c) => Eisenstein::new(d.ring.p, QPoly::new(c.clone())).map_err(|e| CliError::Schema {
            path: "eisenstein".into(),
            expected: format!("an Eisenstein polynomial at {} ({})", d.ring.p, e),
        }),
    }
}

fn search(pr: &Params) -> SearchOptions {
    SearchOptions { search_degree: pr.search_degree, work_precision: 128.max(8 * pr.search_degree as i64) }
}

fn search_bounds(pr: &Params) -> String {
    format!("search degree {}", pr.search_degree)
}

fn flag_step(cat: &slopeforge::phimod::PtCategory, s: &PtSub) -> String {
    let gens = cat.generators(s);
    let cols: Vec<String> = gens
        .iter()
        .map(|v| format!("[{}]", v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
        .collect();
    cols.join(" ")
}

fn run_hn(d: &Document, pr: &Params) -> CliResult<Report> {
    let (a, shift) = poly_matrix(d)?;
    let p = d.ring.p;
    let opts = search(pr);
    let mut r = Report::new(Command::Hn);
    r.search_bounds = search_bounds(pr);
    let torsion = d.ring.n > 1 || d.kind == "kisin";
    if !torsion {
        let m = PtModule::from_qpolys(p, d.ring.u_precision, &a, shift).map_err(input)?;
        r.precision = format!("u-adic {}", d.ring.u_precision);
        let th = m.hodge_type().map_err(kernel)?;
        let cat = m.strict_subobjects(&opts).map_err(kernel)?;
        let (flag, tf) = m.fargues(&opts).map_err(kernel)?;
        r.field("rank", m.rank());
        r.field("degree", fmt_q(&m.degree()));
        r.field("t_H", &th);
        r.field("t_F1", &tf);
        r.field("semistable", yes_no(flag.is_semistable()));
        r.field("slopes", join_q(&flag.slopes));
        for (i, s) in flag.steps.iter().enumerate() {
            r.field(&format!("flag[{}]", i + 1), flag_step(&cat, s));
        }
        r.certificate = flag.certificate.clone();
        r.polygon("t_H", th.polygon());
        r.polygon("t_F1", tf.polygon());
    } else {
        let e = eisenstein(d)?.e();
        let n = d.ring.n;
        let m = TorsionKisinModule::from_qpolys(p, n, e, &a, shift * e as i64).map_err(input)?;
        r.precision = format!("p^{} torsion, u-adic {}", n, d.ring.u_precision);
        let (flag, tf) = m.fargues(&opts).map_err(kernel)?;
        r.field("rank", m.rank());
        r.field("level", n);
        r.field("degree", fmt_q(&m.degree()));
        r.field("t_F", &tf);
        r.field("semistable", yes_no(flag.is_semistable()));
        r.field("slopes", join_q(&flag.slopes));
        r.certificate = flag.certificate.clone();
        r.polygon("t_F", tf.polygon());
    }
    Ok(r)
}

fn join_q(v: &[Q]) -> String {
    v.iter().map(fmt_q).collect::<Vec<_>>().join(", ")
}

fn run_kisin(d: &Document, op: KisinOp, pr: &Params) -> CliResult<Report> {
    let (a, shift) = poly_matrix(d)?;
    let m = KisinModule::new(eisenstein(d)?, a, shift).map_err(input)?;
    let opts = search(pr);
    let mut r = Report::new(Command::Kisin(op));
    r.search_bounds = search_bounds(pr);
    r.precision = "exact over Z_p[u]".into();
    let th = m.hodge_type().map_err(kernel)?;
    r.field("rank", m.rank());
    r.field("e", m.e());
    r.field("degree", fmt_q(&m.degree()));
    r.field("t_H", &th);
    r.polygon("t_H", th.polygon());
    match op {
        KisinOp::Polygon(n) => {
            let t1 = m.fargues_n(1, &opts).map_err(kernel)?;
            r.field("t_F1", &t1);
            r.polygon("t_F1", t1);
            if n > 1 {
                let tn = m.fargues_n(n, &opts).map_err(kernel)?;
                r.field(&format!("t_F{}", n), &tn);
                r.polygon(&format!("t_F{}", n), tn);
            }
            let (_, c) = m.is_semistable(&opts).map_err(kernel)?;
            r.certificate = c;
        }
        KisinOp::Limit => {
            let n_max = pr.n_max;
            let tower = m.fargues_tower(n_max, &opts).map_err(kernel)?;
            for (n, t) in &tower {
                r.field(&format!("t_F{}", n), t);
            }
            let lim = m.fargues_limit(n_max, &opts).map_err(kernel)?;
            r.field("t_F", &lim);
            r.field("hn_type", yes_no(tower.iter().all(|(_, t)| t == &tower[0].1)));
            r.field("mu_min", fmt_q(&m.mu_min(&opts).map_err(kernel)?));
            let first = tower[0].1.clone();
            let (last_n, last) = tower.last().cloned().unwrap();
            r.polygon("t_F1", first);
            if last_n > 1 {
                r.polygon(&format!("t_F{}", last_n), last);
            }
            r.search_bounds = format!("{}, levels up to {}", search_bounds(pr), n_max);
            let (_, c) = m.is_semistable(&opts).map_err(kernel)?;
            r.certificate = c;
        }
        KisinOp::Theta => {
            let step = m.theta_step(&ThetaOptions { search: opts, ..ThetaOptions::default() }).map_err(kernel)?;
            r.field("split", yes_no(step.split));
            r.field("quotient_type", &step.quotient_type);
            r.field("theta_prime", &step.prime);
            if let Some(t) = &step.theta {
                r.field("theta", t);
            }
            if let Some(k) = &step.kernel {
                r.field("kernel", k);
            }
            r.field("witness_verified", yes_no(step.witness.verified));
            r.precision = format!("witness {}", step.witness.precision());
            r.certificate = step.certificate.clone();
        }
        KisinOp::Decompose => {
            let h = m.hn_decompose(&ThetaOptions { search: opts, ..ThetaOptions::default() }).map_err(kernel)?;
            r.field("module", &h.module);
            r.field("ranks", h.ranks.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", "));
            r.field("slopes", join_q(&h.slopes));
            r.field("iterations", h.iterations);
            r.field("step_bound", h.step_bound);
            r.field("isogeny_constant", fmt_q(&h.constant));
            r.field("witness_verified", yes_no(h.witness.verified));
            r.precision = format!("witness {}", h.witness.precision());
            r.certificate = h.certificate.clone();
            r.polygon("t_F", slopes_polygon(&h.ranks, &h.slopes));
        }
    }
    Ok(r)
}

/// The concave polygon with the given cumulative ranks and slopes.
fn slopes_polygon(ranks: &[usize], slopes: &[Q]) -> PolygonFunction {
    let mut v = Vec::new();
    let mut prev = 0;
    for (s, &k) in slopes.iter().zip(ranks) {
        for _ in prev..k {
            v.push(s.clone());
        }
        prev = k;
    }
    TypeVector::new(v).polygon()
}

fn rational_matrix(d: &Document, key: &str) -> CliResult<Vec<Vec<Q>>> {
    let p = d.ring.p;
    doc::matrix(field(&d.payload, key)?, &field_path(key), |x, path| doc::constant(x, path, p))
}

fn isocrystal(d: &Document) -> CliResult<Isocrystal> {
    let b = rational_matrix(d, "matrix")?;
    let s = match d.payload.get("s") {
        None | Some(Value::Null) => 1,
        Some(v) => doc::as_u64(v, &field_path("s"))? as u32,
    };
    Isocrystal::new(d.ring.p, b, s).map_err(input)
}

fn lattice(d: &Document, iso: &Isocrystal) -> CliResult<WittLattice> {
    match d.payload.get("lattice") {
        None | Some(Value::Null) => Ok(iso.standard_lattice()),
        Some(_) => iso.lattice(rational_matrix(d, "lattice")?).map_err(input),
    }
}

fn run_isocrystal(cmd: Command, d: &Document, pr: &Params) -> CliResult<Report> {
    let iso = isocrystal(d)?;
    let mut r = Report::new(cmd);
    let tn = iso.newton_type();
    r.field("newton_type", &tn);
    r.field("kottwitz", iso.kottwitz_point());
    r.polygon("t_N", tn.polygon());
    match cmd {
        Command::Newton => {}
        Command::Mazur => {
            let y = lattice(d, &iso)?;
            let th = iso.lattice_hodge_type(&y).map_err(kernel)?;
            r.field("t_H", &th);
            r.field("mazur", yes_no(iso.mazur_check(&y).map_err(kernel)?));
            r.polygon("t_H", th.polygon());
        }
        Command::Xmu => {
            let mu = doc::type_vector(field(&d.payload, "mu")?, &field_path("mu"))?;
            if mu.len() != iso.rank() {
                return Err(CliError::Schema { path: field_path("mu"), expected: format!("a type of length {}", iso.rank()) });
            }
            let set = iso.lattice_set(&mu, pr.bound).map_err(kernel)?;
            r.field("mu", &mu);
            r.field("lattices", set.len());
            r.field("gashi", yes_no(iso.gashi_criterion(&mu).map_err(kernel)?));
            r.field("mu_ordinary", yes_no(iso.is_mu_ordinary(&mu, pr.bound).map_err(kernel)?));
            r.search_bounds = format!("lattices with p-adic exponents in [-{0}, {0}]", pr.bound);
            r.certificate = Certificate::Bounded(format!("exponent bound {}", pr.bound));
            r.polygon("mu", mu.polygon());
        }
        Command::Phicris => {
            let y = lattice(d, &iso)?;
            let s = match d.payload.get("translate") {
                None | Some(Value::Null) => 1,
                Some(v) => doc::as_u64(v, &field_path("translate"))? as u32,
            };
            let z = iso.phi_cris(&y, s).map_err(kernel)?;
            r.field("phi_cris", basis_string(z.basis()));
            let th = iso.lattice_hodge_type(&z).map_err(kernel)?;
            r.field("t_H", &th);
            r.polygon("t_H", th.polygon());
        }
        _ => unreachable!(),
    }
    Ok(r)
}

fn basis_string(b: &[Vec<Q>]) -> String {
    let rows: Vec<String> = b.iter().map(|row| format!("[{}]", join_q(row))).collect();
    format!("[{}]", rows.join(", "))
}

fn run_wa(d: &Document) -> CliResult<Report> {
    let iso = isocrystal(d)?;
    let r0 = iso.rank();
    let flag = field(&d.payload, "flag")?;
    let fp = field_path("flag");
    let basis_v = flag.get("basis").ok_or_else(|| CliError::Schema { path: format!("{}.basis", fp), expected: "a list of vectors".into() })?;
    let weights_v = flag.get("weights").ok_or_else(|| CliError::Schema { path: format!("{}.weights", fp), expected: "a list of weights".into() })?;
    let p = d.ring.p;
    let basis = doc::vector(basis_v, &format!("{}.basis", fp), |row, path| doc::vector(row, path, |x, q| doc::constant(x, q, p)))?;
    let weights = doc::vector(weights_v, &format!("{}.weights", fp), doc::rational)?;
    let f = FlagFiltration::from_weighted_basis(Field::Rationals, r0, &basis, &weights).map_err(input)?;
    let fi = FilteredIsocrystal::new(iso, f).map_err(input)?;
    let mut r = Report::new(Command::Wa);
    let (th, tn) = (fi.hodge_type(), fi.newton_type());
    r.field("t_H", &th);
    r.field("t_N", &tn);
    r.field("deg", fmt_q(&fi.deg()));
    let (wa, cert) = fi.is_weakly_admissible().map_err(kernel)?;
    r.field("weakly_admissible", yes_no(wa));
    r.certificate = cert;
    r.polygon("t_H", th.polygon());
    r.polygon("t_N", tn.polygon());
    if wa {
        let (flag, tf) = fi.fargues().map_err(kernel)?;
        r.field("t_F", &tf);
        r.field("slopes", join_q(&flag.slopes));
        r.certificate = r.certificate.and(&flag.certificate);
        r.polygon("t_F", tf.polygon());
    }
    Ok(r)
}

fn run_abelian(d: &Document) -> CliResult<Report> {
    let size = doc::as_u64(field(&d.payload, "size")?, &field_path("size"))? as usize;
    let iota0 = doc::as_u64(field(&d.payload, "iota0")?, &field_path("iota0"))? as usize;
    let s = match d.payload.get("generators") {
        None | Some(Value::Null) => GaloisSet::cyclic(size, iota0),
        Some(g) => {
            let gens = doc::vector(g, &field_path("generators"), |row, path| {
                doc::vector(row, path, |x, q| doc::as_u64(x, q).map(|v| v as usize))
            })?;
            GaloisSet::new(size, gens, iota0)
        }
    }
    .map_err(input)?;
    let weights = doc::vector(field(&d.payload, "weights")?, &field_path("weights"), |row, path| {
        let v = doc::vector(row, path, doc::rational)?;
        if v.len() != size {
            return Err(CliError::Schema { path: path.to_string(), expected: format!("{} values", size) });
        }
        Ok(v)
    })?;
    let x = weights.into_iter().map(|v| s.function(v)).collect::<Result<Vec<_>, _>>().map_err(input)?;
    let mut r = Report::new(Command::Abelian);
    let th = tori::push_to_weights(&x, Weights::Hodge).map_err(kernel)?;
    let tn = tori::push_to_weights(&x, Weights::Newton).map_err(kernel)?;
    r.field("t_H", &th);
    r.field("t_N", &tn);
    r.field("nu", join_q(&tori::newton_cochar(&s).map_err(kernel)?.values));
    r.field("ordinary", yes_no(tori::is_ordinary_abelian(&x).map_err(kernel)?));
    r.polygon("t_H", th.polygon());
    r.polygon("t_N", tn.polygon());
    Ok(r)
}
