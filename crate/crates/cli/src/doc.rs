//! Input documents: schema validation and literal parsing into typed objects.

use std::fmt;

use serde_json::Value;
use slopeforge::arith::literal::{parse_laurent, LaurentPoly};
use slopeforge::arith::rational::{is_prime, reduce_mod};
use slopeforge::{Error as KernelError, Laurent, QPoly, Q, TypeVector};

#[derive(Debug)]
pub enum CliError {
    Schema { path: String, expected: String },
    Parse { path: String, column: usize, message: String },
    Input(String),
    Kernel(KernelError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Kernel(_) => 2,
            _ => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Schema { path, expected } => write!(f, "schema error at {}: expected {}", path, expected),
            CliError::Parse { path, column, message } => {
                write!(f, "parse error at {}, column {}: {}", path, column, message)
            }
            CliError::Input(s) => write!(f, "input error: {}", s),
            CliError::Kernel(e) => write!(f, "kernel error: {}", e),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn schema(path: &str, expected: &str) -> CliError {
    CliError::Schema { path: path.to_string(), expected: expected.to_string() }
}

/// Constructor failures while building objects are input errors.
pub fn input(e: KernelError) -> CliError {
    match e {
        KernelError::Parse { column, message } => CliError::Parse { path: String::new(), column, message },
        other => CliError::Input(other.to_string()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingKind {
    FpSeries,
    ZpnSeries,
    RationalPoly,
    Padic,
    Uadic,
}

#[derive(Clone, Debug)]
pub struct Ring {
    pub kind: RingKind,
    pub p: u64,
    pub n: u32,
    pub u_precision: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Options {
    pub bounds: Option<u32>,
    pub n_max: Option<u32>,
    pub search_degree: Option<usize>,
}

#[derive(Clone, Debug)]
pub struct Document {
    pub ring: Ring,
    pub eisenstein: Option<Vec<Q>>,
    pub kind: String,
    pub payload: Value,
    pub options: Options,
}

pub const OBJECT_KINDS: [&str; 7] = ["types", "lattice_pair", "phimodule", "kisin", "isocrystal", "filtered", "abelian"];

fn get<'a>(v: &'a Value, key: &str, path: &str) -> CliResult<&'a Value> {
    v.get(key).ok_or_else(|| schema(&join(path, key), "a value"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{}.{}", path, key)
    }
}

pub fn as_u64(v: &Value, path: &str) -> CliResult<u64> {
    v.as_u64().ok_or_else(|| schema(path, "a nonnegative integer"))
}

pub fn as_i64(v: &Value, path: &str) -> CliResult<i64> {
    v.as_i64().ok_or_else(|| schema(path, "an integer"))
}

pub fn as_str<'a>(v: &'a Value, path: &str) -> CliResult<&'a str> {
    v.as_str().ok_or_else(|| schema(path, "a string"))
}

pub fn as_array<'a>(v: &'a Value, path: &str) -> CliResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| schema(path, "an array"))
}

fn opt_u64(v: &Value, key: &str, path: &str) -> CliResult<Option<u64>> {
    match v.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(x) => as_u64(x, &join(path, key)).map(Some),
    }
}

pub fn parse_document(v: &Value) -> CliResult<Document> {
    if !v.is_object() {
        return Err(schema("", "a JSON object with ring and object"));
    }
    let r = get(v, "ring", "")?;
    let kind = match as_str(get(r, "kind", "ring")?, "ring.kind")? {
        "fp_series" => RingKind::FpSeries,
        "zpn_series" => RingKind::ZpnSeries,
        "rational_poly" => RingKind::RationalPoly,
        "padic" => RingKind::Padic,
        "uadic" => RingKind::Uadic,
        _ => return Err(schema("ring.kind", "one of fp_series, zpn_series, rational_poly, padic, uadic")),
    };
    let p = as_u64(get(r, "p", "ring")?, "ring.p")?;
    if !is_prime(p) {
        return Err(schema("ring.p", "a prime"));
    }
    let n = opt_u64(r, "n", "ring")?.unwrap_or(1);
    if n == 0 || n > 30 {
        return Err(schema("ring.n", "an integer between 1 and 30"));
    }
    let u_precision = opt_u64(r, "u_precision", "ring")?.unwrap_or(8) as usize;
    if u_precision == 0 {
        return Err(schema("ring.u_precision", "a positive integer"));
    }
    let ring = Ring { kind, p, n: n as u32, u_precision };
    let eisenstein = match v.get("eisenstein") {
        None | Some(Value::Null) => None,
        Some(e) => {
            let arr = as_array(e, "eisenstein")?;
            let mut c = Vec::new();
            for (i, x) in arr.iter().enumerate() {
                c.push(rational(x, &format!("eisenstein[{}]", i))?);
            }
            Some(c)
        }
    };
    let o = get(v, "object", "")?;
    let okind = as_str(get(o, "kind", "object")?, "object.kind")?;
    if !OBJECT_KINDS.contains(&okind) {
        return Err(schema("object.kind", &format!("one of {}", OBJECT_KINDS.join(", "))));
    }
    let payload = get(o, "payload", "object")?.clone();
    let mut options = Options::default();
    if let Some(op) = v.get("options") {
        if !op.is_object() {
            return Err(schema("options", "an object"));
        }
        options.bounds = opt_u64(op, "bounds", "options")?.map(|x| x as u32);
        options.n_max = opt_u64(op, "n_max", "options")?.map(|x| x as u32);
        options.search_degree = opt_u64(op, "search_degree", "options")?.map(|x| x as usize);
    }
    Ok(Document { ring, eisenstein, kind: okind.to_string(), payload, options })
}

/// A literal from a JSON string or number; `p` stands for the ring prime
/// when one is given.
pub fn literal(v: &Value, path: &str, p: Option<u64>) -> CliResult<LaurentPoly> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_i64() => n.to_string(),
        _ => return Err(schema(path, "a literal string or integer")),
    };
    // expanded text, and for each of its characters the column it came from
    let mut expanded = String::new();
    let mut origin = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut prev: Option<char> = None;
    let mut i = 0;
    while i < chars.len() {
        let ch = chars[i];
        match (ch, p) {
            ('p', Some(p)) => {
                if prev.is_some_and(|c| c.is_ascii_digit()) {
                    return Err(CliError::Parse { path: path.to_string(), column: i + 1, message: "write `*` before p".into() });
                }
                // fold p^k into a numeral
                let mut j = i + 1;
                let mut value = p as u128;
                if chars.get(j) == Some(&'^') {
                    let digits: String = chars[j + 1..].iter().take_while(|c| c.is_ascii_digit()).collect();
                    let k: u32 = digits.parse().map_err(|_| CliError::Parse {
                        path: path.to_string(),
                        column: j + 2,
                        message: "expected a nonnegative exponent after p^".into(),
                    })?;
                    value = (p as u128).checked_pow(k).ok_or_else(|| CliError::Parse {
                        path: path.to_string(),
                        column: i + 1,
                        message: "power of p too large".into(),
                    })?;
                    j += 1 + digits.len();
                }
                for d in value.to_string().chars() {
                    expanded.push(d);
                    origin.push(i + 1);
                }
                if let Some(k) = chars[j..].iter().position(|c| !c.is_whitespace()) {
                    if chars[j + k].is_ascii_digit() || chars[j + k] == 'p' {
                        return Err(CliError::Parse { path: path.to_string(), column: j + k + 1, message: "write `*` after p".into() });
                    }
                }
                prev = Some('0');
                i = j;
                continue;
            }
            _ => {
                expanded.push(ch);
                origin.push(i + 1);
            }
        }
        if !ch.is_whitespace() {
            prev = Some(ch);
        }
        i += 1;
    }
    parse_laurent(&expanded).map_err(|e| match e {
        KernelError::Parse { column, message } => {
            let col = origin.get(column.saturating_sub(1)).copied().unwrap_or(text.chars().count() + 1);
            CliError::Parse { path: path.to_string(), column: col, message }
        }
        other => input(other),
    })
}

pub fn rational(v: &Value, path: &str) -> CliResult<Q> {
    let lp = literal(v, path, None)?;
    lp_constant(&lp, path)
}

fn lp_constant(lp: &LaurentPoly, path: &str) -> CliResult<Q> {
    lp.to_constant().map_err(|_| schema(path, "a rational constant"))
}

pub fn poly(v: &Value, path: &str, p: u64) -> CliResult<QPoly> {
    literal(v, path, Some(p))?.to_poly().map_err(|_| schema(path, "a polynomial in u without negative powers"))
}

pub fn constant(v: &Value, path: &str, p: u64) -> CliResult<Q> {
    lp_constant(&literal(v, path, Some(p))?, path)
}

pub fn laurent(v: &Value, path: &str, p: u64, c: u32) -> CliResult<Laurent> {
    let lp = literal(v, path, Some(p))?;
    let m = p.pow(c);
    let mut terms = Vec::new();
    for (e, a) in &lp.terms {
        let r = reduce_mod(a, m).map_err(|_| schema(path, &format!("coefficients integral at {}", p)))?;
        terms.push((*e, r));
    }
    Ok(Laurent::from_terms(p, c, &terms, None))
}

/// A square matrix of literals.
pub fn matrix<T>(v: &Value, path: &str, mut f: impl FnMut(&Value, &str) -> CliResult<T>) -> CliResult<Vec<Vec<T>>> {
    let rows = as_array(v, path)?;
    if rows.is_empty() {
        return Err(schema(path, "a nonempty square matrix"));
    }
    let n = rows.len();
    let mut out = Vec::with_capacity(n);
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{}[{}]", path, i);
        let cols = as_array(row, &rp)?;
        if cols.len() != n {
            return Err(schema(&rp, &format!("a row of length {}", n)));
        }
        let mut r = Vec::with_capacity(n);
        for (j, x) in cols.iter().enumerate() {
            r.push(f(x, &format!("{}[{}]", rp, j))?);
        }
        out.push(r);
    }
    Ok(out)
}

pub fn vector<T>(v: &Value, path: &str, mut f: impl FnMut(&Value, &str) -> CliResult<T>) -> CliResult<Vec<T>> {
    as_array(v, path)?.iter().enumerate().map(|(i, x)| f(x, &format!("{}[{}]", path, i))).collect()
}

pub fn type_vector(v: &Value, path: &str) -> CliResult<TypeVector> {
    match v {
        Value::String(s) => s.parse::<TypeVector>().map_err(|e| match e {
            KernelError::Parse { column, message } => CliError::Parse { path: path.to_string(), column, message },
            _ => schema(path, "a type such as \"(1, 0)\""),
        }),
        Value::Array(_) => Ok(TypeVector::new(vector(v, path, rational)?)),
        _ => Err(schema(path, "a type such as \"(1, 0)\" or a list of rationals")),
    }
}

pub fn field<'a>(payload: &'a Value, key: &str) -> CliResult<&'a Value> {
    get(payload, key, "object.payload")
}

pub fn field_path(key: &str) -> String {
    join("object.payload", key)
}
