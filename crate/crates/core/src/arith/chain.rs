//! Linear algebra over the chain ring `Z/p^c` with `u64` residues.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::ToPrimitive;

use super::rational::{inv_mod, mul_mod, pow_u64, vp_residue};

pub type RMat = Vec<Vec<u64>>;

/// `left * A * right = diag(p^d_i)`; `d_i = c` marks a zero invariant factor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainSnf {
    pub p: u64,
    pub c: u32,
    pub left: RMat,
    pub right: RMat,
    pub diag: Vec<u32>,
}

fn ident(n: usize) -> RMat {
    (0..n).map(|i| (0..n).map(|j| (i == j) as u64).collect()).collect()
}

pub fn snf_chain(a: &RMat, p: u64, c: u32) -> ChainSnf {
    let m = a.len();
    let n = a.first().map_or(0, |r| r.len());
    let md = pow_u64(p, c);
    let mut a: RMat = a.iter().map(|r| r.iter().map(|x| x % md).collect()).collect();
    let mut left = ident(m);
    let mut right = ident(n);
    let mut diag = Vec::new();
    for k in 0..m.min(n) {
        let mut best: Option<(usize, usize, u32)> = None;
        for i in k..m {
            for j in k..n {
                let v = vp_residue(a[i][j], p, c);
                if v < c && best.is_none_or(|b| v < b.2) {
                    best = Some((i, j, v));
                }
            }
        }
        let Some((pi, pj, v)) = best else {
            diag.extend(std::iter::repeat_n(c, m.min(n) - k));
            break;
        };
        a.swap(k, pi);
        left.swap(k, pi);
        if pj != k {
            for row in a.iter_mut().chain(right.iter_mut()) {
                row.swap(k, pj);
            }
        }
        let pv = pow_u64(p, v);
        let w = inv_mod(a[k][k] / pv, md).expect("unit part");
        for x in a[k].iter_mut().chain(left[k].iter_mut()) {
            *x = mul_mod(*x, w, md);
        }
        for i in k + 1..m {
            if a[i][k] == 0 {
                continue;
            }
            let t = a[i][k] / pv;
            for j in 0..n {
                a[i][j] = (a[i][j] + md - mul_mod(t, a[k][j], md)) % md;
            }
            for j in 0..m {
                left[i][j] = (left[i][j] + md - mul_mod(t, left[k][j], md)) % md;
            }
        }
        for j in k + 1..n {
            if a[k][j] == 0 {
                continue;
            }
            let t = a[k][j] / pv;
            for row in right.iter_mut() {
                row[j] = (row[j] + md - mul_mod(t, row[k], md)) % md;
            }
            a[k][j] = 0;
        }
        diag.push(v);
    }
    ChainSnf { p, c, left, right, diag }
}

/// `log_p` of the cardinality of the submodule spanned by the columns.
pub fn span_log(a: &RMat, p: u64, c: u32) -> u32 {
    snf_chain(a, p, c).diag.iter().map(|&d| c - d).sum()
}

/// Generators (as columns) of `{x : A x = 0}` in `(Z/p^c)^n`.
pub fn kernel(a: &RMat, p: u64, c: u32) -> RMat {
    let n = a.first().map_or(0, |r| r.len());
    let s = snf_chain(a, p, c);
    let md = pow_u64(p, c);
    let mut gens: Vec<Vec<u64>> = Vec::new();
    for i in 0..n {
        let scale = match s.diag.get(i) {
            Some(&d) if d == 0 => continue,
            Some(&d) => pow_u64(p, c - d),
            None => 1,
        };
        gens.push((0..n).map(|r| mul_mod(s.right[r][i], scale, md)).collect());
    }
    // return as a matrix whose columns are the generators
    (0..n).map(|r| gens.iter().map(|g| g[r]).collect()).collect()
}

pub fn mat_mul_mod(a: &RMat, b: &RMat, md: u64) -> RMat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            (0..n)
                .map(|j| {
                    let mut s = 0u128;
                    for (k, &x) in row.iter().enumerate() {
                        s += x as u128 * b[k][j] as u128;
                        if s >= 1u128 << 120 {
                            s %= md as u128;
                        }
                    }
                    (s % md as u128) as u64
                })
                .collect()
        })
        .collect()
}

/// Integer matrix modulo `p^n`: invariant factors with valuations capped at `n`.
pub fn snf_integer_mod(a: &[Vec<BigInt>], p: u64, n: u32) -> ChainSnf {
    let md = BigInt::from(pow_u64(p, n));
    let r: RMat = a.iter().map(|row| row.iter().map(|x| x.mod_floor(&md).to_u64().unwrap()).collect()).collect();
    snf_chain(&r, p, n)
}

/// `log_p |coker(A mod p^n)|` for `A : Z^cols -> Z^rows`.
pub fn coker_log(s: &ChainSnf, rows: usize) -> u32 {
    s.diag.iter().sum::<u32>() + (rows.saturating_sub(s.diag.len()) as u32) * s.c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(a: &[&[i64]]) -> Vec<Vec<BigInt>> {
        a.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
    }

    #[test]
    fn integer_examples() {
        let s = snf_integer_mod(&big(&[&[2, 0], &[0, 4]]), 2, 3);
        assert_eq!(s.diag, vec![1, 2]);
        assert_eq!(coker_log(&s, 2), 3);
        let s = snf_integer_mod(&big(&[&[0, 0], &[0, 0]]), 2, 2);
        assert_eq!(coker_log(&s, 2), 4);
        let s = snf_integer_mod(&big(&[&[2, 1], &[0, 2]]), 2, 3);
        assert_eq!(s.diag, vec![0, 2]);
        assert_eq!(coker_log(&s, 2), 2);
    }

    #[test]
    fn transforms_diagonalize() {
        let a: RMat = vec![vec![6, 4, 2], vec![8, 0, 12], vec![3, 9, 27]];
        let s = snf_chain(&a, 2, 4);
        let d = mat_mul_mod(&mat_mul_mod(&s.left, &a, 16), &s.right, 16);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { pow_u64(2, s.diag[i]) % 16 } else { 0 };
                assert_eq!(d[i][j], want);
            }
        }
    }

    #[test]
    fn kernel_is_annihilated() {
        let a: RMat = vec![vec![2, 4, 0], vec![0, 4, 8]];
        let k = kernel(&a, 2, 3);
        let z = mat_mul_mod(&a, &k, 8);
        assert!(z.iter().flatten().all(|&x| x == 0));
        // kernel has order 8^3 / |image| = 2^9 / 2^(2+1)
        assert_eq!(span_log(&k, 2, 3), 9 - span_log(&a, 2, 3));
    }
}
