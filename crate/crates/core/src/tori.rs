//! Characters of induced tori as functions on a finite Galois set,
//! Hodge and Newton cocharacters and their pushforward to weight types.

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::arith::rational::{q, Q};
use crate::error::{Error, Result};
use crate::types::{sharp_average_weights, TypeVector};

/// `Hom(E, Qbar_p)` as `{0, .., n-1}` with a permutation action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GaloisSet {
    n: usize,
    generators: Vec<Vec<usize>>,
    iota0: usize,
}

/// A function on a Galois set; integer values for characters, rational for `nu`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CharacterFunction {
    pub base: GaloisSet,
    pub values: Vec<Q>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Weights {
    Hodge,
    Newton,
}

fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
    b.iter().map(|&i| a[i]).collect()
}

fn inverse(a: &[usize]) -> Vec<usize> {
    let mut out = vec![0; a.len()];
    for (i, &j) in a.iter().enumerate() {
        out[j] = i;
    }
    out
}

impl GaloisSet {
    pub fn new(n: usize, generators: Vec<Vec<usize>>, iota0: usize) -> Result<Self> {
        if n == 0 || iota0 >= n {
            return Err(Error::InvalidInput(format!("distinguished element {} outside a set of size {}", iota0, n)));
        }
        for g in &generators {
            let seen: BTreeSet<usize> = g.iter().copied().collect();
            if g.len() != n || seen.len() != n || seen.iter().any(|&x| x >= n) {
                return Err(Error::InvalidInput(format!("generator {:?} is not a permutation of {} elements", g, n)));
            }
        }
        Ok(GaloisSet { n, generators, iota0 })
    }

    /// Unramified case: Frobenius acts as the cycle `i -> i + 1`.
    pub fn cyclic(n: usize, iota0: usize) -> Result<Self> {
        let g = (0..n).map(|i| (i + 1) % n).collect();
        GaloisSet::new(n, vec![g], iota0)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn iota0(&self) -> usize {
        self.iota0
    }

    pub fn generators(&self) -> &[Vec<usize>] {
        &self.generators
    }

    /// The group generated by the action, identity first.
    pub fn group(&self) -> Vec<Vec<usize>> {
        let id: Vec<usize> = (0..self.n).collect();
        let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
        seen.insert(id.clone());
        let mut out = vec![id];
        let mut i = 0;
        while i < out.len() {
            for g in &self.generators {
                let h = compose(g, &out[i]);
                if seen.insert(h.clone()) {
                    out.push(h);
                }
            }
            i += 1;
        }
        out
    }

    pub fn is_transitive(&self) -> bool {
        let orbit: BTreeSet<usize> = self.group().iter().map(|g| g[self.iota0]).collect();
        orbit.len() == self.n
    }

    pub fn function(&self, values: Vec<Q>) -> Result<CharacterFunction> {
        if values.len() != self.n {
            return Err(Error::LengthMismatch(self.n, values.len()));
        }
        Ok(CharacterFunction { base: self.clone(), values })
    }

    pub fn int_function(&self, values: &[i64]) -> Result<CharacterFunction> {
        self.function(values.iter().map(|&v| q(v)).collect())
    }

    pub fn delta(&self, i: usize) -> CharacterFunction {
        let values = (0..self.n).map(|j| if i == j { q(1) } else { Q::zero() }).collect();
        CharacterFunction { base: self.clone(), values }
    }
}

impl CharacterFunction {
    /// `(sigma f)(iota) = f(sigma^{-1} iota)`
    pub fn act(&self, sigma: &[usize]) -> CharacterFunction {
        let inv = inverse(sigma);
        CharacterFunction { base: self.base.clone(), values: (0..self.base.n).map(|i| self.values[inv[i]].clone()).collect() }
    }

    pub fn at(&self, i: usize) -> &Q {
        &self.values[i]
    }

    /// Average over the Galois set, i.e. integration against Haar measure.
    pub fn haar_average(&self) -> Q {
        self.values.iter().sum::<Q>() / q(self.base.n as i64)
    }

    pub fn is_invariant(&self) -> bool {
        self.base.generators.iter().all(|g| &self.act(g) == self)
    }

    /// `<chi_f, mu> = f(iota_0)`
    pub fn pair_hodge(&self) -> Q {
        self.values[self.base.iota0].clone()
    }
}

/// `mu_E`: the indicator of `iota_0`.
pub fn hodge_cochar(s: &GaloisSet) -> CharacterFunction {
    s.delta(s.iota0)
}

/// `nu_E`: the average of `mu_E` over the orbit of the action group.
pub fn newton_cochar(s: &GaloisSet) -> Result<CharacterFunction> {
    if !s.is_transitive() {
        return Err(Error::NonTransitiveAction);
    }
    let mu = hodge_cochar(s);
    let group = s.group();
    let k = q(group.len() as i64);
    let mut acc = vec![Q::zero(); s.n];
    for g in &group {
        for (a, v) in acc.iter_mut().zip(mu.act(g).values) {
            *a += v;
        }
    }
    s.function(acc.into_iter().map(|a| a / &k).collect())
}

fn common_base(x: &[CharacterFunction]) -> Result<&GaloisSet> {
    let Some(first) = x.first() else {
        return Err(Error::InvalidInput("no weight characters given".into()));
    };
    if x.iter().any(|f| f.base != first.base) {
        return Err(Error::BaseMismatch);
    }
    Ok(&first.base)
}

/// `[x . mu]` or `[x . nu]` for `x: T_E -> GL_n` given by its weight characters.
pub fn push_to_weights(x: &[CharacterFunction], which: Weights) -> Result<TypeVector> {
    let s = common_base(x)?;
    let v = match which {
        Weights::Hodge => x.iter().map(|f| f.values[s.iota0].clone()).collect(),
        Weights::Newton => {
            if !s.is_transitive() {
                return Err(Error::NonTransitiveAction);
            }
            x.iter().map(CharacterFunction::haar_average).collect()
        }
    };
    Ok(TypeVector::new(v))
}

/// Weight lists `(f_i(sigma^{-1} iota_0))_i` over the action group.
pub fn hodge_orbit(x: &[CharacterFunction]) -> Result<Vec<Vec<Q>>> {
    let s = common_base(x)?;
    Ok(s.group().iter().map(|g| {
        let inv = inverse(g);
        x.iter().map(|f| f.values[inv[s.iota0]].clone()).collect()
    }).collect())
}

/// `[x . nu] = [x . mu]^#`
pub fn is_ordinary_abelian(x: &[CharacterFunction]) -> Result<bool> {
    let newton = push_to_weights(x, Weights::Newton)?;
    Ok(newton == sharp_average_weights(&hodge_orbit(x)?)?)
}

/// `t_F = t_N^iota` on the weight side.
pub fn fargues_weights(x: &[CharacterFunction]) -> Result<TypeVector> {
    Ok(push_to_weights(x, Weights::Newton)?.involution())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rational::qr;

    #[test]
    fn hodge_and_newton() {
        let s2 = GaloisSet::cyclic(2, 0).unwrap();
        assert_eq!(hodge_cochar(&s2).values, vec![q(1), q(0)]);
        assert_eq!(newton_cochar(&s2).unwrap().values, vec![qr(1, 2), qr(1, 2)]);
        let s1 = GaloisSet::cyclic(1, 0).unwrap();
        assert_eq!(newton_cochar(&s1).unwrap().values, vec![q(1)]);
        let s3 = GaloisSet::cyclic(3, 1).unwrap();
        let nu = newton_cochar(&s3).unwrap();
        assert_eq!(nu.values, vec![qr(1, 3); 3]);
        assert!(nu.is_invariant());
    }

    #[test]
    fn non_transitive() {
        let s = GaloisSet::new(3, vec![vec![1, 0, 2]], 0).unwrap();
        assert_eq!(newton_cochar(&s), Err(Error::NonTransitiveAction));
        assert!(GaloisSet::new(2, vec![vec![0, 0]], 0).is_err());
    }

    #[test]
    fn action_convention() {
        let s = GaloisSet::cyclic(3, 0).unwrap();
        let f = s.int_function(&[5, 7, 9]).unwrap();
        // sigma(0) = 1, so (sigma f)(1) = f(0)
        assert_eq!(f.act(&s.generators()[0]).values, vec![q(9), q(5), q(7)]);
        assert_eq!(s.group().len(), 3);
    }

    #[test]
    fn pushforward() {
        let s = GaloisSet::cyclic(2, 0).unwrap();
        let x = vec![s.delta(0), s.delta(1)];
        assert_eq!(push_to_weights(&x, Weights::Hodge).unwrap(), TypeVector::from_ints(&[1, 0]));
        assert_eq!(push_to_weights(&x, Weights::Newton).unwrap(), TypeVector::new(vec![qr(1, 2); 2]));
        assert!(is_ordinary_abelian(&x).unwrap());
        let zero = vec![s.int_function(&[0, 0]).unwrap(); 3];
        assert!(is_ordinary_abelian(&zero).unwrap());
        let other = GaloisSet::cyclic(2, 1).unwrap();
        assert_eq!(push_to_weights(&[s.delta(0), other.delta(0)], Weights::Hodge), Err(Error::BaseMismatch));
    }

    #[test]
    fn doubled_delta() {
        let s = GaloisSet::cyclic(2, 0).unwrap();
        let x = vec![s.delta(0), s.delta(0)];
        assert_eq!(push_to_weights(&x, Weights::Hodge).unwrap(), TypeVector::from_ints(&[1, 1]));
        assert_eq!(push_to_weights(&x, Weights::Newton).unwrap(), TypeVector::new(vec![qr(1, 2); 2]));
        assert!(is_ordinary_abelian(&x).unwrap());
    }
}
