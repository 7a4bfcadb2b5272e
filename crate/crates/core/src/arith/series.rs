use std::fmt;

use num_traits::Zero;

use super::rational::{fmt_q, mul_mod, pow_u64, Q};
use crate::error::{Error, Result};

/// The truncated coefficient rings the kernels compute in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RingSpec {
    /// `F_p[u]/u^nu`
    FpSeries { p: u64, nu: usize },
    /// `(Z/p^n)[u]/u^nu`
    ZpnSeries { p: u64, n: u32, nu: usize },
    /// rational polynomials of u-degree below `du`, with a designated prime
    RationalPoly { p: u64, du: usize },
}

impl RingSpec {
    pub fn validate(&self) -> Result<()> {
        let (p, ok) = match *self {
            RingSpec::FpSeries { p, nu } => (p, nu >= 1),
            RingSpec::ZpnSeries { p, n, nu } => (p, nu >= 1 && n >= 1),
            RingSpec::RationalPoly { p, du } => (p, du >= 1),
        };
        if !super::rational::is_prime(p) {
            return Err(Error::InvalidInput(format!("{} is not prime", p)));
        }
        if !ok {
            return Err(Error::InvalidInput("truncation parameters must be positive".into()));
        }
        Ok(())
    }

    pub fn p(&self) -> u64 {
        match *self {
            RingSpec::FpSeries { p, .. } | RingSpec::ZpnSeries { p, .. } | RingSpec::RationalPoly { p, .. } => p,
        }
    }

    pub fn truncation(&self) -> usize {
        match *self {
            RingSpec::FpSeries { nu, .. } | RingSpec::ZpnSeries { nu, .. } => nu,
            RingSpec::RationalPoly { du, .. } => du,
        }
    }

    fn modulus(&self) -> Option<u64> {
        match *self {
            RingSpec::FpSeries { p, .. } => Some(p),
            RingSpec::ZpnSeries { p, n, .. } => Some(pow_u64(p, n)),
            RingSpec::RationalPoly { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coeffs {
    Residues(Vec<u64>),
    Rationals(Vec<Q>),
}

/// An element of a truncated ring. `truncated` records that some
/// operation in its history discarded nonzero digits past the truncation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesElement {
    ring: RingSpec,
    coeffs: Coeffs,
    truncated: bool,
}

impl SeriesElement {
    pub fn from_residues(ring: RingSpec, c: &[u64]) -> Result<Self> {
        let m = ring
            .modulus()
            .ok_or_else(|| Error::RingMismatch("residues given for a rational ring".into()))?;
        let n = ring.truncation();
        let mut v = vec![0u64; n];
        let mut truncated = false;
        for (i, &a) in c.iter().enumerate() {
            if i < n {
                v[i] = a % m;
            } else if a % m != 0 {
                truncated = true;
            }
        }
        Ok(SeriesElement { ring, coeffs: Coeffs::Residues(v), truncated })
    }

    pub fn from_rationals(ring: RingSpec, c: &[Q]) -> Result<Self> {
        if ring.modulus().is_some() {
            return Err(Error::RingMismatch("rationals given for a residue ring".into()));
        }
        let n = ring.truncation();
        let mut v = vec![Q::zero(); n];
        let mut truncated = false;
        for (i, a) in c.iter().enumerate() {
            if i < n {
                v[i] = a.clone();
            } else if !a.is_zero() {
                truncated = true;
            }
        }
        Ok(SeriesElement { ring, coeffs: Coeffs::Rationals(v), truncated })
    }

    pub fn ring(&self) -> RingSpec {
        self.ring
    }

    pub fn coeffs(&self) -> &Coeffs {
        &self.coeffs
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    fn same_ring(&self, o: &Self) -> Result<()> {
        if self.ring != o.ring {
            return Err(Error::RingMismatch(format!("{:?} vs {:?}", self.ring, o.ring)));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.same_ring(o)?;
        let coeffs = match (&self.coeffs, &o.coeffs) {
            (Coeffs::Residues(a), Coeffs::Residues(b)) => {
                let m = self.ring.modulus().unwrap();
                Coeffs::Residues(a.iter().zip(b).map(|(x, y)| (x + y) % m).collect())
            }
            (Coeffs::Rationals(a), Coeffs::Rationals(b)) => {
                Coeffs::Rationals(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => unreachable!(),
        };
        Ok(SeriesElement { ring: self.ring, coeffs, truncated: self.truncated || o.truncated })
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.same_ring(o)?;
        let n = self.ring.truncation();
        let coeffs = match (&self.coeffs, &o.coeffs) {
            (Coeffs::Residues(a), Coeffs::Residues(b)) => {
                let m = self.ring.modulus().unwrap();
                let mut c = vec![0u64; n];
                for i in 0..n {
                    if a[i] == 0 {
                        continue;
                    }
                    for j in 0..n - i {
                        c[i + j] = (c[i + j] + mul_mod(a[i], b[j], m)) % m;
                    }
                }
                Coeffs::Residues(c)
            }
            (Coeffs::Rationals(a), Coeffs::Rationals(b)) => {
                let mut c = vec![Q::zero(); n];
                for i in 0..n {
                    for j in 0..n - i {
                        c[i + j] += &a[i] * &b[j];
                    }
                }
                Coeffs::Rationals(c)
            }
            _ => unreachable!(),
        };
        Ok(SeriesElement { ring: self.ring, coeffs, truncated: self.truncated || o.truncated })
    }

    /// `u -> u^p`; coefficients are fixed since the residue field is `F_p`.
    pub fn frobenius(&self) -> Self {
        let p = self.ring.p() as usize;
        let n = self.ring.truncation();
        let mut truncated = self.truncated;
        let coeffs = match &self.coeffs {
            Coeffs::Residues(a) => {
                let mut c = vec![0u64; n];
                for (i, &x) in a.iter().enumerate() {
                    if i * p < n {
                        c[i * p] = x;
                    } else if x != 0 {
                        truncated = true;
                    }
                }
                Coeffs::Residues(c)
            }
            Coeffs::Rationals(a) => {
                let mut c = vec![Q::zero(); n];
                for (i, x) in a.iter().enumerate() {
                    if i * p < n {
                        c[i * p] = x.clone();
                    } else if !x.is_zero() {
                        truncated = true;
                    }
                }
                Coeffs::Rationals(c)
            }
        };
        SeriesElement { ring: self.ring, coeffs, truncated }
    }
}

impl fmt::Display for SeriesElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<(usize, String)> = match &self.coeffs {
            Coeffs::Residues(a) => a.iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, x)| (i, x.to_string())).collect(),
            Coeffs::Rationals(a) => a.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(i, x)| (i, fmt_q(x))).collect(),
        };
        if terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = terms
            .into_iter()
            .map(|(i, c)| match (i, c.as_str()) {
                (0, _) => c,
                (1, "1") => "u".to_string(),
                (_, "1") => format!("u^{}", i),
                (1, _) => format!("{}*u", c),
                _ => format!("{}*u^{}", c, i),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const F2: RingSpec = RingSpec::FpSeries { p: 2, nu: 8 };

    #[test]
    fn frobenius_over_f2() {
        let x = SeriesElement::from_residues(F2, &[0, 1, 1]).unwrap();
        assert_eq!(x.frobenius().to_string(), "u^2 + u^4");
        assert!(!x.frobenius().truncated());
        let y = SeriesElement::from_residues(F2, &[0, 0, 0, 0, 0, 1]).unwrap();
        let fy = y.frobenius();
        assert_eq!(fy.to_string(), "0");
        assert!(fy.truncated());
    }

    #[test]
    fn characteristic_two_square() {
        let x = SeriesElement::from_residues(F2, &[1, 1]).unwrap();
        assert_eq!(x.mul(&x).unwrap().to_string(), "1 + u^2");
    }

    #[test]
    fn mismatched_rings() {
        let x = SeriesElement::from_residues(F2, &[1]).unwrap();
        let y = SeriesElement::from_residues(RingSpec::FpSeries { p: 3, nu: 8 }, &[1]).unwrap();
        assert!(matches!(x.add(&y), Err(Error::RingMismatch(_))));
    }
}
