//! Shared fixtures for the benchmarks.

use slopeforge::arith::dvr::PAdic;
use slopeforge::arith::rational::q;
use slopeforge::isocrystal::Isocrystal;
use slopeforge::{DvrLattice, Eisenstein, KisinModule, PtModule, QPoly, SearchOptions, Q};

pub fn search() -> SearchOptions {
    SearchOptions { search_degree: 8, work_precision: 128 }
}

/// A unimodular-by-diagonal lattice of rank `n` over `Z_p`.
pub fn padic_lattice(p: u64, n: usize) -> DvrLattice<PAdic> {
    let m: Vec<Vec<Q>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { q(p.pow(i as u32) as i64) } else if j > i { q((i + 2 * j) as i64) } else { q(0) }).collect())
        .collect();
    DvrLattice::new(PAdic { p }, m).unwrap()
}

pub fn phimodule(p: u64) -> PtModule {
    let polys = vec![
        vec![QPoly::from_ints(&[0, 0, 1]), QPoly::zero()],
        vec![QPoly::from_ints(&[1, 1]), QPoly::from_ints(&[0, 0, 0, 1])],
    ];
    PtModule::from_qpolys(p, 8, &polys, 0).unwrap()
}

/// `[[E, 0], [p, E^2]]`, whose Fargues tower does not stabilize at level one.
pub fn kisin_tower(p: u64) -> KisinModule {
    let eis = Eisenstein::linear(p).unwrap();
    let e = eis.poly().clone();
    KisinModule::new(eis, vec![vec![e.clone(), QPoly::zero()], vec![QPoly::from_ints(&[p as i64]), e.pow(2)]], 0).unwrap()
}

/// `[[E^2, 0], [1, E]]`, split by one theta step.
pub fn kisin_split(p: u64) -> KisinModule {
    let eis = Eisenstein::linear(p).unwrap();
    let e = eis.poly().clone();
    KisinModule::new(eis, vec![vec![e.pow(2), QPoly::zero()], vec![QPoly::from_ints(&[1]), e]], 0).unwrap()
}

pub fn isocrystal_diag(p: u64) -> Isocrystal {
    Isocrystal::from_ints(p, &[&[1, 0], &[0, p as i64]]).unwrap()
}
