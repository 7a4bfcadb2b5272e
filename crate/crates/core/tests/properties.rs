use proptest::prelude::*;

use slopeforge::arith::dvr::PAdic;
use slopeforge::arith::rational::{q, qr};
use slopeforge::arith::parse_poly;
use slopeforge::isocrystal::{char_poly, Isocrystal};
use slopeforge::tori::{self, GaloisSet, Weights};
use slopeforge::*;

fn rational() -> impl Strategy<Value = Q> {
    (-20i64..=20, 1i64..=6).prop_map(|(n, d)| qr(n, d))
}

fn type_vec(max: usize) -> impl Strategy<Value = TypeVector> {
    prop::collection::vec(rational(), 1..=max).prop_map(TypeVector::new)
}

fn small_poly() -> impl Strategy<Value = QPoly> {
    prop::collection::vec(-5i64..=5, 0..=4).prop_map(|c| QPoly::from_ints(&c))
}

fn padic_lattice(p: u64, n: usize) -> impl Strategy<Value = DvrLattice<PAdic>> {
    prop::collection::vec(prop::collection::vec((-3i64..=3, -1i32..=2), n), n)
        .prop_filter_map("singular", move |rows| {
            let m = rows
                .iter()
                .map(|r| r.iter().map(|&(a, k)| q(a) * q(p as i64).pow(k)).collect())
                .collect();
            DvrLattice::new(PAdic { p }, m).ok()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn types_are_sorted_and_involution_is_involutive(t in type_vec(6)) {
        prop_assert!(t.entries().windows(2).all(|w| w[0] >= w[1]));
        prop_assert_eq!(t.involution().involution(), t.clone());
        prop_assert_eq!(t.involution().degree(), -t.degree());
        prop_assert!(t.dominance_le(&t).unwrap());
    }

    #[test]
    fn constant_type_is_dominance_minimum(t in type_vec(6)) {
        let avg = TypeVector::constant(t.degree() / q(t.len() as i64), t.len());
        prop_assert!(avg.dominance_le(&t).unwrap());
    }

    #[test]
    fn polygon_endpoint_is_rank_and_degree(t in type_vec(6)) {
        let f = t.polygon();
        prop_assert_eq!(f.endpoint(), (q(t.len() as i64), t.degree()));
        prop_assert!(f.is_concave());
        prop_assert_eq!(f.to_type(), Some(t));
    }

    #[test]
    fn tensor_is_symmetric(a in type_vec(4), b in type_vec(4)) {
        prop_assert_eq!(a.tensor(&b), b.tensor(&a));
        prop_assert_eq!(a.concat(&b), b.concat(&a));
    }

    #[test]
    fn relative_position_is_antisymmetric(a in padic_lattice(3, 3), b in padic_lattice(3, 3)) {
        let ab = a.pos(&b).unwrap();
        prop_assert_eq!(b.pos(&a).unwrap(), ab.involution());
        prop_assert_eq!(a.pos(&a).unwrap(), TypeVector::from_ints(&[0, 0, 0]));
        prop_assert!(a.same_as(&a.scaled(0)).unwrap());
    }

    #[test]
    fn scaling_shifts_position(a in padic_lattice(2, 2), k in -3i64..=3) {
        let t = a.pos(&a.scaled(k)).unwrap();
        prop_assert_eq!(t, TypeVector::constant(q(-k), 2));
    }

    #[test]
    fn poly_division_reconstructs(a in small_poly(), b in small_poly()) {
        prop_assume!(!b.is_zero());
        let (quo, rem) = a.divmod(&b);
        prop_assert_eq!(&(&quo * &b) + &rem, a);
        prop_assert!(rem.is_zero() || rem.degree() < b.degree());
    }

    #[test]
    fn poly_literals_round_trip(a in small_poly()) {
        prop_assert_eq!(parse_poly(&a.to_string()).unwrap(), a);
    }

    #[test]
    fn laurent_inverse(c in prop::collection::vec(0u64..9, 1..6), lo in -3i64..3) {
        prop_assume!(c[0] % 3 != 0);
        let terms: Vec<(i64, u64)> = c.iter().enumerate().map(|(i, &a)| (lo + i as i64, a)).collect();
        let x = Laurent::from_terms(3, 2, &terms, None);
        let y = x.inverse(12).unwrap();
        let one = x.mul(&y);
        prop_assert_eq!(one.val(), Some(0));
        prop_assert!(one.sub(&Laurent::one(3, 2)).val_bound() >= 12);
    }

    #[test]
    fn frobenius_is_multiplicative(a in prop::collection::vec(0u64..4, 1..5), b in prop::collection::vec(0u64..4, 1..5)) {
        let x = Laurent::from_dense(2, 2, 0, a, None);
        let y = Laurent::from_dense(2, 2, 0, b, None);
        prop_assert!(x.mul(&y).frobenius().agrees(&x.frobenius().mul(&y.frobenius())));
    }

    #[test]
    fn newton_type_of_triangular(d in prop::collection::vec(0u32..3, 1..4), p in prop::sample::select(vec![2u64, 3, 5])) {
        let n = d.len();
        let b: Vec<Vec<Q>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { q(p.pow(d[i]) as i64) } else if j > i { q(1) } else { q(0) }).collect())
            .collect();
        let iso = Isocrystal::new(p, b, 1).unwrap();
        let mut want: Vec<i64> = d.iter().map(|&x| x as i64).collect();
        want.sort_unstable_by(|a, b| b.cmp(a));
        prop_assert_eq!(iso.newton_type(), TypeVector::from_ints(&want));
        prop_assert_eq!(iso.newton_type().degree(), q(iso.kottwitz_point()));
        prop_assert!(iso.mazur_check(&iso.standard_lattice()).unwrap());
    }

    #[test]
    fn char_poly_is_monic_with_det_constant(a in prop::collection::vec(-4i64..=4, 4)) {
        let m = vec![vec![q(a[0]), q(a[1])], vec![q(a[2]), q(a[3])]];
        let f = char_poly(&m);
        prop_assert_eq!(f.coeff(2), q(1));
        prop_assert_eq!(f.coeff(0), q(a[0] * a[3] - a[1] * a[2]));
        prop_assert_eq!(f.coeff(1), q(-(a[0] + a[3])));
    }

    #[test]
    fn newton_cochar_is_invariant(n in 1usize..6, i0 in 0usize..6) {
        let s = GaloisSet::cyclic(n, i0 % n).unwrap();
        let nu = tori::newton_cochar(&s).unwrap();
        prop_assert!(nu.is_invariant());
        prop_assert_eq!(nu.values.iter().sum::<Q>(), q(1));
        prop_assert_eq!(tori::hodge_cochar(&s).pair_hodge(), q(1));
    }

    #[test]
    fn pushforward_degrees(vals in prop::collection::vec(prop::collection::vec(-3i64..=3, 3), 1..4)) {
        let s = GaloisSet::cyclic(3, 0).unwrap();
        let x: Vec<CharacterFunction> = vals.iter().map(|v| s.int_function(v).unwrap()).collect();
        let h = tori::push_to_weights(&x, Weights::Hodge).unwrap();
        let nw = tori::push_to_weights(&x, Weights::Newton).unwrap();
        prop_assert_eq!(h.degree(), vals.iter().map(|v| q(v[0])).sum::<Q>());
        prop_assert_eq!(nw.degree() * q(3), vals.iter().flatten().map(|&a| q(a)).sum::<Q>());
        prop_assert!(tori::is_ordinary_abelian(&x).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn kisin_twist_and_tower(a in 0u32..3, b in 0u32..3, f in -2i64..=2, s in -1i64..=1) {
        let eis = Eisenstein::linear(2).unwrap();
        let e = eis.poly().clone();
        let m = KisinModule::new(
            eis,
            vec![vec![e.pow(a), QPoly::from_ints(&[f])], vec![QPoly::zero(), e.pow(b)]],
            0,
        ).unwrap();
        let opts = SearchOptions { search_degree: 8, work_precision: 48 };
        let tw = m.twist(s);
        prop_assert_eq!(tw.degree(), m.degree() + q(2 * s));
        let t1 = m.fargues_n(1, &opts).unwrap();
        let t2 = m.fargues_n(2, &opts).unwrap();
        prop_assert!(t2.le(&t1).unwrap());
        prop_assert_eq!(t1.endpoint(), (q(2), m.degree()));
        prop_assert_eq!(tw.fargues_n(1, &opts).unwrap().endpoint(), (q(2), tw.degree()));
    }

    #[test]
    fn mod_p_hn_flag_slopes_decrease(c in prop::collection::vec(0i64..2, 12)) {
        let entry = |k: usize| QPoly::from_ints(&c[3 * k..3 * k + 3]);
        let polys = vec![vec![entry(0), entry(1)], vec![entry(2), entry(3)]];
        let Ok(module) = PtModule::from_qpolys(2, 8, &polys, 0) else { return Ok(()) };
        let (flag, t) = module.fargues(&SearchOptions { search_degree: 8, work_precision: 48 }).unwrap();
        prop_assert!(flag.slopes.windows(2).all(|w| w[0] > w[1]));
        prop_assert_eq!(t.degree(), module.degree());
        prop_assert!(t.dominance_le(&module.hodge_type().unwrap()).unwrap());
    }
}
