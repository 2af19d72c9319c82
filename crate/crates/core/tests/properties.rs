use chromalg::dieudonne::{exterior_power, honda_module, matrix, validate};
use chromalg::padic::{make_ring, Ring, WittElement};
use chromalg::series;
use num_rational::BigRational;
use proptest::prelude::*;

fn ring_params() -> impl Strategy<Value = (u64, usize, u32)> {
    (prop::sample::select(vec![2u64, 3, 5]), 1usize..=3, 1u32..=6)
}

fn elements(r: &Ring, raw: &[u64]) -> Vec<WittElement> {
    let m = r.modulus();
    raw.chunks(r.degree()).map(|c| r.element(c.iter().map(|x| x % m).collect()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn witt_ring_axioms((p, d, n) in ring_params(), raw in prop::collection::vec(any::<u64>(), 9)) {
        let r = make_ring(p, d, n).unwrap();
        let xs = elements(&r, &raw[..3 * d]);
        let (a, b, c) = (&xs[0], &xs[1], &xs[2]);
        prop_assert!(r.equal(&r.mul(a, b), &r.mul(b, a)));
        prop_assert!(r.equal(&r.mul(&r.mul(a, b), c), &r.mul(a, &r.mul(b, c))));
        prop_assert!(r.equal(&r.mul(a, &r.add(b, c)), &r.add(&r.mul(a, b), &r.mul(a, c))));
        prop_assert!(r.is_zero(&r.add(a, &r.neg(a))));
        prop_assert!(r.equal(&r.frobenius(&r.mul(a, b)), &r.mul(&r.frobenius(a), &r.frobenius(b))));
        prop_assert!(r.equal(&r.frobenius_pow(a, d as i64), a));
        prop_assert!(r.equal(&r.frobenius_inv(&r.frobenius(a)), a));
        if r.is_unit(a) {
            prop_assert!(r.equal(&r.mul(a, &r.inv(a).unwrap()), &r.one()));
        } else {
            prop_assert!(r.inv(a).is_err());
        }
    }

    #[test]
    fn frobenius_is_pth_power_mod_p((p, d, n) in ring_params(), raw in prop::collection::vec(any::<u64>(), 3)) {
        let r = make_ring(p, d, n).unwrap();
        let a = &elements(&r, &raw[..d])[0];
        let diff = r.sub(&r.frobenius(a), &r.pow(a, p));
        prop_assert!(r.valuation(&diff) >= 1);
    }

    #[test]
    fn series_reversion_inverts_composition(coeffs in prop::collection::vec(-9i64..=9, 1..7)) {
        let d = coeffs.len() + 1;
        let mut f = vec![BigRational::from_integer(0.into()), BigRational::from_integer(1.into())];
        f.extend(coeffs.iter().map(|&c| BigRational::from_integer(c.into())));
        let g = series::revert(&f, d).unwrap();
        let id = series::compose(&f, &g, d);
        let mut x = vec![BigRational::from_integer(0.into()); d + 1];
        x[1] = BigRational::from_integer(1.into());
        prop_assert_eq!(&id[..=d], &x[..]);
    }

    #[test]
    fn honda_modules_survive_change_of_basis(
        (p, d, n) in ring_params(),
        h in 1usize..=3,
        raw in prop::collection::vec(any::<u64>(), 27),
    ) {
        let r = make_ring(p, d, n.max(h as u32)).unwrap();
        let m = honda_module(&r, h).unwrap();
        let entries = elements(&r, &raw[..h * h * d]);
        let mut basis: Vec<Vec<WittElement>> = entries.chunks(h).map(<[_]>::to_vec).collect();
        for (i, row) in basis.iter_mut().enumerate() {
            row[i] = r.add(&row[i], &r.one());
        }
        prop_assume!(matrix::rank_mod_p(&r, &basis) == h);
        let conj = m.change_basis(&basis).unwrap();
        prop_assert!(validate(&conj).passed());
        let top = exterior_power(&conj, h).unwrap();
        prop_assert_eq!(top.rank(), 1);
        prop_assert!(validate(&top).passed());
    }
}
