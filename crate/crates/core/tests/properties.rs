use proptest::prelude::*;

use mpomps::mps::{distance, product_relative_error};
use mpomps::random::{random_mpo, random_mps};
use mpomps::sketch::{EntryDist, KhatriRaoSketch};
use mpomps::src::{src_multiply, src_multiply_sum, TruncationPolicy};
use mpomps::tensor::contract;
use mpomps::{DenseTensor, Direction, Mpo, Mps, Truncation, C64};

fn dense_rel(a: &Mps, b: &DenseTensor) -> f64 {
    a.to_dense().unwrap().sub(b).unwrap().norm() / b.norm()
}

#[derive(Debug, Clone, Copy)]
struct Case {
    n: usize,
    d: usize,
    bond: usize,
    chi: usize,
    seed: u64,
}

fn cases() -> impl Strategy<Value = Case> {
    (3usize..=6, 2usize..=3, 1usize..=3, 1usize..=4, any::<u64>()).prop_map(|(n, d, bond, chi, seed)| Case {
        n,
        d,
        bond,
        chi,
        seed,
    })
}

fn instance(c: Case) -> (Mpo, Mps) {
    (
        random_mpo(c.n, c.d, c.bond, -0.5, c.seed).unwrap(),
        random_mps(c.n, c.d, c.chi, -0.5, c.seed ^ 1).unwrap(),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn src_is_exact_at_full_bond(c in cases()) {
        let (h, psi) = instance(c);
        let want = h.apply_exact(&psi).unwrap().to_dense().unwrap();
        let full = c.bond * c.chi;
        let out = src_multiply(&h, &psi, &TruncationPolicy::FixedBond { chi_bar: full }, c.seed).unwrap().mps;
        prop_assert!(dense_rel(&out, &want) <= 1e-10);
        prop_assert!(out.isometry_defect(Direction::Right) <= 1e-10);
    }

    #[test]
    fn product_is_linear_in_the_state(c in cases(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let (h, psi) = instance(c);
        let phi = random_mps(c.n, c.d, c.chi, -0.5, c.seed ^ 2).unwrap();
        let combo = psi.scaled(C64::new(a, 0.0)).add(C64::new(b, 0.0), &phi).unwrap();
        let lhs = h.apply_exact(&combo).unwrap();
        let rhs = h
            .apply_exact(&psi)
            .unwrap()
            .scaled(C64::new(a, 0.0))
            .add(C64::new(b, 0.0), &h.apply_exact(&phi).unwrap())
            .unwrap();
        let scale = rhs.norm().max(1e-300);
        prop_assert!(distance(&lhs, &rhs).unwrap() <= 1e-10 * scale);
    }

    #[test]
    fn sums_of_products_are_exact_at_full_bond(c in cases(), a in -2.0f64..2.0) {
        let (h, psi) = instance(c);
        let g = random_mpo(c.n, c.d, c.bond, -0.5, c.seed ^ 3).unwrap();
        let phi = random_mps(c.n, c.d, c.chi, -0.5, c.seed ^ 4).unwrap();
        let coeff = C64::new(a, 0.5);
        let terms = [(C64::new(1.0, 0.0), &h, &psi), (coeff, &g, &phi)];
        let full = 2 * c.bond * c.chi;
        let out = src_multiply_sum(&terms, &TruncationPolicy::FixedBond { chi_bar: full }, c.seed).unwrap().mps;
        let want = h
            .apply_exact(&psi)
            .unwrap()
            .add(coeff, &g.apply_exact(&phi).unwrap())
            .unwrap()
            .to_dense()
            .unwrap();
        prop_assert!(dense_rel(&out, &want) <= 1e-9);
    }

    #[test]
    fn rounding_error_shrinks_with_rank(c in cases()) {
        let (h, psi) = instance(c);
        let exact = h.apply_exact(&psi).unwrap();
        let mut last = f64::INFINITY;
        for k in 1..=c.bond * c.chi {
            let err = product_relative_error(&exact.truncate(Truncation::MaxRank(k)).unwrap(), &h, &psi).unwrap();
            prop_assert!(err <= last + 1e-12);
            last = err;
        }
        prop_assert!(last <= 1e-10);
    }

    #[test]
    fn canonical_forms_preserve_the_state(c in cases()) {
        let (_, psi) = instance(c);
        let want = psi.to_dense().unwrap();
        for dir in [Direction::Left, Direction::Right] {
            let canon = psi.canonicalize(dir).unwrap();
            prop_assert!(dense_rel(&canon, &want) <= 1e-12);
            prop_assert!(canon.isometry_defect(dir) <= 1e-12);
            prop_assert!((canon.norm() - want.norm()).abs() <= 1e-12 * want.norm());
        }
    }

    #[test]
    fn inner_product_matches_dense(c in cases()) {
        let (_, psi) = instance(c);
        let phi = random_mps(c.n, c.d, c.chi, -1.0, c.seed ^ 5).unwrap();
        let (a, b) = (psi.to_dense().unwrap(), phi.to_dense().unwrap());
        let dense: C64 = a.data().iter().zip(b.data()).map(|(x, y)| x.conj() * y).sum();
        prop_assert!((psi.inner(&phi).unwrap() - dense).norm() <= 1e-12 * a.norm() * b.norm());
    }

    #[test]
    fn sketch_growth_keeps_its_prefix(p in 1usize..6, extra in 1usize..6, seed in any::<u64>()) {
        let dims = [2, 3, 2];
        let small = KhatriRaoSketch::new(&dims, p, seed, EntryDist::Complex).unwrap();
        let grown = small.grow(extra).unwrap();
        let direct = KhatriRaoSketch::new(&dims, p + extra, seed, EntryDist::Complex).unwrap();
        for site in 0..dims.len() {
            let a = small.omega(site);
            let b = grown.omega(site);
            prop_assert_eq!(b.clone(), direct.omega(site));
            prop_assert_eq!(b.slice_axis(1, 0..p).unwrap(), a);
        }
    }

    #[test]
    fn contraction_matches_loops(m in 1usize..4, k in 1usize..4, n in 1usize..4, seed in any::<u64>()) {
        let a = random_mps(3, 2, 2, -1.0, seed).unwrap().to_dense().unwrap();
        let a = DenseTensor::from_fn(&[m, k, 2], |ix| a.data()[(ix[0] * 7 + ix[1] * 3 + ix[2]) % a.len()]);
        let b = DenseTensor::from_fn(&[k, n], |ix| C64::new(ix[0] as f64 - 0.5 * ix[1] as f64, ix[1] as f64));
        let got = contract(&a, &b, &[(1, 0)]).unwrap();
        for i in 0..m {
            for s in 0..2 {
                for j in 0..n {
                    let want: C64 = (0..k).map(|l| a.get(&[i, l, s]) * b.get(&[l, j])).sum();
                    prop_assert!((got.get(&[i, s, j]) - want).norm() <= 1e-12);
                }
            }
        }
    }
}
