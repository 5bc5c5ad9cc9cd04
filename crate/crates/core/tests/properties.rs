use num_complex::Complex64;
use proptest::prelude::*;

use wtchaos::ensemble::SpectralEnsemble;
use wtchaos::euler::leray_mode;
use wtchaos::model::ToyModel;
use wtchaos::moments::{oracle_moment, structural_moment, MomentQuery};
use wtchaos::ntree::{enumerate_trees, PolishCode};
use wtchaos::pairing::{enumerate_pairings, sigma_dimension, BlockIndexSet, SigmaStatus};
use wtchaos::KVec;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_bit_strings_decode_only_when_valid(arity in 2usize..5, bits in prop::collection::vec(0u8..2, 1..20)) {
        let code = PolishCode::new(bits.clone(), arity);
        // A valid code has one more leaf per (N−1) ones than it has ones.
        let ones = bits.iter().filter(|&&b| b == 1).count();
        let mut open = 1i64;
        let mut ok = true;
        for &b in &bits {
            if open <= 0 {
                ok = false;
            }
            open += if b == 1 { arity as i64 - 1 } else { -1 };
        }
        ok &= open == 0 && bits.len() == arity * ones + 1;
        match code.decode() {
            Ok(t) => {
                prop_assert!(ok);
                prop_assert_eq!(t.encode(), code);
                prop_assert_eq!(t.nodes(), ones);
            }
            Err(_) => prop_assert!(!ok),
        }
    }

    #[test]
    fn tree_leaves_follow_arity(arity in 2usize..5, n in 0usize..5) {
        for t in enumerate_trees(arity, n).unwrap() {
            prop_assert_eq!(t.leaves(), (arity - 1) * n + 1);
        }
    }

    #[test]
    fn pairings_are_involutions_and_dimension_is_consistent(
        orders in prop::collection::vec(0usize..3, 1..4),
        ks in prop::collection::vec(prop_oneof![-3i64..0, 1i64..4], 4),
    ) {
        let set = BlockIndexSet::for_orders(2, &orders);
        prop_assume!(set.len().is_multiple_of(2) && set.len() <= 8);
        let freqs: Vec<KVec> = ks[..orders.len()].iter().map(|&k| KVec::d1(k)).collect();
        for sigma in enumerate_pairings(&set).unwrap() {
            for m in 0..sigma.len() {
                prop_assert_ne!(sigma.partner(m), m);
                prop_assert_eq!(sigma.partner(sigma.partner(m)), m);
            }
            let g = sigma_dimension(&sigma, &set, &freqs).unwrap();
            if g.status == SigmaStatus::Nonempty {
                prop_assert_eq!(g.s_sigma + orders.len(), set.len() / 2 + g.orbits.len());
            }
        }
    }

    #[test]
    fn structural_equals_oracle_on_random_queries(
        atoms in prop::collection::vec((0usize..2, prop_oneof![-2i64..0, 1i64..3]), 1..4),
        t in 0.0f64..1.0,
    ) {
        let ens = SpectralEnsemble::from_profile(1, 1, 4, 0.5, |xi| vec![1.0 + xi[0] * xi[0]]).unwrap();
        let orders: Vec<usize> = atoms.iter().map(|a| a.0).collect();
        let ks: Vec<KVec> = atoms.iter().map(|a| KVec::d1(a.1)).collect();
        let q = MomentQuery::scalar(&orders, &ks, t);
        let s = structural_moment(&ToyModel, &ens, &q).unwrap();
        let o = oracle_moment(&ToyModel, &ens, &q).unwrap();
        prop_assert!((s - o).norm() <= 1e-10 * s.norm().max(o.norm()).max(1e-300), "{s} vs {o}");
    }

    #[test]
    fn leray_is_an_orthogonal_projection(
        xi in prop::array::uniform3(-3.0f64..3.0),
        v in prop::array::uniform3((-1.0f64..1.0, -1.0f64..1.0)),
    ) {
        prop_assume!(xi.iter().map(|e| e * e).sum::<f64>() > 1e-6);
        let v: Vec<Complex64> = v.iter().map(|&(a, b)| Complex64::new(a, b)).collect();
        let p = leray_mode(&xi, &v).unwrap();
        let pp = leray_mode(&xi, &p).unwrap();
        let div: Complex64 = xi.iter().zip(&p).map(|(e, c)| c * *e).sum();
        let norm = |w: &[Complex64]| w.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(div.norm() <= 1e-13);
        prop_assert!(p.iter().zip(&pp).all(|(a, b)| (a - b).norm() <= 1e-14));
        prop_assert!(norm(&p) <= norm(&v) * (1.0 + 1e-15));
    }
}
