use proptest::prelude::*;
use qrmat::field::rat;
use qrmat::rmatrix::{block_keys, compositions, sl2_element, slnfinal_element, MultiIndex, NormalizationMode, Weight};
use qrmat::stochastic::{column_sums, StochasticPath};
use qrmat::{EvalPoint, Field, Scalar};

fn unit() -> impl Strategy<Value = Scalar> {
    (2i64..=40).prop_flat_map(|d| (1..d).prop_map(move |n| rat(n, d)))
}

fn positive() -> impl Strategy<Value = Scalar> {
    (1i64..=40, 1i64..=40).prop_map(|(n, d)| rat(n, d))
}

fn entry(n: usize, wi: i64, wj: i64, v: [&MultiIndex; 4], pt: &EvalPoint<Scalar>) -> qrmat::Result<Scalar> {
    slnfinal_element(n, &Weight::Int(wi), &Weight::Int(wj), v[0], v[1], v[2], v[3], pt, NormalizationMode::BEqualsOne)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn unconserved_entries_vanish(r in unit(), l in positive(), wi in 0i64..=2, wj in 0i64..=2, pick in any::<[prop::sample::Index; 4]>()) {
        let pt = EvalPoint::new(r, l).unwrap();
        let (ci, cj) = (compositions(2, wi), compositions(2, wj));
        let [a, b, c, d] = pick;
        let idx = [a.get(&ci), b.get(&cj), c.get(&ci), d.get(&cj)];
        if idx[0].checked_add(idx[1]) != idx[2].checked_add(idx[3]) {
            match entry(3, wi, wj, idx, &pt) {
                Ok(v) => prop_assert!(v.is_zero()),
                Err(e) => prop_assert!(e.is_resonance()),
            }
        }
    }

    #[test]
    fn sl2_matches_general_rank(r in unit(), l in positive(), wi in 0i64..=3, wj in 0i64..=3) {
        let pt = EvalPoint::new(r, l).unwrap();
        for k in block_keys(2, wi, wj) {
            let [i, j, ip, jp] = [&k.i, &k.j, &k.ip, &k.jp].map(|v| v.parts()[0]);
            match (sl2_element(&Weight::Int(wi), &Weight::Int(wj), i, j, ip, jp, &pt), entry(2, wi, wj, [&k.i, &k.j, &k.ip, &k.jp], &pt)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(a), Err(b)) => prop_assert!(a.is_resonance() && b.is_resonance()),
                (a, b) => prop_assert!(false, "{a:?} vs {b:?} at {k}"),
            }
        }
    }

    #[test]
    fn stochastic_columns_sum_to_one(r in unit(), l in positive(), wi in 0i64..=2, wj in 0i64..=2, n in 2usize..=3) {
        let pt = EvalPoint::new(r, l).unwrap();
        if let Ok(sums) = column_sums(n, wi, wj, &pt, StochasticPath::Twisted) {
            for v in sums.values() {
                prop_assert!(v.is_one());
            }
        }
    }

    #[test]
    fn anchor_is_one(r in unit(), l in positive(), wi in 0i64..=4, wj in 0i64..=4, n in 2usize..=4) {
        let pt = EvalPoint::new(r, l).unwrap();
        let z = MultiIndex::zeros(n - 1);
        if let Ok(v) = entry(n, wi, wj, [&z, &z, &z, &z], &pt) {
            prop_assert!(v.is_one());
        }
    }
}
