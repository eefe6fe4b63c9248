mod common;

use common::big;
use espp::criteria::{certify_unsolvable, criterion1, criterion3, criterion3_raw, Criterion, InstanceRef};
use espp::oracle::{brute_solve, valid_instances, Verdict, DEFAULT_BUDGET};
use espp::slack::target_sum;
use espp::{complete_incomplete, validate_espp, Composition, IncompleteInstance};
use num_bigint::BigInt;
use proptest::prelude::*;

/// `(n, k, blocks)` with a leading block of 2s and a few larger blocks.
fn prefix() -> impl Strategy<Value = (u64, u64, Vec<(u64, u64)>)> {
    (20u64..400)
        .prop_flat_map(|n| {
            let ks: Vec<u64> = common::valid_ks(n).into_iter().filter(|&k| k >= 4 && 3 * k <= 2 * n).collect();
            let ks = if ks.is_empty() { vec![1] } else { ks };
            (
                Just(n),
                proptest::sample::select(ks),
                1u64..200,
                proptest::collection::vec((1u64..4, 1u64..80), 0..4),
            )
        })
        .prop_filter_map("needs k >= 4", |(n, k, twos, rest)| {
            if k < 4 {
                return None;
            }
            let mut blocks = vec![(2u64, twos)];
            let mut size = 2;
            for (step, mult) in rest {
                size += step;
                blocks.push((size, mult));
            }
            Some((n, k, blocks))
        })
}

fn composition(blocks: &[(u64, u64)]) -> Composition {
    Composition::from_blocks(blocks.iter().map(|&(s, m)| (s, BigInt::from(m)))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn segment_shortcut_matches_full_scan((n, k, blocks) in prefix()) {
        let c = composition(&blocks);
        let s = target_sum(&big(n), &big(k)).unwrap();
        let fast = criterion3_raw(&big(n), &big(k), &s, &c, 0).unwrap();
        let slow = criterion3_raw(&big(n), &big(k), &s, &c, u64::MAX).unwrap();
        prop_assert_eq!(fast.clone(), slow);
        if let Some(r) = fast {
            prop_assert!(r.recheck());
        }
    }

    #[test]
    fn criterion1_witnesses_recheck((n, k, blocks) in prefix()) {
        prop_assume!(blocks.len() >= 2);
        let c = composition(&blocks[..2]);
        if let Ok(inst) = IncompleteInstance::new(big(n), big(k), c) {
            if let Ok(Some(r)) = criterion1(&inst) {
                prop_assert_eq!(r.criterion, Criterion::C1);
                prop_assert!(r.recheck());
            }
        }
    }
}

#[test]
fn certificates_agree_with_the_oracle() {
    let mut fired = 0;
    for (n, k, parts) in valid_instances(40, 13) {
        if parts[0] != 2 {
            continue;
        }
        let inst = validate_espp(&big(n), &big(k), &parts).unwrap();
        if let Some(r) = certify_unsolvable(InstanceRef::Complete(&inst)) {
            assert!(r.recheck());
            let (v, _) = brute_solve(&inst, DEFAULT_BUDGET);
            assert_eq!(v, Verdict::Unsolvable, "({n}, {k}, {parts:?}) certified by {:?}", r.criterion);
            fired += 1;
        }
    }
    assert!(fired > 0);
}

#[test]
fn example_39_fires_criterion_1() {
    let prefix = Composition::from_blocks([(2, big(9)), (3, big(2))]).unwrap();
    let inc = IncompleteInstance::new(big(39), big(13), prefix).unwrap();
    let r = criterion1(&inc).unwrap().unwrap();
    assert!(r.recheck());
    let full = complete_incomplete(&inc).unwrap();
    assert_eq!(brute_solve(&full, DEFAULT_BUDGET).0, Verdict::Unsolvable);
    assert!(criterion3(InstanceRef::Incomplete(&inc)).is_ok());
}

#[test]
fn wrong_shapes_are_errors() {
    let prefix = Composition::from_parts(&[3, 3]).unwrap();
    let inc = IncompleteInstance::new(big(39), big(13), prefix).unwrap();
    assert!(criterion1(&inc).is_err());
    assert!(criterion3(InstanceRef::Incomplete(&inc)).is_err());
}
