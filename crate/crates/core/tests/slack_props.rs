mod common;

use common::{big, comp};
use espp::json::InstanceJson;
use espp::slack::{slack, slack_at, slack_block_ends, slack_naive, SlackRange};
use espp::{validate_espp, Composition};
use num_bigint::BigInt;
use num_traits::Signed;
use proptest::prelude::*;

/// A valid `(n, k)` pair with a random non-descending composition.
fn instance() -> impl Strategy<Value = (u64, u64, Vec<u64>)> {
    (2u64..=60)
        .prop_flat_map(|n| {
            let ks = common::valid_ks(n);
            (Just(n), proptest::sample::select(ks), any::<u64>())
        })
        .prop_map(|(n, k, seed)| {
            let mut rng = common::rng(seed);
            let parts = common::random_composition(&mut rng, n, k);
            (n, k, parts)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn critical_indices_match_naive((n, k, parts) in instance()) {
        let c = comp(&parts);
        for range in [SlackRange::Complete, SlackRange::Prefix] {
            let fast = slack(&big(n), &big(k), &c, range).unwrap();
            let naive = slack_naive(&big(n), &big(k), &c, range).unwrap();
            prop_assert_eq!(fast, naive);
        }
    }

    #[test]
    fn block_ends_decide_the_sign((n, k, parts) in instance()) {
        let c = comp(&parts);
        let full = slack(&big(n), &big(k), &c, SlackRange::Complete).unwrap();
        // Over all of 1..=k the last block end contributes slack_k = 0.
        let ends = slack_block_ends(&big(n), &big(k), &c, SlackRange::Prefix).unwrap().unwrap();
        if let Some(f) = &full {
            prop_assert_eq!(f.value.is_negative(), ends.value.is_negative());
        }
        let all = slack(&big(n), &big(k), &c, SlackRange::Prefix).unwrap().unwrap();
        prop_assert!(all.value <= ends.value);
    }

    #[test]
    fn last_index_is_zero((n, k, parts) in instance()) {
        let c = comp(&parts);
        let v = slack_at(&big(n), &big(k), &c, &big(k), SlackRange::Prefix).unwrap();
        prop_assert_eq!(v, BigInt::from(0));
    }

    #[test]
    fn instance_json_round_trip((n, k, parts) in instance()) {
        let c = comp(&parts);
        let text = serde_json::to_string(&InstanceJson::new(&big(n), &big(k), &c)).unwrap();
        let back: InstanceJson = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back.composition().unwrap(), c);
    }

    #[test]
    fn blocks_and_parts_agree(parts in proptest::collection::vec(1u64..6, 1..30)) {
        let mut parts = parts;
        parts.sort_unstable();
        let c = comp(&parts);
        prop_assert_eq!(c.parts().unwrap(), parts.clone());
        let blocks = Composition::from_blocks(c.blocks().iter().map(|b| (b.size, b.mult.clone()))).unwrap();
        prop_assert_eq!(blocks, c);
    }
}

#[test]
fn first_block_minimum_is_not_at_its_end() {
    let c = comp(&[4, 4, 4]);
    let full = slack(&big(20), &big(5), &c, SlackRange::Prefix).unwrap().unwrap();
    let ends = slack_block_ends(&big(20), &big(5), &c, SlackRange::Prefix).unwrap().unwrap();
    assert_eq!(full.index, BigInt::from(1));
    assert_eq!((full.value, ends.value), (BigInt::from(32), BigInt::from(48)));
}

#[test]
fn single_part_is_vacuous() {
    let inst = validate_espp(&big(5), &big(1), &[5]).unwrap();
    assert!(inst.slack().is_none());
}

#[test]
fn large_multiplicities_stay_symbolic() {
    // 2H | 5H(5H+1)/2 needs H = 3 mod 4.
    let huge = BigInt::from(10u64).pow(30) + 3u32;
    let c = Composition::from_blocks([(2, huge.clone()), (3, huge.clone())]).unwrap();
    let n = &huge * 5u32;
    let k = &huge * 2u32;
    let v = slack(&n, &k, &c, SlackRange::Complete).unwrap().unwrap();
    assert!(v.index <= k);
}
