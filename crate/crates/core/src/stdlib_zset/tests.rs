use super::*;

use proptest::prelude::*;

use crate::graph_lang::GraphExpr;
use crate::scheduler::{random_trace, run_trace, Program, Schedule};
use crate::testutil::{rng, run_op, ty};

type Small = ZSetValue<i64, i32>;

fn small() -> impl Strategy<Value = Small> {
    prop::collection::vec((0i64..5, -3i32..=3), 0..6).prop_map(|ps| Small::from_pairs(ps, false))
}

fn int_zset(pairs: &[(i64, i64)], fixed: bool) -> IntZSet {
    IntZSet::from_pairs(pairs.iter().map(|&(k, w)| (Value::Int(k), w)), fixed)
}

fn int_zset_strategy() -> impl Strategy<Value = IntZSet> {
    prop::collection::vec((0i64..5, -3i64..=3), 0..6).prop_map(|ps| int_zset(&ps, true))
}

fn negate(z: &Small) -> Small {
    Small::from_pairs(z.cards.iter().map(|(k, w)| (*k, -w)), false)
}

#[test]
fn zero_weights_are_dropped() {
    let z = int_zset(&[(1, 2), (1, -2), (2, 1)], false);
    assert_eq!(z.cards.len(), 1);
    assert_eq!(z.get(&Value::Int(1)), 0);
    let raw = IntZSet {
        cards: [(Value::Int(3), 0)].into_iter().collect(),
        fixed: false,
    };
    assert!(!raw.member(&ty("zset<int>:B").collection));
}

#[test]
fn concat_adds_weights() {
    let a = int_zset(&[(1, 1), (2, 2)], false);
    let d = int_zset(&[(1, -1), (3, 1)], true);
    assert_eq!(a.concat(&d).unwrap(), int_zset(&[(2, 2), (3, 1)], true));
}

#[test]
fn zset_map_rewrites_weights() {
    let input = Collection::ZSet(int_zset(&[(2, 3), (4, -1)], true));
    let out = run_op(ZSetMap::new(Func::Mul(None)), &["zset<int>:B"], &[input]);
    assert_eq!(out, vec![Collection::ZSet(int_zset(&[(2, 6), (4, -4)], true))]);
}

#[test]
fn zset_map_needs_an_int_weight() {
    let err = ZSetMap::new(Func::Id).signature(&[ty("zset<int>:B")]);
    assert!(matches!(err, Err(TypeError::InvalidParameter { .. })));
}

#[test]
fn zset_join_signature_joins_boundedness() {
    let j = ZSetJoin::default();
    let out = j.signature(&[ty("zset<int>:B"), ty("zset<int>:U")]).unwrap();
    assert_eq!(out, vec![ty("zset<int>:U")]);
    assert!(j.signature(&[ty("zset<int>:B"), ty("zset<str>:B")]).is_err());
}

#[test]
fn zset_join_waits_for_both_terminators() {
    let a = Collection::ZSet(int_zset(&[(1, 2)], true));
    let b = Collection::ZSet(int_zset(&[(1, 3)], false));
    let out = run_op(ZSetJoin::default(), &["zset<int>:B", "zset<int>:U"], &[a, b]);
    assert_eq!(out, vec![Collection::ZSet(int_zset(&[(1, 6)], false))]);
}

proptest! {
    #[test]
    fn plus_is_an_abelian_group(a in small(), b in small(), c in small()) {
        prop_assert_eq!(a.plus(&b), b.plus(&a));
        prop_assert_eq!(a.plus(&b).plus(&c), a.plus(&b.plus(&c)));
        prop_assert_eq!(a.plus(&Small::default()), a.clone());
        prop_assert!(a.plus(&negate(&a)).is_empty());
    }

    #[test]
    fn join_is_bilinear_and_commutative(a in small(), b in small(), c in small()) {
        prop_assert_eq!(a.plus(&b).join(&c), a.join(&c).plus(&b.join(&c)));
        prop_assert_eq!(c.join(&a.plus(&b)), c.join(&a).plus(&c.join(&b)));
        prop_assert_eq!(a.join(&b), b.join(&a));
        prop_assert!(a.join(&Small::default()).is_empty());
    }

    #[test]
    fn join_never_stores_zero_weights(a in small(), b in small()) {
        prop_assert!(a.join(&b).cards.values().all(|w| *w != 0));
        prop_assert!(a.plus(&b).cards.values().all(|w| *w != 0));
    }

    #[test]
    fn incremental_join_matches_batch_join(a in int_zset_strategy(), b in int_zset_strategy(), seed in any::<u64>()) {
        let p = Program::new(&GraphExpr::node(ZSetJoin::default()), vec![ty("zset<int>:B"), ty("zset<int>:B")]).unwrap();
        let ins = [Collection::ZSet(a.clone()), Collection::ZSet(b.clone())];
        let trace = random_trace(&ins, &mut rng(seed));
        let out = run_trace(&p, &trace, &mut Schedule::random(seed), false).unwrap().outputs;
        let mut want = a.join(&b);
        want.fixed = true;
        prop_assert_eq!(out, vec![Collection::ZSet(want)]);
    }
}
