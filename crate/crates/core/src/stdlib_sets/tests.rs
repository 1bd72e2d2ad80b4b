use super::*;

use proptest::prelude::*;

use crate::graph_lang::GraphExpr;
use crate::scheduler::{random_trace, run_trace, Program, Schedule};
use crate::stdlib_seq::{SeqValue, SingletonNat};
use crate::testutil::{rng, run_op, ty, tys};

fn ints(xs: &[i64], fixed: bool) -> Collection {
    Collection::Set(SetValue::of(xs.iter().map(|&n| Value::Int(n)), fixed))
}

fn edges(es: &[(i64, i64)], fixed: bool) -> Collection {
    Collection::Set(SetValue::of(es.iter().map(|&(a, b)| Value::pair(Value::Int(a), Value::Int(b))), fixed))
}

fn nat(n: Option<u64>, fixed: bool) -> Collection {
    Collection::Nat(SingletonNat::new(n, fixed))
}

/// Nested stream of single fixed sets, oldest first.
fn layers(t: &str, sets: &[&[i64]], terminated: bool) -> Collection {
    let arrivals = sets.iter().map(|s| vec![ints(s, true)]).collect();
    Collection::Nested(NestedSeqValue::from_arrivals(vec![ty(t)], arrivals, terminated))
}

fn tuples(c: &Collection) -> Vec<Vec<Collection>> {
    c.as_nested().unwrap().tuples.iter().rev().cloned().collect()
}

/// Runs `op` on chunked inputs under a random schedule.
fn run_chunked(op: Op, types: &[&str], ins: &[Collection], seed: u64) -> Vec<Collection> {
    let p = Program::new(&GraphExpr::node(op), tys(types)).unwrap();
    let trace = random_trace(ins, &mut rng(seed));
    run_trace(&p, &trace, &mut Schedule::random(seed), false).unwrap().outputs
}

#[test]
fn set_concat_is_union_until_fixed() {
    let a = SetValue::of([Value::Int(1)], false);
    let b = a.concat(&SetValue::of([Value::Int(2)], true)).unwrap();
    assert_eq!(b, SetValue::of([Value::Int(1), Value::Int(2)], true));
    assert_eq!(b.concat(&SetValue::of([Value::Int(3)], false)).unwrap(), b);
}

#[test]
fn edge_join_emits_successors() {
    let out = run_op(
        edge_join(),
        &["set<int>:B", "set<(int,int)>:B"],
        &[ints(&[1, 3], true), edges(&[(1, 2), (2, 4), (3, 1)], true)],
    );
    assert_eq!(out, vec![ints(&[1, 2], true)]);
}

#[test]
fn edge_join_checks_edge_type() {
    let err = EdgeJoin::default().signature(&tys(&["set<int>:B", "set<(str,str)>:B"]));
    assert!(matches!(err, Err(TypeError::SubtypeMismatch { position: 1, .. })));
}

#[test]
fn set_union_forwards_both_sides() {
    let out = run_op(set_union(), &["set<int>:U", "set<int>:B"], &[ints(&[1], false), ints(&[2], true)]);
    assert_eq!(out, vec![ints(&[1, 2], false)]);
}

#[test]
fn repeat_nested_emits_k_copies_once_everything_is_fixed() {
    let types = ["set<int>:B", "nat:B"];
    let out = run_op(repeat_nested(), &types, &[ints(&[7], true), nat(Some(3), true)]);
    assert_eq!(out, vec![layers("set<int>:B", &[&[7], &[7], &[7]], true)]);
    let waiting = run_op(repeat_nested(), &types, &[ints(&[7], true), nat(Some(3), false)]);
    assert_eq!(waiting, vec![layers("set<int>:B", &[], false)]);
    let zero = run_op(repeat_nested(), &types, &[ints(&[7], true), nat(Some(0), true)]);
    assert_eq!(zero, vec![layers("set<int>:B", &[], true)]);
}

#[test]
fn repeat_nested_requires_bounded_inputs() {
    let err = RepeatNested::default().signature(&tys(&["set<int>:U", "nat:B"]));
    assert!(matches!(err, Err(TypeError::BoundednessViolation { position: 0, .. })));
}

#[test]
fn zip_truncates_at_the_shorter_side() {
    let l = layers("set<int>:B", &[&[1], &[2]], true);
    let r = layers("set<int>:B", &[&[10], &[20], &[30]], true);
    let out = run_op(zip(), &["[set<int>:B]:B", "[set<int>:B]:B"], &[l, r]);
    let got = tuples(&out[0]);
    assert_eq!(got, vec![vec![ints(&[1], true), ints(&[10], true)], vec![ints(&[2], true), ints(&[20], true)]]);
    assert!(out[0].is_fixed());
}

#[test]
fn zip_padded_fills_the_shorter_side() {
    let l = layers("set<int>:B", &[&[1]], true);
    let r = layers("set<int>:B", &[&[10], &[20]], true);
    let out = run_op(zip_padded(), &["[set<int>:B]:B", "[set<int>:B]:B"], &[l, r]);
    let got = tuples(&out[0]);
    assert_eq!(got, vec![vec![ints(&[1], true), ints(&[10], true)], vec![ints(&[], true), ints(&[20], true)]]);
    assert!(out[0].is_fixed());
}

#[test]
fn zip_padded_is_typed_for_bounded_inputs_only() {
    let z = Zip { padded: true, ..Zip::default() };
    let err = z.signature(&tys(&["[set<int>:B]:U", "[set<int>:B]:B"]));
    assert!(matches!(err, Err(TypeError::BoundednessViolation { position: 0, .. })));
    let plain = Zip::default().signature(&tys(&["[set<int>:B]:U", "[seq<int>:U]:B"])).unwrap();
    assert_eq!(plain, vec![ty("[set<int>:B,seq<int>:U]:U")]);
}

#[test]
fn zip_keeps_the_open_tuple_open() {
    let l = Collection::Nested(NestedSeqValue::from_arrivals(vec![ty("set<int>:B")], vec![vec![ints(&[1], false)]], false));
    let r = layers("set<int>:B", &[&[5]], false);
    let out = run_op(zip(), &["[set<int>:B]:U", "[set<int>:B]:U"], &[l, r]);
    assert_eq!(tuples(&out[0]), vec![vec![ints(&[1], false), ints(&[5], true)]]);
    assert!(!out[0].is_fixed());
}

#[test]
fn nest_once_wraps_one_tuple() {
    let out = run_op(nest_once(), &["set<int>:B"], &[ints(&[1, 2], true)]);
    assert_eq!(out, vec![layers("set<int>:B", &[&[1, 2]], true)]);
    let open = run_op(nest_once(), &["seq<int>:U"], &[Collection::Seq(SeqValue::ints(&[4], false))]);
    let want = NestedSeqValue::from_arrivals(vec![ty("seq<int>:B")], vec![vec![Collection::Seq(SeqValue::ints(&[4], false))]], false);
    assert_eq!(open, vec![Collection::Nested(want)]);
}

proptest! {
    #[test]
    fn edge_join_matches_relational_oracle(
        ns in prop::collection::btree_set(0i64..5, 0..4),
        es in prop::collection::btree_set((0i64..5, 0i64..5), 0..8),
        seed in any::<u64>(),
    ) {
        let nv: Vec<i64> = ns.iter().copied().collect();
        let ev: Vec<(i64, i64)> = es.iter().copied().collect();
        let out = run_chunked(edge_join(), &["set<int>:B", "set<(int,int)>:B"], &[ints(&nv, true), edges(&ev, true)], seed);
        let want: Vec<i64> = es.iter().filter(|(s, _)| ns.contains(s)).map(|&(_, d)| d).collect();
        prop_assert_eq!(out, vec![ints(&want, true)]);
    }

    #[test]
    fn set_union_matches_union(a in prop::collection::vec(0i64..6, 0..5), b in prop::collection::vec(0i64..6, 0..5), seed in any::<u64>()) {
        let out = run_chunked(set_union(), &["set<int>:B", "set<int>:B"], &[ints(&a, true), ints(&b, true)], seed);
        let all: Vec<i64> = a.iter().chain(&b).copied().collect();
        prop_assert_eq!(out, vec![ints(&all, true)]);
    }

    #[test]
    fn zip_length_is_min_and_padded_length_is_max(n in 0usize..4, m in 0usize..4, seed in any::<u64>()) {
        let mk = |k: usize| layers("set<int>:B", &vec![&[0i64][..]; k], true);
        let types = ["[set<int>:B]:B", "[set<int>:B]:B"];
        let plain = run_chunked(zip(), &types, &[mk(n), mk(m)], seed);
        let padded = run_chunked(zip_padded(), &types, &[mk(n), mk(m)], seed);
        prop_assert_eq!(tuples(&plain[0]).len(), n.min(m));
        prop_assert_eq!(tuples(&padded[0]).len(), n.max(m));
        prop_assert!(plain[0].is_fixed() && padded[0].is_fixed());
    }
}
