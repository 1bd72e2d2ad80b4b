use super::*;

use proptest::prelude::*;

use crate::func::Func;
use crate::scheduler::{random_trace, run_trace, Program, Schedule};
use crate::stdlib_seq::{fold, id, map, tee, SeqValue};
use crate::stdlib_sets::{set_union, SetValue};
use crate::testutil::{rng, run_op, ty, tys};
use crate::value::Value;

fn n(op: impl Into<Op>) -> GraphExpr {
    GraphExpr::node(op)
}

fn seq(arrivals: &[i64], terminated: bool) -> Collection {
    Collection::Seq(SeqValue::from_arrivals(arrivals.iter().map(|&n| Value::Int(n)), terminated))
}

fn ints(xs: &[i64], fixed: bool) -> Collection {
    Collection::Set(SetValue::of(xs.iter().map(|&n| Value::Int(n)), fixed))
}

fn nested(inner: &str, arrivals: Vec<Vec<Collection>>, terminated: bool) -> NestedSeqValue {
    NestedSeqValue::from_arrivals(vec![ty(inner)], arrivals, terminated)
}

/// Per tuple: the union of this tuple's set with every earlier one.
fn running_union() -> GraphExpr {
    GraphExpr::seq_all(vec![
        GraphExpr::par(n(read_defer("acc", ty("set<int>:B").collection, None)), n(id())),
        n(set_union()),
        n(tee()),
        GraphExpr::par(n(id()), n(write_defer("acc"))),
    ])
}

#[test]
fn push_requires_complete_leftmost_tuple() {
    let v = nested("seq<int>:B", vec![vec![seq(&[1], false)]], false);
    let push = NestedDelta { ops: vec![NestedOp::Push(vec![seq(&[], false)])], end: false };
    assert_eq!(v.concat(&push), Err(ConcatError::BoundednessInvariantViolation));
    let u = nested("seq<int>:U", vec![vec![seq(&[1], false)]], false);
    assert!(u.concat(&push).is_ok());
}

#[test]
fn extend_and_arity_errors() {
    let empty = NestedSeqValue::empty(tys(&["seq<int>:B"]));
    let ext = NestedDelta { ops: vec![NestedOp::Extend(vec![Delta::End])], end: false };
    assert_eq!(empty.concat(&ext), Err(ConcatError::ExtendOnEmpty));
    let wide = NestedDelta { ops: vec![NestedOp::Push(vec![seq(&[], true), seq(&[], true)])], end: false };
    assert!(matches!(empty.concat(&wide), Err(ConcatError::NestedArity { expected: 1, found: 2 })));
}

#[test]
fn extend_grows_only_the_leftmost_tuple() {
    let v = nested("seq<int>:B", vec![vec![seq(&[1], true)], vec![seq(&[2], false)]], false);
    let ext = NestedDelta { ops: vec![NestedOp::Extend(vec![Delta::Seq(SeqValue::ints(&[3], true))])], end: true };
    let out = v.concat(&ext).unwrap();
    assert_eq!(out, nested("seq<int>:B", vec![vec![seq(&[1], true)], vec![seq(&[2, 3], true)]], true));
}

#[test]
fn fix_closes_bounded_components_of_the_leftmost_tuple() {
    let v = NestedSeqValue::from_arrivals(tys(&["seq<int>:B", "seq<int>:U"]), vec![vec![seq(&[1], false), seq(&[2], false)]], false);
    let f = v.fix();
    assert!(f.terminated);
    assert_eq!(f.tuples[0], vec![seq(&[1], true), seq(&[2], false)]);
}

#[test]
fn membership_requires_older_tuples_complete() {
    let tag = ty("[seq<int>:B]:U").collection;
    let ok = nested("seq<int>:B", vec![vec![seq(&[1], true)], vec![seq(&[2], false)]], false);
    assert!(ok.member(&tag));
    let bad = nested("seq<int>:B", vec![vec![seq(&[1], false)], vec![seq(&[2], false)]], false);
    assert!(!bad.member(&tag));
}

#[test]
fn nest_runs_the_body_per_tuple() {
    let input = nested("seq<int>:B", vec![vec![seq(&[1, 2], true)], vec![seq(&[5], false)]], false);
    let out = run_op(nest(n(map(Func::Inc))), &["[seq<int>:B]:U"], &[Collection::Nested(input)]);
    let want = nested("seq<int>:B", vec![vec![seq(&[2, 3], true)], vec![seq(&[6], false)]], false);
    assert_eq!(out, vec![Collection::Nested(want)]);
}

#[test]
fn nest_of_fold_emits_one_total_per_closed_tuple() {
    let body = n(fold(Value::Int(0), Func::Add(None)));
    let input = nested("seq<int>:B", vec![vec![seq(&[1, 2], true)], vec![seq(&[3, 4], true)]], true);
    let out = run_op(nest(body), &["[seq<int>:B]:B"], &[Collection::Nested(input)]);
    let want = nested("seq<int>:B", vec![vec![seq(&[3], true)], vec![seq(&[7], true)]], true);
    assert_eq!(out, vec![Collection::Nested(want)]);
}

#[test]
fn nest_over_empty_terminated_input_terminates() {
    let input = NestedSeqValue::empty(tys(&["seq<int>:B"])).terminate();
    let out = run_op(nest(n(map(Func::Inc))), &["[seq<int>:B]:B"], &[Collection::Nested(input)]);
    assert!(out[0].is_fixed());
    assert_eq!(out[0].content_size(), 0);
}

#[test]
fn deferred_values_flow_between_iterations() {
    let input = nested("set<int>:B", vec![vec![ints(&[1], true)], vec![ints(&[2], true)], vec![ints(&[3], true)]], true);
    let out = run_op(nest(running_union()), &["[set<int>:B]:B"], &[Collection::Nested(input)]);
    let want = nested("set<int>:B", vec![vec![ints(&[1], true)], vec![ints(&[1, 2], true)], vec![ints(&[1, 2, 3], true)]], true);
    assert_eq!(out, vec![Collection::Nested(want)]);
}

#[test]
fn nest_body_outputs_must_be_bounded() {
    let err = Nest::new(n(id())).signature(&tys(&["[seq<int>:U]:U"]));
    assert_eq!(err, Err(TypeError::NestOutputUnbounded { position: 0 }));
}

#[test]
fn defer_keys_are_scoped_to_nest_bodies() {
    let tag = ty("set<int>:B").collection;
    let top = Program::new(&n(read_defer("k", tag.clone(), None)), vec![]);
    assert_eq!(top.err(), Some(TypeError::DeferKeyUnbound("k".into())));
    let unwritten = Nest::new(n(read_defer("k", tag.clone(), None))).signature(&tys(&["[nat:B]:U"]));
    assert_eq!(unwritten, Err(TypeError::DeferKeyReusedOrUnused("k".into())));
    let twice = GraphExpr::seq(n(tee()), GraphExpr::par(n(write_defer("k")), n(write_defer("k"))));
    let err = Nest::new(twice).signature(&tys(&["[set<int>:B]:U"]));
    assert_eq!(err, Err(TypeError::DeferKeyReusedOrUnused("k".into())));
}

#[test]
fn defer_reads_and_writes_must_agree_on_type() {
    let body = GraphExpr::seq(
        GraphExpr::par(n(read_defer("k", ty("set<int>:B").collection, None)), n(write_defer("k"))),
        n(id()),
    );
    let err = Nest::new(body).signature(&tys(&["[seq<int>:B]:U"]));
    assert_eq!(err, Err(TypeError::DeferContextMismatch("k".into())));
}

#[test]
fn read_defer_initial_value_must_match_its_type() {
    let r = ReadDefer::new("k", ty("set<int>:B").collection, Some(seq(&[], true)));
    assert!(matches!(r.signature(&[]), Err(TypeError::InvalidParameter { .. })));
}

proptest! {
    #[test]
    fn running_union_matches_prefix_unions(
        sets in prop::collection::vec(prop::collection::vec(0i64..6, 0..4), 0..4),
        closed: bool,
        seed in any::<u64>(),
    ) {
        let input = nested("set<int>:B", sets.iter().map(|s| vec![ints(s, true)]).collect(), closed);
        let p = Program::new(&n(nest(running_union())), tys(&["[set<int>:B]:U"])).unwrap();
        let ins = [Collection::Nested(input)];
        let trace = random_trace(&ins, &mut rng(seed));
        let out = run_trace(&p, &trace, &mut Schedule::random(seed), false).unwrap().outputs;
        let mut acc = Vec::new();
        let want: Vec<Vec<Collection>> = sets.iter().map(|s| {
            acc.extend(s.iter().copied());
            vec![ints(&acc, true)]
        }).collect();
        prop_assert_eq!(out, vec![Collection::Nested(nested("set<int>:B", want, closed))]);
    }
}
