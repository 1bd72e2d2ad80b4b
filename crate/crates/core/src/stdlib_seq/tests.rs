use super::*;

use proptest::prelude::*;

use crate::nested_streams::NestedSeqValue;
use crate::testutil::{run_op, ty};

fn seq(arrivals: &[i64], terminated: bool) -> Collection {
    Collection::Seq(SeqValue::from_arrivals(arrivals.iter().map(|&n| Value::Int(n)), terminated))
}

fn stamped(arrivals: &[(i64, i64)], terminated: bool) -> Collection {
    Collection::Seq(SeqValue::from_arrivals(
        arrivals.iter().map(|&(v, t)| Value::pair(Value::Int(v), Value::Int(t))),
        terminated,
    ))
}

fn arrivals(c: &Collection) -> Vec<i64> {
    c.as_seq().unwrap().arrivals().filter_map(Value::as_int).collect()
}

/// Independent grouping: a new window starts at the first timestamp more than
/// `interval` past the current window's first timestamp.
fn windows_oracle(xs: &[(i64, i64)], interval: i64) -> Vec<Vec<i64>> {
    let mut out: Vec<(i64, Vec<i64>)> = Vec::new();
    for &(v, t) in xs {
        match out.last_mut() {
            Some((start, w)) if t - *start <= interval => w.push(v),
            _ => out.push((t, vec![v])),
        }
    }
    out.into_iter().map(|(_, w)| w).collect()
}

fn window_tuples(c: &Collection) -> Vec<(Vec<i64>, bool)> {
    let n: &NestedSeqValue = c.as_nested().unwrap();
    n.tuples
        .iter()
        .rev()
        .map(|tup| (arrivals(&tup[0]), tup[0].is_fixed()))
        .collect()
}

#[test]
fn map_applies_elementwise_and_forwards_terminator() {
    let out = run_op(map(Func::Inc), &["seq<int>:B"], &[seq(&[1, 2, 3], true)]);
    assert_eq!(out, vec![seq(&[2, 3, 4], true)]);
    let open = run_op(map(Func::Mul(Some(2))), &["seq<int>:U"], &[seq(&[1, 2], false)]);
    assert_eq!(open, vec![seq(&[2, 4], false)]);
}

#[test]
fn map_rejects_ill_typed_function() {
    let err = Map::new(Func::Uppercase).signature(&[ty("seq<int>:B")]);
    assert!(matches!(err, Err(TypeError::Function { .. })));
}

#[test]
fn scan_emits_running_accumulator() {
    let out = run_op(scan(Value::Int(0), Func::Add(None)), &["seq<int>:U"], &[seq(&[1, 2, 3], false)]);
    assert_eq!(out, vec![seq(&[1, 3, 6], false)]);
}

#[test]
fn scan_accumulator_must_keep_its_type() {
    let err = Scan::new(Value::Bool(true), Func::Add(None)).signature(&[ty("seq<int>:B")]);
    assert!(err.is_err());
}

#[test]
fn fold_waits_for_terminator() {
    let f = || fold(Value::Int(0), Func::Add(None));
    assert_eq!(run_op(f(), &["seq<int>:B"], &[seq(&[1, 2, 3], true)]), vec![seq(&[6], true)]);
    assert_eq!(run_op(f(), &["seq<int>:B"], &[seq(&[1, 2, 3], false)]), vec![seq(&[], false)]);
}

#[test]
fn fold_and_last_require_bounded_input() {
    let fold_u = Fold::new(Value::Int(0), Func::Add(None)).signature(&[ty("seq<int>:U")]);
    assert!(matches!(fold_u, Err(TypeError::BoundednessViolation { .. })));
    let last_u = Last::default().signature(&[ty("seq<int>:U")]);
    assert!(matches!(last_u, Err(TypeError::BoundednessViolation { .. })));
}

#[test]
fn window_closes_on_gap_and_terminator() {
    let input = stamped(&[(1, 0), (2, 2), (3, 5), (4, 6)], true);
    let out = run_op(window(2), &["seq<(int,int)>:B"], &[input]);
    assert_eq!(window_tuples(&out[0]), vec![(vec![1, 2], true), (vec![3, 4], true)]);
    assert!(out[0].is_fixed());
}

#[test]
fn window_streams_the_open_window() {
    let out = run_op(window(10), &["seq<(int,int)>:U"], &[stamped(&[(7, 0), (8, 3)], false)]);
    assert_eq!(window_tuples(&out[0]), vec![(vec![7, 8], false)]);
    assert!(!out[0].is_fixed());
}

#[test]
fn window_signature_tracks_input_boundedness() {
    let w = Window::new(1);
    assert_eq!(w.signature(&[ty("seq<(str,int)>:U")]).unwrap(), vec![ty("[seq<str>:B]:U")]);
    assert_eq!(w.signature(&[ty("seq<(str,int)>:B")]).unwrap(), vec![ty("[seq<str>:B]:B")]);
    assert!(w.signature(&[ty("seq<int>:B")]).is_err());
}

#[test]
fn tee_duplicates_and_id_forwards() {
    let s = seq(&[1, 2], true);
    assert_eq!(run_op(tee(), &["seq<int>:B"], &[s.clone()]), vec![s.clone(), s.clone()]);
    assert_eq!(run_op(id(), &["seq<int>:B"], &[s.clone()]), vec![s]);
    let set = Collection::Set(crate::stdlib_sets::SetValue::of([Value::Int(3)], false));
    assert_eq!(run_op(id(), &["set<int>:U"], &[set.clone()]), vec![set]);
}

#[test]
fn last_emits_final_item_only_when_closed() {
    assert_eq!(run_op(last(), &["seq<int>:B"], &[seq(&[4, 5, 6], true)]), vec![seq(&[6], true)]);
    assert_eq!(run_op(last(), &["seq<int>:B"], &[seq(&[4, 5], false)]), vec![seq(&[], false)]);
    assert_eq!(run_op(last(), &["seq<int>:B"], &[seq(&[], true)]), vec![seq(&[], true)]);
}

#[test]
fn singleton_rejects_overwrite() {
    let n = SingletonNat::new(Some(1), false);
    assert_eq!(n.concat(&SingletonNat::new(Some(2), false)), Err(ConcatError::SingletonOverwrite));
    assert_eq!(n.concat(&SingletonNat::new(None, true)).unwrap(), SingletonNat::new(Some(1), true));
}

proptest! {
    #[test]
    fn map_composition_fuses(xs in prop::collection::vec(-5i64..5, 0..8), c in -3i64..3) {
        let g = pipeline(map(Func::Add(Some(c))), map(Func::Mul(Some(2))));
        let fused = map(Func::Pipe(vec![Func::Add(Some(c)), Func::Mul(Some(2))]));
        let input = [seq(&xs, true)];
        prop_assert_eq!(g(&input), run_op(fused, &["seq<int>:B"], &input));
    }

    #[test]
    fn scan_matches_prefix_sums_and_fold_matches_total(xs in prop::collection::vec(-5i64..5, 0..8)) {
        let sums: Vec<i64> = xs.iter().scan(0, |a, x| { *a += x; Some(*a) }).collect();
        let out = run_op(scan(Value::Int(0), Func::Add(None)), &["seq<int>:B"], &[seq(&xs, true)]);
        prop_assert_eq!(arrivals(&out[0]), sums);
        let total = run_op(fold(Value::Int(0), Func::Add(None)), &["seq<int>:B"], &[seq(&xs, true)]);
        prop_assert_eq!(arrivals(&total[0]), vec![xs.iter().sum::<i64>()]);
    }

    #[test]
    fn window_matches_grouping_oracle(gaps in prop::collection::vec(0i64..4, 0..8), interval in 0i64..4) {
        let mut t = 0;
        let xs: Vec<(i64, i64)> = gaps.iter().enumerate().map(|(i, g)| { t += g; (i as i64, t) }).collect();
        let out = run_op(window(interval), &["seq<(int,int)>:B"], &[stamped(&xs, true)]);
        let got: Vec<Vec<i64>> = window_tuples(&out[0]).into_iter().map(|(w, fixed)| {
            assert!(fixed);
            w
        }).collect();
        prop_assert_eq!(got, windows_oracle(&xs, interval));
    }
}

/// Runs `a ; b` on one `seq<int>:B` input.
fn pipeline(a: Op, b: Op) -> impl Fn(&[Collection]) -> Vec<Collection> {
    use crate::graph_lang::GraphExpr;
    use crate::scheduler::{run_once, Program, Schedule};
    let p = Program::new(&GraphExpr::seq(GraphExpr::node(a), GraphExpr::node(b)), vec![ty("seq<int>:B")]).unwrap();
    move |ins| run_once(&p, ins, &mut Schedule::round_robin()).unwrap().outputs
}
