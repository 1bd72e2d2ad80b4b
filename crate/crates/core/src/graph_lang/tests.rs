use super::*;

use proptest::prelude::*;
use rand::Rng;

use crate::func::Func;
use crate::stdlib_seq::{id, map, scan, tee, SeqValue};
use crate::stdlib_sets::{set_union, SetValue};
use crate::testutil::{rng, ty, tys};
use crate::value::Value;

fn n(op: impl Into<Op>) -> GraphExpr {
    GraphExpr::node(op)
}

fn seq(arrivals: &[i64], terminated: bool) -> Collection {
    Collection::Seq(SeqValue::from_arrivals(arrivals.iter().map(|&n| Value::Int(n)), terminated))
}

fn loaded(g: &GraphExpr, types: &[&str], ins: &[Collection]) -> GraphExpr {
    let (g, _) = check_top(g, &tys(types)).unwrap();
    set_inputs(&g, ins).unwrap()
}

#[test]
fn step_choice_displays_path_and_choice() {
    let sc = StepChoice { path: vec![Dir::L, Dir::R], choice: 2 };
    assert_eq!(sc.to_string(), "LR:2");
}

#[test]
fn arity_of_compositions() {
    let g = GraphExpr::seq(n(tee()), GraphExpr::par(n(id()), n(map(Func::Inc))));
    assert_eq!(g.arity(), (1, 2));
    assert_eq!(GraphExpr::par_all(vec![n(id()), n(id()), n(tee())]).arity(), (3, 4));
    assert_eq!(g.node_count(), 3);
}

#[test]
fn sequence_left_feeds_the_right_buffers() {
    let g = loaded(&GraphExpr::seq(n(map(Func::Inc)), n(id())), &["seq<int>:B"], &[seq(&[1], false)]);
    let steps = enabled_steps(&g);
    assert_eq!(steps, vec![StepChoice { path: vec![Dir::L], choice: 0 }]);
    let s = step_graph(&g, &steps[0]).unwrap();
    assert_eq!(s.rules, vec!["sequence-left", "operator"]);
    assert_eq!(s.op, "map");
    assert_eq!(s.deltas, vec![Delta::Empty]);
    let GraphExpr::Seq(_, b) = &s.graph else { panic!("shape changed") };
    assert_eq!(inputs(b), vec![seq(&[2], false)]);
}

#[test]
fn par_steps_pad_the_other_side_with_empty_deltas() {
    let g = loaded(&GraphExpr::par(n(id()), n(id())), &["seq<int>:B", "seq<int>:B"], &[seq(&[], false), seq(&[7], false)]);
    let steps = enabled_steps(&g);
    assert_eq!(steps.len(), 1);
    let s = step_graph(&g, &steps[0]).unwrap();
    assert_eq!(s.rules, vec!["par-right", "operator"]);
    assert_eq!(s.deltas, vec![Delta::Empty, Delta::Seq(SeqValue::ints(&[7], false))]);
}

#[test]
fn bad_step_addresses_are_rejected() {
    let g = loaded(&n(id()), &["seq<int>:B"], &[seq(&[1], false)]);
    let deep = StepChoice { path: vec![Dir::L], choice: 0 };
    assert!(matches!(step_graph(&g, &deep), Err(OpError::InvalidChoice(_))));
    let wide = StepChoice { path: vec![], choice: 5 };
    assert!(matches!(step_graph(&g, &wide), Err(OpError::InvalidChoice(_))));
}

#[test]
fn typecheck_reports_arity_and_subtype_errors() {
    let two_into_one = GraphExpr::seq(n(tee()), n(map(Func::Inc)));
    assert!(matches!(check_top(&two_into_one, &tys(&["seq<int>:B"])), Err(TypeError::ArityMismatch { .. })));
    let wrong = n(set_union());
    let err = check_top(&wrong, &tys(&["set<int>:B", "set<str>:B"]));
    assert!(matches!(err, Err(TypeError::SubtypeMismatch { position: 1, .. })));
    assert!(matches!(check_top(&n(id()), &[]), Err(TypeError::ArityMismatch { .. })));
}

#[test]
fn typecheck_threads_types_through_compositions() {
    let g = GraphExpr::seq(n(tee()), GraphExpr::par(n(id()), n(scan(Value::Int(0), Func::Add(None)))));
    let (_, outs) = check_top(&g, &tys(&["seq<int>:U"])).unwrap();
    assert_eq!(outs, tys(&["seq<int>:U", "seq<int>:U"]));
}

#[test]
fn buffers_must_match_input_types() {
    let bad = GraphExpr::node_with(id(), vec![Collection::Set(SetValue::default())]);
    let err = check_top(&bad, &tys(&["seq<int>:B"]));
    assert!(matches!(err, Err(TypeError::BufferTypeMismatch { position: 0, .. })));
    let short = GraphExpr::node_with(set_union(), vec![Collection::Set(SetValue::default())]);
    assert!(matches!(check_top(&short, &tys(&["set<int>:B", "set<int>:B"])), Err(TypeError::ArityMismatch { .. })));
}

#[test]
fn prepare_fills_empty_buffers_with_bottoms() {
    let (g, _) = prepare(&GraphExpr::par(n(id()), n(id())), &tys(&["seq<int>:B", "nat:B"])).unwrap();
    assert_eq!(inputs(&g), Collection::bottoms(&tys(&["seq<int>:B", "nat:B"])));
    assert!(is_stuck(&g));
}

#[test]
fn set_inputs_checks_arity() {
    let g = GraphExpr::par(n(id()), n(id()));
    assert!(matches!(set_inputs(&g, &[seq(&[], false)]), Err(OpError::Arity { expected: 2, found: 1 })));
}

#[test]
fn typecheck_open_accepts_mid_run_defer_nodes() {
    let g = n(crate::nested_streams::write_defer("k"));
    assert!(typecheck(&g, &[ty("set<int>:B")], None).is_err());
    assert_eq!(typecheck_open(&g, &[ty("set<int>:B")]).unwrap(), vec![]);
}

#[test]
fn run_to_stuck_reports_budget_exhaustion() {
    let g = loaded(&n(map(Func::Inc)), &["seq<int>:B"], &[seq(&[1, 2, 3], true)]);
    let bottom = Collection::bottoms(&tys(&["seq<int>:B"]));
    assert_eq!(run_to_stuck(&g, bottom.clone(), 1), Err(RunError::StepBudgetExceeded(1)));
    let (_, outs) = run_to_stuck(&g, bottom, 10).unwrap();
    assert_eq!(outs, vec![seq(&[2, 3, 4], true)]);
}

proptest! {
    #[test]
    fn every_graph_step_decreases_rank(xs in prop::collection::vec(0i64..5, 0..6), closed: bool, seed in any::<u64>()) {
        let g = GraphExpr::seq_all(vec![
            n(tee()),
            GraphExpr::par(n(map(Func::Inc)), n(scan(Value::Int(0), Func::Add(None)))),
            GraphExpr::par(n(id()), n(id())),
        ]);
        let mut g = loaded(&g, &["seq<int>:B"], &[seq(&xs, closed)]);
        let mut r = rng(seed);
        loop {
            let steps = enabled_steps(&g);
            if steps.is_empty() {
                break;
            }
            let next = step_graph(&g, &steps[r.gen_range(0..steps.len())]).unwrap().graph;
            prop_assert!(graph_rank(&next) < graph_rank(&g));
            g = next;
        }
    }

    #[test]
    fn outputs_do_not_depend_on_the_schedule(xs in prop::collection::vec(0i64..5, 0..6), seed in any::<u64>()) {
        let g = GraphExpr::seq(n(tee()), GraphExpr::par(n(map(Func::Inc)), n(id())));
        let start = loaded(&g, &["seq<int>:B"], &[seq(&xs, true)]);
        let mut outs = Collection::bottoms(&tys(&["seq<int>:B", "seq<int>:B"]));
        let mut cur = start.clone();
        let mut r = rng(seed);
        while !is_stuck(&cur) {
            let steps = enabled_steps(&cur);
            let s = step_graph(&cur, &steps[r.gen_range(0..steps.len())]).unwrap();
            outs = Collection::concat_all(&outs, &s.deltas).unwrap();
            cur = s.graph;
        }
        let (_, first) = run_to_stuck(&start, Collection::bottoms(&tys(&["seq<int>:B", "seq<int>:B"])), 1000).unwrap();
        prop_assert_eq!(outs, first);
    }
}
