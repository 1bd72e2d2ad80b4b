use super::*;

use proptest::prelude::*;

use crate::func::Func;
use crate::property_harness::fixtures::RacyMerge;
use crate::property_harness::gen::{self, Fixing};
use crate::stdlib_lvar::Lattice;
use crate::stdlib_seq::{id, map, tee};
use crate::testutil::{rng, ty, tys};
use crate::value::Value;

fn seq(arrivals: &[i64], terminated: bool) -> Collection {
    Collection::Seq(SeqValue::from_arrivals(arrivals.iter().map(|&n| Value::Int(n)), terminated))
}

fn program(g: GraphExpr, types: &[&str]) -> Program {
    Program::new(&g, tys(types)).unwrap()
}

fn racy() -> Program {
    program(GraphExpr::node(RacyMerge::default()), &["seq<int>:B", "seq<int>:B"])
}

fn pipeline() -> Program {
    program(
        GraphExpr::seq(GraphExpr::node(tee()), GraphExpr::par(GraphExpr::node(map(Func::Inc)), GraphExpr::node(id()))),
        &["seq<int>:B"],
    )
}

fn flat_types() -> Vec<StreamType> {
    tys(&["seq<int>:B", "set<int>:U", "zset<str>:U", "lvar<max_nat>:B", "nat:B", "[seq<int>:B,set<int>:U]:U"])
}

#[test]
fn round_robin_cycles_and_scripts_clamp() {
    let mut rr = Schedule::round_robin();
    assert_eq!([3, 3, 3, 3].map(|n| rr.pick(n)), [0, 1, 2, 0]);
    let mut sc = Schedule::scripted(vec![1, 9]);
    assert_eq!([3, 3, 3].map(|n| sc.pick(n)), [1, 2, 0]);
}

#[test]
fn random_schedules_replay_from_their_seed() {
    let picks = |seed| {
        let mut s = Schedule::random(seed);
        (0..16).map(|_| s.pick(5)).collect::<Vec<_>>()
    };
    assert_eq!(picks(7), picks(7));
}

#[test]
fn drain_takes_oldest_items_and_keeps_the_terminator() {
    let (d, rest) = drain(&seq(&[1, 2, 3], true), Some(2));
    assert_eq!(d, Delta::Seq(SeqValue::from_arrivals([Value::Int(1), Value::Int(2)], false)));
    assert_eq!(rest, seq(&[3], true));
}

#[test]
fn drain_keeps_the_open_nested_tuple() {
    let inner = tys(&["seq<int>:B"]);
    let v = NestedSeqValue::from_arrivals(inner, vec![vec![seq(&[1], true)], vec![seq(&[2], false)]], false);
    let (d, rest) = drain(&Collection::Nested(v), None);
    let Delta::Nested(nd) = d else { panic!("nested delta expected") };
    assert_eq!(nd.ops, vec![NestedOp::Push(vec![seq(&[1], true)])]);
    assert_eq!(rest.as_nested().unwrap().tuples, vec![vec![seq(&[2], false)]]);
}

#[test]
fn drain_moves_lattice_values_only_once_fixed() {
    let open = Collection::LVar(LVarValue::max_nat(5, false));
    assert_eq!(drain(&open, None), (Delta::Empty, open.clone()));
    let fixed = Collection::LVar(LVarValue::max_nat(5, true));
    let (d, rest) = drain(&fixed, None);
    assert_eq!(d, Delta::LVar(LVarValue::max_nat(5, false)));
    assert_eq!(rest, Collection::LVar(LVarValue::new(Lattice::MaxNat, Value::Int(0), true)));
}

#[test]
fn run_once_and_logged_trace_agree() {
    let p = pipeline();
    let ins = [seq(&[1, 2], true)];
    let once = run_once(&p, &ins, &mut Schedule::round_robin()).unwrap();
    assert_eq!(once.outputs, vec![seq(&[2, 3], true), seq(&[1, 2], true)]);
    let trace = [TraceEvent { batch: vec![ins[0].as_delta()], steps: StepLimit::Max, drain: DrainPolicy::All }];
    let logged = run_trace(&p, &trace, &mut Schedule::random(3), true).unwrap();
    assert_eq!(logged.outputs, once.outputs);
    assert_eq!(logged.steps, once.steps);
    let events: Vec<serde_json::Value> = logged.log.iter().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(events.first().unwrap()["event"], "batch");
    assert_eq!(events.last().unwrap()["event"], "drain");
    assert_eq!(events.iter().filter(|e| e["event"] == "step").count(), logged.steps);
}

#[test]
fn bounded_step_limits_leave_work_pending() {
    let p = pipeline();
    let trace = [TraceEvent { batch: vec![seq(&[1, 2], true).as_delta()], steps: StepLimit::Steps(1), drain: DrainPolicy::None }];
    let r = run_trace(&p, &trace, &mut Schedule::round_robin(), false).unwrap();
    assert_eq!(r.steps, 1);
    assert!(!r.config.is_stuck());
}

#[test]
fn explore_finds_every_stuck_configuration_with_a_replayable_path() {
    let start = racy().start().push(&[seq(&[1], true).as_delta(), seq(&[2], true).as_delta()]).unwrap();
    let ex = explore(&start, 1000).unwrap();
    assert!(ex.complete);
    assert_eq!(ex.stuck.len(), 2);
    for (cfg, path) in &ex.stuck {
        assert_eq!(&run_schedule(&start, path, 100).unwrap(), cfg);
    }
}

#[test]
fn explore_reports_an_incomplete_search_at_the_cap() {
    let start = racy().start().push(&[seq(&[1, 2], true).as_delta(), seq(&[3], true).as_delta()]).unwrap();
    let ex = explore(&start, 2).unwrap();
    assert!(!ex.complete);
    assert!(ex.configs <= 2);
}

#[test]
fn run_schedule_reports_budget_exhaustion() {
    let start = pipeline().start().push(&[seq(&[1, 2, 3], true).as_delta()]).unwrap();
    assert_eq!(run_schedule(&start, &[], 1), Err(RunError::StepBudgetExceeded(1)));
}

proptest! {
    #[test]
    fn chunks_recombine_to_the_value(seed in any::<u64>()) {
        let mut r = rng(seed);
        for t in flat_types() {
            let c = gen::collection(&t.collection, Fixing::Random, false, &mut r);
            let mut acc = Collection::bottom(&t.collection);
            for d in random_chunks(&c, &mut r, 4) {
                acc = acc.concat(&d).unwrap();
            }
            prop_assert_eq!(acc, c);
        }
    }

    #[test]
    fn drained_prefix_and_rest_recombine(seed in any::<u64>(), n in prop::option::of(0usize..4)) {
        let mut r = rng(seed);
        for t in flat_types() {
            let c = gen::collection(&t.collection, Fixing::Random, false, &mut r);
            let (d, rest) = drain(&c, n);
            prop_assert!(rest.member(&t.collection));
            prop_assert_eq!(rest.is_fixed(), c.is_fixed());
            let back = Collection::bottom(&t.collection).concat(&d).unwrap().concat(&rest.as_delta()).unwrap();
            prop_assert_eq!(back, c);
        }
    }

    #[test]
    fn random_traces_match_run_once(xs in prop::collection::vec(0i64..5, 0..6), closed: bool, seed in any::<u64>()) {
        let p = pipeline();
        let ins = [seq(&xs, closed)];
        let want = run_once(&p, &ins, &mut Schedule::round_robin()).unwrap().outputs;
        let trace = random_trace(&ins, &mut rng(seed));
        prop_assert_eq!(run_trace(&p, &trace, &mut Schedule::random(seed), false).unwrap().outputs, want);
    }
}

#[test]
fn program_start_has_bottom_outputs() {
    let p = pipeline();
    assert_eq!(p.start().outs, Collection::bottoms(&[ty("seq<int>:B"), ty("seq<int>:B")]));
}
