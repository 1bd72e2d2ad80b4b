//! Check subjects: every stdlib operator at representative types, composed graphs
//! for confluence, and deliberately broken fixtures that the checks must reject.

use rand::Rng;

use crate::core_model::operator::support::{flag, malformed, mismatch};
use crate::core_model::{
    Collection, CollectionTypeTag, Delta, Op, OpError, Operator, Rank, StepOut,
    StreamType, TypeError,
};
use crate::func::Func;
use crate::graph_lang::{self, GraphExpr};
use crate::nested_streams::{nest, read_defer, write_defer, Nest};
use crate::scheduler::Program;
use crate::stdlib_lvar::{FoldLattice, Lattice, Thresh, ToSequence, ToSequenceNaive};
use crate::stdlib_seq::{self, id, map, scan, tee, window, SeqValue};
use crate::stdlib_sets::{edge_join, nest_once, repeat_nested, set_union, zip, zip_padded, SetValue};
use crate::stdlib_zset::{ZSetJoin, ZSetMap};
use crate::value::Value;

/// Negative fixture: merges two sequences in whatever order steps happen to run.
/// Not confluent.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RacyMerge {
    pub done: bool,
}

fn two_seqs(inputs: &[Collection]) -> Option<(&SeqValue, &SeqValue)> {
    Some((inputs.first()?.as_seq()?, inputs.get(1)?.as_seq()?))
}

impl Operator for RacyMerge {
    fn name(&self) -> &'static str {
        "racy_merge"
    }

    fn arity(&self) -> (usize, usize) {
        (2, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        match (&inputs[0].collection, &inputs[1].collection) {
            (CollectionTypeTag::Seq(a), CollectionTypeTag::Seq(b)) if a == b => Ok(vec![StreamType::new(
                inputs[0].collection.clone(),
                inputs[0].bound.join(inputs[1].bound),
            )]),
            _ => Err(mismatch(self.name(), 1, "two sequences of one element type", &inputs[1])),
        }
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        match two_seqs(inputs) {
            Some((a, b)) => {
                let n = usize::from(!a.items.is_empty()) + usize::from(!b.items.is_empty());
                if n == 0 {
                    usize::from(a.terminated && b.terminated && !self.done)
                } else {
                    n
                }
            }
            None => 0,
        }
    }

    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
        let (a, b) = two_seqs(inputs).ok_or_else(|| malformed(self.name(), "bad inputs"))?;
        let mut sides = [a.clone(), b.clone()];
        let live: Vec<usize> = (0..2).filter(|&i| !sides[i].items.is_empty()).collect();
        let Some(&i) = live.get(choice) else {
            return Ok(StepOut {
                inputs: inputs.to_vec(),
                op: RacyMerge { done: true }.into(),
                deltas: vec![Delta::End],
            });
        };
        let v = sides[i].items.pop().unwrap();
        let [a, b] = sides;
        Ok(StepOut {
            inputs: vec![Collection::Seq(a), Collection::Seq(b)],
            op: self.clone().into(),
            deltas: vec![Delta::Seq(SeqValue::new(vec![v], false))],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        match two_seqs(inputs) {
            Some((a, b)) => Rank(vec![
                (a.items.len() + b.items.len()) as u64 + flag(a.terminated && b.terminated && !self.done),
            ]),
            None => Rank(vec![0]),
        }
    }
}

/// Negative fixture: steps on pending input without consuming it, so its rank
/// never decreases.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Stutter;

impl Operator for Stutter {
    fn name(&self) -> &'static str {
        "stutter"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        Ok(vec![inputs[0].clone()])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        inputs.first().map_or(0, |c| usize::from(c.content_size() > 0))
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        Ok(StepOut {
            inputs: inputs.to_vec(),
            op: Stutter.into(),
            deltas: vec![Delta::Empty],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        Rank(vec![inputs.first().map_or(0, |c| c.content_size() as u64)])
    }
}

/// A graph under test with its declared interface. `typed` subjects passed the
/// typechecker; declared ones deliberately carry types the typechecker rejects.
#[derive(Clone, Debug)]
pub struct Subject {
    pub name: String,
    pub graph: GraphExpr,
    pub inputs: Vec<StreamType>,
    pub outputs: Vec<StreamType>,
    pub typed: bool,
}

impl Subject {
    pub fn typed(name: &str, g: GraphExpr, inputs: Vec<StreamType>) -> Subject {
        let p = Program::new(&g, inputs).unwrap_or_else(|e| panic!("subject {name} is ill-typed: {e}"));
        Subject::from_program(name, p)
    }

    pub fn from_program(name: &str, p: Program) -> Subject {
        Subject {
            name: name.to_string(),
            graph: p.graph,
            inputs: p.inputs,
            outputs: p.outputs,
            typed: true,
        }
    }

    /// A single operator at types chosen by hand, bypassing the typechecker.
    pub fn declared(name: &str, op: Op, inputs: Vec<StreamType>, outputs: Vec<StreamType>) -> Subject {
        let buffers = Collection::bottoms(&inputs);
        Subject {
            name: name.to_string(),
            graph: GraphExpr::node_with(op, buffers),
            inputs,
            outputs,
            typed: false,
        }
    }

    pub fn program(&self) -> Program {
        Program {
            graph: self.graph.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        }
    }

    /// Each input is a fresh bottom, so they can be replaced wholesale.
    pub fn with_inputs(&self, cs: &[Collection]) -> Result<GraphExpr, OpError> {
        graph_lang::set_inputs(&self.graph, cs)
    }
}

fn t(s: &str) -> StreamType {
    s.parse().unwrap_or_else(|e| panic!("{e}"))
}

fn ts(xs: &[&str]) -> Vec<StreamType> {
    xs.iter().map(|s| t(s)).collect()
}

fn single(name: &str, op: impl Into<Op>, inputs: &[&str]) -> Subject {
    Subject::typed(name, GraphExpr::node(op), ts(inputs))
}

fn add() -> Func {
    Func::Add(None)
}

/// Body of a nest that keeps a running union across iterations through a
/// deferred value.
pub fn union_accumulator() -> GraphExpr {
    GraphExpr::seq_all(vec![
        GraphExpr::par(
            GraphExpr::node(read_defer("acc", t("set<int>:B").collection, None)),
            GraphExpr::node(id()),
        ),
        GraphExpr::node(set_union()),
        GraphExpr::node(tee()),
        GraphExpr::par(GraphExpr::node(id()), GraphExpr::node(write_defer("acc"))),
    ])
}

/// Operators that the obligation suite covers, keyed by operator name. Polymorphic
/// operators appear at both boundednesses.
pub fn operator_subjects() -> Vec<(&'static str, Vec<Subject>)> {
    let max_nat = Lattice::MaxNat;
    let thresh = || Thresh::new(Lattice::MaxNat, vec![Value::Int(3)]).unwrap();
    let weight_double = Func::Pipe(vec![Func::Proj(1), Func::Mul(Some(2))]);
    vec![
        ("map", vec![
            single("map", map(Func::Inc), &["seq<int>:B"]),
            single("map@U", map(Func::Inc), &["seq<int>:U"]),
        ]),
        ("scan", vec![
            single("scan", scan(Value::Int(0), add()), &["seq<int>:B"]),
            single("scan@U", scan(Value::Int(0), add()), &["seq<int>:U"]),
        ]),
        ("fold", vec![single("fold", stdlib_seq::fold(Value::Int(0), add()), &["seq<int>:B"])]),
        ("window", vec![
            single("window", window(2), &["seq<(int,int)>:B"]),
            single("window@U", window(2), &["seq<(int,int)>:U"]),
        ]),
        ("tee", vec![
            single("tee", tee(), &["seq<int>:B"]),
            single("tee@U", tee(), &["set<int>:U"]),
        ]),
        ("last", vec![
            single("last", stdlib_seq::last(), &["seq<int>:B"]),
            single("last@nested", stdlib_seq::last(), &["[set<int>:B]:B"]),
        ]),
        ("fold_lattice", vec![
            single("fold_lattice", FoldLattice::new(Func::Id, max_nat.clone()), &["seq<int>:B"]),
            single("fold_lattice@U", FoldLattice::new(Func::Id, max_nat.clone()), &["seq<int>:U"]),
        ]),
        ("thresh", vec![
            single("thresh", thresh(), &["lvar<max_nat>:B"]),
            single("thresh@U", thresh(), &["lvar<max_nat>:U"]),
        ]),
        ("to_sequence", vec![single("to_sequence", ToSequence::default(), &["lvar<max_nat>:B"])]),
        ("zset_map", vec![
            single("zset_map", ZSetMap::new(weight_double.clone()), &["zset<int>:B"]),
            single("zset_map@U", ZSetMap::new(weight_double), &["zset<int>:U"]),
        ]),
        ("zset_join", vec![
            single("zset_join", ZSetJoin::default(), &["zset<int>:B", "zset<int>:B"]),
            single("zset_join@U", ZSetJoin::default(), &["zset<int>:U", "zset<int>:B"]),
        ]),
        ("edge_join", vec![
            single("edge_join", edge_join(), &["set<int>:B", "set<(int,int)>:B"]),
            single("edge_join@U", edge_join(), &["set<int>:U", "set<(int,int)>:U"]),
        ]),
        ("set_union", vec![
            single("set_union", set_union(), &["set<int>:B", "set<int>:B"]),
            single("set_union@U", set_union(), &["set<int>:B", "set<int>:U"]),
        ]),
        ("repeat_nested", vec![single("repeat_nested", repeat_nested(), &["set<int>:B", "nat:B"])]),
        ("zip", vec![
            single("zip", zip(), &["[seq<int>:B]:B", "[set<int>:B]:B"]),
            single("zip@U", zip(), &["[seq<int>:B]:U", "[set<int>:U]:B"]),
            single("zip@pad", zip_padded(), &["[seq<int>:B]:B", "[set<int>:U]:B"]),
        ]),
        ("nest_once", vec![
            single("nest_once", nest_once(), &["set<int>:B"]),
            single("nest_once@U", nest_once(), &["set<int>:U"]),
        ]),
        ("nest", vec![
            single(
                "nest",
                Nest::new(GraphExpr::seq(
                    GraphExpr::node(map(Func::Inc)),
                    GraphExpr::node(stdlib_seq::fold(Value::Int(0), add())),
                )),
                &["[seq<int>:B]:U"],
            ),
            single("nest@defer", Nest::new(union_accumulator()), &["[set<int>:B]:B"]),
        ]),
        ("read_defer", vec![Subject::declared(
            "read_defer",
            read_defer("k", t("set<int>:B").collection, Some(Collection::Set(SetValue::of([Value::Int(1)], true)))),
            vec![],
            ts(&["set<int>:B"]),
        )]),
        ("write_defer", vec![Subject::declared(
            "write_defer",
            write_defer("k"),
            ts(&["set<int>:B"]),
            vec![],
        )]),
    ]
}

/// Fixtures the checks must reject, with the property each one violates.
pub fn negative_subjects() -> Vec<Subject> {
    let lv = |b: &str| t(&format!("lvar<max_nat>:{b}"));
    vec![
        Subject::declared("to_sequence_naive", ToSequenceNaive::default().into(), vec![lv("U")], ts(&["seq<int>:U"])),
        Subject::declared(
            "fold@U",
            stdlib_seq::fold(Value::Int(0), add()),
            ts(&["seq<int>:U"]),
            ts(&["seq<int>:U"]),
        ),
        Subject::declared("last@U", stdlib_seq::last(), ts(&["seq<int>:U"]), ts(&["seq<int>:U"])),
        Subject::declared("to_sequence@U", ToSequence::default().into(), vec![lv("U")], ts(&["seq<int>:U"])),
        Subject::declared("racy_merge", RacyMerge::default().into(), ts(&["seq<int>:B", "seq<int>:B"]), ts(&["seq<int>:B"])),
        Subject::declared("stutter", Stutter.into(), ts(&["seq<int>:B"]), ts(&["seq<int>:B"])),
    ]
}

/// Graphs of at most three operators for exhaustive confluence checks.
pub fn composed_subjects() -> Vec<Subject> {
    fn n(op: impl Into<Op>) -> GraphExpr {
        GraphExpr::node(op)
    }
    let fold = || stdlib_seq::fold(Value::Int(0), add());
    let sc = || scan(Value::Int(0), add());
    let fl = || FoldLattice::new(Func::Id, Lattice::MaxNat);
    let th = || Thresh::new(Lattice::MaxNat, vec![Value::Int(4)]).unwrap();
    let zm = || ZSetMap::new(Func::Pipe(vec![Func::Proj(1), Func::Mul(Some(3))]));
    let g = |name: &str, g: GraphExpr, inputs: &[&str]| Subject::typed(name, g, ts(inputs));
    vec![
        g("map;scan", GraphExpr::seq(n(map(Func::Inc)), n(sc())), &["seq<int>:U"]),
        g("map;fold", GraphExpr::seq(n(map(Func::Inc)), n(fold())), &["seq<int>:B"]),
        g("map;map;fold", GraphExpr::seq_all(vec![n(map(Func::Inc)), n(map(Func::Mul(Some(2)))), n(fold())]), &["seq<int>:B"]),
        g("tee;(map|scan)", GraphExpr::seq(n(tee()), GraphExpr::par(n(map(Func::Inc)), n(sc()))), &["seq<int>:U"]),
        g("tee;(fold|last)", GraphExpr::seq(n(tee()), GraphExpr::par(n(fold()), n(stdlib_seq::last()))), &["seq<int>:B"]),
        g("scan;last", GraphExpr::seq(n(sc()), n(stdlib_seq::last())), &["seq<int>:B"]),
        g("scan;tee", GraphExpr::seq(n(sc()), n(tee())), &["seq<int>:U"]),
        g("fold_lattice;thresh", GraphExpr::seq(n(fl()), n(th())), &["seq<int>:U"]),
        g("fold_lattice;to_sequence", GraphExpr::seq(n(fl()), n(ToSequence::default())), &["seq<int>:B"]),
        g("map;fold_lattice;thresh", GraphExpr::seq_all(vec![n(map(Func::Inc)), n(fl()), n(th())]), &["seq<int>:U"]),
        g("zset_join;zset_map", GraphExpr::seq(n(ZSetJoin::default()), n(zm())), &["zset<int>:U", "zset<int>:U"]),
        g("(zset_map|zset_map);zset_join", GraphExpr::seq(GraphExpr::par(n(zm()), n(zm())), n(ZSetJoin::default())), &["zset<int>:B", "zset<int>:U"]),
        g("(zset_join|id);zset_join", GraphExpr::seq(GraphExpr::par(n(ZSetJoin::default()), n(id())), n(ZSetJoin::default())), &["zset<int>:U", "zset<int>:B", "zset<int>:U"]),
        g("set_union;tee", GraphExpr::seq(n(set_union()), n(tee())), &["set<int>:U", "set<int>:B"]),
        g("(edge_join|id);set_union", GraphExpr::seq(GraphExpr::par(n(edge_join()), n(id())), n(set_union())), &["set<int>:B", "set<(int,int)>:B", "set<int>:U"]),
        g("edge_join;tee", GraphExpr::seq(n(edge_join()), n(tee())), &["set<int>:B", "set<(int,int)>:U"]),
        g("window;nest(fold)", GraphExpr::seq(n(window(2)), n(nest(n(fold())))), &["seq<(int,int)>:B"]),
        g("repeat_nested;nest(id)", GraphExpr::seq(n(repeat_nested()), n(nest(n(id())))), &["set<int>:B", "nat:B"]),
        g("zip;nest(set_union)", GraphExpr::seq(n(zip()), n(nest(n(set_union())))), &["[set<int>:B]:U", "[set<int>:B]:B"]),
        g("nest_once;last", GraphExpr::seq(n(nest_once()), n(stdlib_seq::last())), &["set<int>:B"]),
        g("(nest_once|nest_once);zip", GraphExpr::seq(GraphExpr::par(n(nest_once()), n(nest_once())), n(zip())), &["set<int>:B", "set<int>:U"]),
        g("repeat_nested;last", GraphExpr::seq(n(repeat_nested()), n(stdlib_seq::last())), &["set<int>:B", "nat:B"]),
    ]
}

/// Looks up any registered subject by name.
pub fn subject(name: &str) -> Option<Subject> {
    operator_subjects()
        .into_iter()
        .flat_map(|(_, ss)| ss)
        .chain(negative_subjects())
        .chain(composed_subjects())
        .find(|s| s.name == name)
}

pub fn subject_names() -> Vec<String> {
    operator_subjects()
        .into_iter()
        .flat_map(|(_, ss)| ss)
        .chain(negative_subjects())
        .chain(composed_subjects())
        .map(|s| s.name)
        .collect()
}

/// Small inputs for exhaustive exploration: at most three content units each,
/// bounded ports fixed.
pub fn small_inputs(types: &[StreamType], rng: &mut impl Rng) -> Vec<Collection> {
    types
        .iter()
        .map(|t| loop {
            let c = super::gen::collection(
                &t.collection,
                if t.is_bounded() { super::gen::Fixing::Fixed } else { super::gen::Fixing::Random },
                true,
                rng,
            );
            if c.content_size() <= 3 && nested_small(&c) {
                break c;
            }
        })
        .collect()
}

fn nested_small(c: &Collection) -> bool {
    match c {
        Collection::Nested(v) => v.tuples.iter().flatten().all(|c| c.content_size() <= 3),
        _ => true,
    }
}
