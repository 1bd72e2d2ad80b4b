//! Ready-made programs built from the standard operators: graph reachability with
//! a fixed radius, and with a radius that grows query by query.

use crate::core_model::{Collection, CollectionTypeTag, StreamType};
use crate::graph_lang::GraphExpr;
use crate::nested_streams::{nest, read_defer, write_defer, NestedSeqValue};
use crate::scheduler::Program;
use crate::stdlib_seq::{id, last, tee, SingletonNat};
use crate::stdlib_sets::{edge_join, nest_once, repeat_nested, set_union, zip, zip_padded, SetValue};
use crate::value::Value;

fn t(s: &str) -> StreamType {
    s.parse().expect("well-formed type")
}

fn node_set() -> CollectionTypeTag {
    t("set<int>:B").collection
}

fn root_set(root: i64) -> Collection {
    Collection::Set(SetValue::of([Value::Int(root)], true))
}

/// One hop: `(frontier, edges) -> frontier ∪ successors(frontier)`, with the
/// result also written to the deferred key `r`.
fn hop(frontier: GraphExpr) -> GraphExpr {
    let n = GraphExpr::node;
    GraphExpr::seq_all(vec![
        GraphExpr::par(frontier, n(id())),
        GraphExpr::par(n(tee()), n(id())),
        GraphExpr::par(n(id()), n(edge_join())),
        n(set_union()),
        n(tee()),
        GraphExpr::par(n(id()), n(write_defer("r"))),
    ])
}

/// Inputs `set<(int,int)>:B` (edges) and `nat:B` (radius k). Output tuple `i`
/// holds the nodes reachable from `root` in at most `i + 1` hops.
pub fn reach_fixed_graph(root: i64) -> GraphExpr {
    let inner = hop(GraphExpr::node(read_defer("r", node_set(), Some(root_set(root)))));
    GraphExpr::seq(GraphExpr::node(repeat_nested()), GraphExpr::node(nest(inner)))
}

pub fn reach_fixed(root: i64) -> Program {
    Program::new(&reach_fixed_graph(root), vec![t("set<(int,int)>:B"), t("nat:B")]).expect("reach_fixed typechecks")
}

pub fn edge_set(edges: &[(i64, i64)]) -> Collection {
    Collection::Set(SetValue::of(
        edges.iter().map(|&(a, b)| Value::pair(Value::Int(a), Value::Int(b))),
        true,
    ))
}

pub fn reach_fixed_inputs(edges: &[(i64, i64)], k: u64) -> Vec<Collection> {
    vec![edge_set(edges), Collection::Nat(SingletonNat::new(Some(k), true))]
}

/// Inputs `[set<(int,int)>:B]:U` and `[nat:B]:U`: one edge set and one radius
/// per query. Output tuple `j` holds the nodes reachable from `root` within the
/// sum of the first `j + 1` radii; each query starts where the previous ended.
/// A query of radius 0 yields its bootstrap set, supplied by zip padding.
pub fn reach_dynamic_graph(root: i64) -> GraphExpr {
    let n = GraphExpr::node;
    let inner = hop(GraphExpr::seq(
        GraphExpr::par(n(read_defer("r", node_set(), None)), n(id())),
        n(set_union()),
    ));
    let outer = GraphExpr::seq_all(vec![
        GraphExpr::par(
            GraphExpr::seq(n(read_defer("boot", node_set(), Some(root_set(root)))), n(nest_once())),
            n(repeat_nested()),
        ),
        n(zip_padded()),
        n(nest(inner)),
        n(last()),
        n(tee()),
        GraphExpr::par(n(id()), n(write_defer("boot"))),
    ]);
    GraphExpr::seq(n(zip()), n(nest(outer)))
}

pub fn reach_dynamic(root: i64) -> Program {
    Program::new(
        &reach_dynamic_graph(root),
        vec![t("[set<(int,int)>:B]:U"), t("[nat:B]:U")],
    )
    .expect("reach_dynamic typechecks")
}

/// One query per `(edges, radius)` pair; the streams are closed when `closed`.
pub fn reach_dynamic_inputs(queries: &[(Vec<(i64, i64)>, u64)], closed: bool) -> Vec<Collection> {
    let edges = NestedSeqValue::from_arrivals(
        vec![t("set<(int,int)>:B")],
        queries.iter().map(|(e, _)| vec![edge_set(e)]).collect(),
        closed,
    );
    let radii = NestedSeqValue::from_arrivals(
        vec![t("nat:B")],
        queries
            .iter()
            .map(|(_, k)| vec![Collection::Nat(SingletonNat::new(Some(*k), true))])
            .collect(),
        closed,
    );
    vec![Collection::Nested(edges), Collection::Nested(radii)]
}

/// Node sets of a nested single-set output, oldest tuple first.
pub fn reached_layers(out: &Collection) -> Vec<Vec<i64>> {
    let Some(v) = out.as_nested() else {
        return Vec::new();
    };
    v.tuples
        .iter()
        .rev()
        .filter_map(|tup| tup.first().and_then(Collection::as_set))
        .map(|s| s.elems.iter().filter_map(Value::as_int).collect())
        .collect()
}
