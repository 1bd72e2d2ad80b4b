//! Canonical JSON encodings of values, collections, deltas, graphs and traces.
//!
//! Elements: integers, booleans and strings map to themselves, tuples to arrays,
//! sets to `{"set":[...]}`. Collections use one object shape per language; flat
//! deltas use the shape of their language, plus `"empty"` and `"end"`. Decoding is
//! directed by the expected type.

use std::collections::BTreeSet;

use serde_json::{json, Map, Value as Json};
use thiserror::Error;

use crate::core_model::{Collection, CollectionTypeTag, Delta, Op, Operator, StreamType, TypeError};
use crate::func::Func;
use crate::graph_lang::GraphExpr;
use crate::nested_streams::{self, NestedDelta, NestedOp, NestedSeqValue};
use crate::property_harness::fixtures::{RacyMerge, Stutter};
use crate::scheduler::{DrainPolicy, StepLimit, TraceEvent};
use crate::stdlib_lvar::{self, LVarValue, Lattice};
use crate::stdlib_seq::{self, SeqValue, SingletonNat};
use crate::stdlib_sets::{self, SetValue};
use crate::stdlib_zset::{ZSetJoin, ZSetMap};
use crate::value::Value;
use crate::IntZSet;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("ParseError at {path}: {msg}")]
pub struct ParseError {
    pub path: String,
    pub msg: String,
}

fn err<T>(path: &str, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        path: path.to_string(),
        msg: msg.into(),
    })
}

fn field<'a>(v: &'a Json, key: &str, path: &str) -> Result<&'a Json, ParseError> {
    v.get(key).ok_or_else(|| ParseError {
        path: path.to_string(),
        msg: format!("missing field {key:?}"),
    })
}

fn bool_field(v: &Json, key: &str, path: &str) -> Result<bool, ParseError> {
    match v.get(key) {
        None => Ok(false),
        Some(Json::Bool(b)) => Ok(*b),
        Some(_) => err(path, format!("{key:?} must be a boolean")),
    }
}

fn array<'a>(v: &'a Json, path: &str) -> Result<&'a Vec<Json>, ParseError> {
    v.as_array().ok_or_else(|| ParseError {
        path: path.to_string(),
        msg: "expected an array".into(),
    })
}

fn str_of<'a>(v: &'a Json, path: &str) -> Result<&'a str, ParseError> {
    v.as_str().ok_or_else(|| ParseError {
        path: path.to_string(),
        msg: "expected a string".into(),
    })
}

fn int_of(v: &Json, path: &str) -> Result<i64, ParseError> {
    v.as_i64().ok_or_else(|| ParseError {
        path: path.to_string(),
        msg: "expected an integer".into(),
    })
}

pub fn parse_type(s: &str, path: &str) -> Result<StreamType, ParseError> {
    s.parse().or_else(|e| err(path, format!("{e}")))
}

/// A collection type written without its boundedness, such as `set<int>`.
pub fn parse_tag(s: &str, path: &str) -> Result<CollectionTypeTag, ParseError> {
    Ok(parse_type(&format!("{s}:B"), path)?.collection)
}

pub fn parse_lattice(s: &str, path: &str) -> Result<Lattice, ParseError> {
    match parse_tag(&format!("lvar<{s}>"), path)? {
        CollectionTypeTag::LVar(l) => Ok(l),
        _ => err(path, "expected a lattice"),
    }
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Bool(b) => json!(b),
        Value::Int(n) => json!(n),
        Value::Str(s) => json!(s),
        Value::Tuple(vs) => Json::Array(vs.iter().map(value_to_json).collect()),
        Value::Set(vs) => json!({"set": vs.iter().map(value_to_json).collect::<Vec<_>>()}),
    }
}

pub fn value_from_json(v: &Json, path: &str) -> Result<Value, ParseError> {
    match v {
        Json::Bool(b) => Ok(Value::Bool(*b)),
        Json::Number(_) => Ok(Value::Int(int_of(v, path)?)),
        Json::String(s) => Ok(Value::Str(s.clone())),
        Json::Array(vs) => Ok(Value::Tuple(
            vs.iter()
                .enumerate()
                .map(|(i, x)| value_from_json(x, &format!("{path}[{i}]")))
                .collect::<Result<_, _>>()?,
        )),
        Json::Object(m) if m.len() == 1 && m.contains_key("set") => {
            let xs = array(&m["set"], path)?;
            Ok(Value::Set(
                xs.iter()
                    .map(|x| value_from_json(x, path))
                    .collect::<Result<BTreeSet<_>, _>>()?,
            ))
        }
        _ => err(path, "not an element value"),
    }
}

fn values(v: &Json, path: &str) -> Result<Vec<Value>, ParseError> {
    array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| value_from_json(x, &format!("{path}[{i}]")))
        .collect()
}

fn zset_key(k: &Value) -> String {
    match k {
        Value::Str(s) => s.clone(),
        other => value_to_json(other).to_string(),
    }
}

fn zset_key_from(s: &str) -> Value {
    serde_json::from_str::<Json>(s)
        .ok()
        .and_then(|j| value_from_json(&j, "").ok())
        .unwrap_or_else(|| Value::str(s))
}

pub fn collection_to_json(c: &Collection) -> Json {
    match c {
        Collection::Seq(s) => json!({
            "terminated": s.terminated,
            "items": s.items.iter().map(value_to_json).collect::<Vec<_>>(),
        }),
        Collection::Set(s) => json!({
            "elems": s.elems.iter().map(value_to_json).collect::<Vec<_>>(),
            "fixed": s.fixed,
        }),
        Collection::ZSet(z) => {
            let cards: Map<String, Json> = z.cards.iter().map(|(k, w)| (zset_key(k), json!(w))).collect();
            json!({"cards": cards, "fixed": z.fixed})
        }
        Collection::LVar(l) => json!({
            "lattice": l.lattice.to_string(),
            "value": value_to_json(&l.value),
            "fixed": l.fixed,
        }),
        Collection::Nat(n) => json!({"value": n.value, "fixed": n.fixed}),
        Collection::Nested(v) => json!({
            "terminated": v.terminated,
            "tuples": v.tuples.iter().map(|t| t.iter().map(collection_to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
    }
}

pub fn collections_to_json(cs: &[Collection]) -> Json {
    Json::Array(cs.iter().map(collection_to_json).collect())
}

pub fn collection_from_json(v: &Json, tag: &CollectionTypeTag, path: &str) -> Result<Collection, ParseError> {
    let c = match tag {
        CollectionTypeTag::Seq(_) => Collection::Seq(SeqValue::new(
            values(field(v, "items", path)?, path)?,
            bool_field(v, "terminated", path)?,
        )),
        CollectionTypeTag::Set(_) => Collection::Set(SetValue::new(
            values(field(v, "elems", path)?, path)?.into_iter().collect(),
            bool_field(v, "fixed", path)?,
        )),
        CollectionTypeTag::ZSet(_) => {
            let Some(cards) = field(v, "cards", path)?.as_object() else {
                return err(path, "\"cards\" must be an object");
            };
            let pairs = cards
                .iter()
                .map(|(k, w)| Ok((zset_key_from(k), int_of(w, path)?)))
                .collect::<Result<Vec<_>, ParseError>>()?;
            Collection::ZSet(IntZSet::from_pairs(pairs, bool_field(v, "fixed", path)?))
        }
        CollectionTypeTag::LVar(l) => {
            if let Some(name) = v.get("lattice") {
                if parse_lattice(str_of(name, path)?, path)? != *l {
                    return err(path, format!("lattice does not match {l}"));
                }
            }
            let value = match v.get("value") {
                Some(x) => value_from_json(x, path)?,
                None => l.bottom(),
            };
            Collection::LVar(LVarValue::new(l.clone(), value, bool_field(v, "fixed", path)?))
        }
        CollectionTypeTag::Nat => {
            let value = match v.get("value") {
                None | Some(Json::Null) => None,
                Some(x) => Some(x.as_u64().ok_or_else(|| ParseError {
                    path: path.to_string(),
                    msg: "nat value must be a natural number".into(),
                })?),
            };
            Collection::Nat(SingletonNat::new(value, bool_field(v, "fixed", path)?))
        }
        CollectionTypeTag::Nested(inner) => {
            let tuples = array(field(v, "tuples", path)?, path)?
                .iter()
                .enumerate()
                .map(|(i, t)| tuple_from_json(t, inner, &format!("{path}.tuples[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            Collection::Nested(NestedSeqValue {
                inner: inner.clone(),
                tuples,
                terminated: bool_field(v, "terminated", path)?,
            })
        }
    };
    if c.member(tag) {
        Ok(c)
    } else {
        err(path, format!("value is not a member of {tag}"))
    }
}

fn tuple_from_json(v: &Json, inner: &[StreamType], path: &str) -> Result<Vec<Collection>, ParseError> {
    let xs = array(v, path)?;
    if xs.len() != inner.len() {
        return err(path, format!("tuple has {} components, expected {}", xs.len(), inner.len()));
    }
    xs.iter()
        .zip(inner)
        .enumerate()
        .map(|(i, (x, t))| collection_from_json(x, &t.collection, &format!("{path}[{i}]")))
        .collect()
}

pub fn delta_to_json(d: &Delta) -> Json {
    match d {
        Delta::Empty => json!("empty"),
        Delta::End => json!("end"),
        Delta::Seq(c) => collection_to_json(&Collection::Seq(c.clone())),
        Delta::Set(c) => collection_to_json(&Collection::Set(c.clone())),
        Delta::ZSet(c) => collection_to_json(&Collection::ZSet(c.clone())),
        Delta::LVar(c) => collection_to_json(&Collection::LVar(c.clone())),
        Delta::Nat(c) => collection_to_json(&Collection::Nat(c.clone())),
        Delta::Nested(n) => json!({
            "ops": n.ops.iter().map(|op| match op {
                NestedOp::Push(t) => json!({"push": t.iter().map(collection_to_json).collect::<Vec<_>>()}),
                NestedOp::Extend(ds) => json!({"extend": ds.iter().map(delta_to_json).collect::<Vec<_>>()}),
            }).collect::<Vec<_>>(),
            "end": n.end,
        }),
    }
}

/// Decodes a delta. A whole value (with its terminator when fixed) is also
/// accepted wherever a delta is expected.
pub fn delta_from_json(v: &Json, tag: &CollectionTypeTag, path: &str) -> Result<Delta, ParseError> {
    match v {
        Json::Null => return Ok(Delta::Empty),
        Json::String(s) if s == "empty" => return Ok(Delta::Empty),
        Json::String(s) if s == "end" => return Ok(Delta::End),
        _ => {}
    }
    match tag {
        CollectionTypeTag::Nested(inner) if v.get("ops").is_some() => {
            let ops = array(&v["ops"], path)?
                .iter()
                .enumerate()
                .map(|(i, op)| {
                    let p = format!("{path}.ops[{i}]");
                    if let Some(t) = op.get("push") {
                        Ok(NestedOp::Push(tuple_from_json(t, inner, &p)?))
                    } else if let Some(ds) = op.get("extend") {
                        let ds = array(ds, &p)?;
                        if ds.len() != inner.len() {
                            return err(&p, "extend arity mismatch");
                        }
                        Ok(NestedOp::Extend(
                            ds.iter()
                                .zip(inner)
                                .map(|(d, t)| delta_from_json(d, &t.collection, &p))
                                .collect::<Result<_, _>>()?,
                        ))
                    } else {
                        err(&p, "nested op must be {\"push\":...} or {\"extend\":...}")
                    }
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(Delta::Nested(NestedDelta {
                ops,
                end: bool_field(v, "end", path)?,
            }))
        }
        _ => Ok(collection_from_json(v, tag, path)?.as_delta()),
    }
}

pub fn func_from_json(v: &Json, path: &str) -> Result<Func, ParseError> {
    let unary = |name: &str| -> Option<Func> {
        Some(match name {
            "id" => Func::Id,
            "add" => Func::Add(None),
            "mul" => Func::Mul(None),
            "max" => Func::Max(None),
            "inc" => Func::Inc,
            "uppercase" => Func::Uppercase,
            "singleton" => Func::Singleton,
            _ => return None,
        })
    };
    match v {
        Json::String(s) => unary(s).ok_or_else(|| ParseError {
            path: path.to_string(),
            msg: format!("unknown function {s:?}"),
        }),
        Json::Object(m) if m.len() == 1 => {
            let (k, arg) = m.iter().next().expect("one entry");
            Ok(match k.as_str() {
                "add" => Func::Add(Some(int_of(arg, path)?)),
                "mul" => Func::Mul(Some(int_of(arg, path)?)),
                "max" => Func::Max(Some(int_of(arg, path)?)),
                "ge" => Func::Ge(int_of(arg, path)?),
                "proj" => Func::Proj(int_of(arg, path)?.try_into().or_else(|_| err(path, "negative projection"))?),
                "const" => Func::Const(value_from_json(arg, path)?),
                "pipe" => Func::Pipe(
                    array(arg, path)?
                        .iter()
                        .map(|f| func_from_json(f, path))
                        .collect::<Result<_, _>>()?,
                ),
                other => return err(path, format!("unknown function {other:?}")),
            })
        }
        _ => err(path, "function must be a name or a one-entry object"),
    }
}

pub fn func_to_json(f: &Func) -> Json {
    match f {
        Func::Add(Some(c)) => json!({"add": c}),
        Func::Mul(Some(c)) => json!({"mul": c}),
        Func::Max(Some(c)) => json!({"max": c}),
        Func::Ge(c) => json!({"ge": c}),
        Func::Proj(i) => json!({"proj": i}),
        Func::Const(v) => json!({"const": value_to_json(v)}),
        Func::Pipe(fs) => json!({"pipe": fs.iter().map(func_to_json).collect::<Vec<_>>()}),
        other => json!(other.name()),
    }
}

/// Operator names accepted in graph files.
pub const OPERATOR_NAMES: &[&str] = &[
    "map",
    "scan",
    "fold",
    "window",
    "tee",
    "id",
    "last",
    "fold_lattice",
    "thresh",
    "to_sequence",
    "to_sequence_naive",
    "zset_map",
    "zset_join",
    "edge_join",
    "set_union",
    "repeat_nested",
    "zip",
    "nest_once",
    "nest",
    "read_defer",
    "write_defer",
    "racy_merge",
    "stutter",
];

fn op_from_json(v: &Json, path: &str) -> Result<(Op, Option<Vec<Json>>), ParseError> {
    let name = str_of(field(v, "name", path)?, &format!("{path}.name"))?;
    let empty = Json::Object(Map::new());
    let params = v.get("params").unwrap_or(&empty);
    let pp = format!("{path}.params");
    let param = |k: &str| field(params, k, &pp);
    let f = || func_from_json(param("f")?, &format!("{pp}.f"));
    let init = || value_from_json(param("init")?, &format!("{pp}.init"));
    let lattice = || parse_lattice(str_of(param("lattice")?, &pp)?, &pp);
    let typing = |e: TypeError| ParseError {
        path: pp.clone(),
        msg: e.to_string(),
    };
    let op = match name {
        "map" => stdlib_seq::map(f()?),
        "scan" => stdlib_seq::scan(init()?, f()?),
        "fold" => stdlib_seq::fold(init()?, f()?),
        "window" => stdlib_seq::window(int_of(param("interval")?, &pp)?),
        "tee" => stdlib_seq::tee(),
        "id" => stdlib_seq::id(),
        "last" => stdlib_seq::last(),
        "fold_lattice" => stdlib_lvar::fold_lattice(f()?, lattice()?),
        "thresh" => stdlib_lvar::thresh(lattice()?, values(param("thresholds")?, &pp)?).map_err(typing)?,
        "to_sequence" => stdlib_lvar::to_sequence(),
        "to_sequence_naive" => stdlib_lvar::to_sequence_naive(),
        "zset_map" => ZSetMap::new(f()?).into(),
        "zset_join" => ZSetJoin::default().into(),
        "edge_join" => stdlib_sets::edge_join(),
        "set_union" => stdlib_sets::set_union(),
        "repeat_nested" => stdlib_sets::repeat_nested(),
        "zip" if params.get("pad") == Some(&Json::Bool(true)) => stdlib_sets::zip_padded(),
        "zip" => stdlib_sets::zip(),
        "nest_once" => stdlib_sets::nest_once(),
        "nest" => nested_streams::nest(graph_expr_from_json(param("body")?, &format!("{pp}.body"), false)?),
        "read_defer" => {
            let key = str_of(param("key")?, &pp)?;
            let tag = parse_tag(str_of(param("type")?, &pp)?, &pp)?;
            let init = match params.get("init") {
                Some(x) => Some(collection_from_json(x, &tag, &format!("{pp}.init"))?),
                None => None,
            };
            nested_streams::read_defer(key, tag, init)
        }
        "write_defer" => nested_streams::write_defer(str_of(param("key")?, &pp)?),
        "racy_merge" => RacyMerge::default().into(),
        "stutter" => Stutter.into(),
        other => return err(&format!("{path}.name"), format!("unknown operator {other:?}")),
    };
    let buffers = match v.get("buffers") {
        Some(b) => Some(array(b, &format!("{path}.buffers"))?.clone()),
        None => None,
    };
    Ok((op, buffers))
}

fn children<'a>(v: &'a Json, path: &str) -> Result<&'a Vec<Json>, ParseError> {
    let xs = array(v, path)?;
    if xs.is_empty() {
        return err(path, "composition needs at least one graph");
    }
    Ok(xs)
}

/// Decodes a graph. Buffers are kept aside as raw JSON (in node order) since
/// they can only be decoded once their types are known.
fn graph_raw(v: &Json, path: &str, top: bool, raw: &mut Vec<Option<Vec<Json>>>) -> Result<GraphExpr, ParseError> {
    if let Some(xs) = v.get("seq") {
        let gs = children(xs, path)?
            .iter()
            .enumerate()
            .map(|(i, g)| graph_raw(g, &format!("{path}.seq[{i}]"), top, raw))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GraphExpr::seq_all(gs))
    } else if let Some(xs) = v.get("par") {
        let gs = children(xs, path)?
            .iter()
            .enumerate()
            .map(|(i, g)| graph_raw(g, &format!("{path}.par[{i}]"), top, raw))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(GraphExpr::par_all(gs))
    } else if let Some(op) = v.get("op") {
        let (op, buffers) = op_from_json(op, &format!("{path}.op"))?;
        if buffers.is_some() && !top {
            return err(path, "buffers are supported only outside nest bodies");
        }
        raw.push(buffers);
        Ok(GraphExpr::node(op))
    } else {
        err(path, "graph must be {\"seq\":[...]}, {\"par\":[...]} or {\"op\":{...}}")
    }
}

fn graph_expr_from_json(v: &Json, path: &str, top: bool) -> Result<GraphExpr, ParseError> {
    graph_raw(v, path, top, &mut Vec::new())
}

/// Input types of every node in [`GraphExpr::for_each_node`] order.
fn node_input_types(g: &GraphExpr, inputs: &[StreamType], out: &mut Vec<Vec<StreamType>>) -> Result<Vec<StreamType>, TypeError> {
    match g {
        GraphExpr::Seq(a, b) => {
            let mid = node_input_types(a, inputs, out)?;
            node_input_types(b, &mid, out)
        }
        GraphExpr::Par(a, b) => {
            let k = a.arity().0.min(inputs.len());
            let mut oa = node_input_types(a, &inputs[..k], out)?;
            oa.extend(node_input_types(b, &inputs[k..], out)?);
            Ok(oa)
        }
        GraphExpr::Node { op, .. } => {
            out.push(inputs.to_vec());
            op.signature(inputs)
        }
    }
}

fn set_buffers(g: &GraphExpr, bufs: &mut std::vec::IntoIter<Option<Vec<Collection>>>) -> GraphExpr {
    match g {
        GraphExpr::Seq(a, b) => {
            let a = set_buffers(a, bufs);
            GraphExpr::seq(a, set_buffers(b, bufs))
        }
        GraphExpr::Par(a, b) => {
            let a = set_buffers(a, bufs);
            GraphExpr::par(a, set_buffers(b, bufs))
        }
        GraphExpr::Node { buffers, op } => GraphExpr::Node {
            buffers: bufs.next().flatten().unwrap_or_else(|| buffers.clone()),
            op: op.clone(),
        },
    }
}

/// Either error a graph file can produce.
#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("{0}")]
    Type(#[from] TypeError),
}

/// A graph file: `{"inputs":["seq<int>:B",...], "graph": g}`.
#[derive(Clone, Debug)]
pub struct GraphFile {
    pub inputs: Vec<StreamType>,
    pub graph: GraphExpr,
}

pub fn graph_file_from_json(v: &Json) -> Result<GraphFile, LoadError> {
    let inputs = array(field(v, "inputs", "$")?, "$.inputs")?
        .iter()
        .enumerate()
        .map(|(i, t)| parse_type(str_of(t, "$.inputs")?, &format!("$.inputs[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let mut raw = Vec::new();
    let g = graph_raw(field(v, "graph", "$")?, "$.graph", true, &mut raw)?;
    if raw.iter().all(Option::is_none) {
        return Ok(GraphFile { inputs, graph: g });
    }
    let mut types = Vec::new();
    node_input_types(&g, &inputs, &mut types)?;
    let mut decoded = Vec::new();
    for (i, (r, ts)) in raw.iter().zip(&types).enumerate() {
        decoded.push(match r {
            None => None,
            Some(bs) => {
                let path = format!("$.graph node {i} buffers");
                if bs.len() != ts.len() {
                    return Err(ParseError {
                        path,
                        msg: format!("expected {} buffers, found {}", ts.len(), bs.len()),
                    }
                    .into());
                }
                Some(
                    bs.iter()
                        .zip(ts)
                        .map(|(b, t)| collection_from_json(b, &t.collection, &path))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
        });
    }
    let graph = set_buffers(&g, &mut decoded.into_iter());
    Ok(GraphFile { inputs, graph })
}

pub fn graph_to_json(g: &GraphExpr) -> Json {
    fn flatten<'a>(g: &'a GraphExpr, seq: bool, out: &mut Vec<&'a GraphExpr>) {
        match (g, seq) {
            (GraphExpr::Seq(a, b), true) | (GraphExpr::Par(a, b), false) => {
                out.push(a);
                flatten(b, seq, out);
            }
            _ => out.push(g),
        }
    }
    match g {
        GraphExpr::Seq(..) | GraphExpr::Par(..) => {
            let seq = matches!(g, GraphExpr::Seq(..));
            let mut parts = Vec::new();
            flatten(g, seq, &mut parts);
            let xs: Vec<Json> = parts.into_iter().map(graph_to_json).collect();
            if seq {
                json!({"seq": xs})
            } else {
                json!({"par": xs})
            }
        }
        GraphExpr::Node { buffers, op } => {
            let mut o = json!({"name": op.name(), "params": op_params(op)});
            if buffers.iter().any(|b| *b != b.bottom_like()) {
                o["buffers"] = collections_to_json(buffers);
            }
            json!({ "op": o })
        }
    }
}

fn op_params(op: &Op) -> Json {
    match op {
        Op::Map(m) => json!({"f": func_to_json(&m.f)}),
        Op::Scan(s) => json!({"init": value_to_json(&s.acc), "f": func_to_json(&s.f)}),
        Op::Fold(s) => json!({"init": value_to_json(&s.acc), "f": func_to_json(&s.f)}),
        Op::Window(w) => json!({"interval": w.interval}),
        Op::FoldLattice(l) => json!({"f": func_to_json(&l.f), "lattice": l.lattice.to_string()}),
        Op::Thresh(t) => json!({
            "lattice": t.lattice.to_string(),
            "thresholds": t.thresholds.iter().map(value_to_json).collect::<Vec<_>>(),
        }),
        Op::ZSetMap(m) => json!({"f": func_to_json(&m.f)}),
        Op::Zip(z) if z.padded => json!({"pad": true}),
        Op::Nest(n) => json!({"body": graph_to_json(n.body())}),
        Op::ReadDefer(r) => json!({"key": r.key, "type": r.tag.to_string(), "init": collection_to_json(&r.value)}),
        Op::WriteDefer(w) => json!({"key": w.key}),
        _ => json!({}),
    }
}

/// A trace file: a list of `{"batch":[delta,...],"steps":n|"max","drain":...}`
/// where drain is `"all"`, `"none"`, `{"prefix":n}` or `{"random":seed}`.
pub fn trace_from_json(v: &Json, inputs: &[StreamType]) -> Result<Vec<TraceEvent>, ParseError> {
    array(v, "$")?
        .iter()
        .enumerate()
        .map(|(i, ev)| {
            let path = format!("$[{i}]");
            let batch = match ev.get("batch") {
                None => Delta::empties(inputs.len()),
                Some(b) => {
                    let b = array(b, &path)?;
                    if b.len() != inputs.len() {
                        return err(&path, format!("BatchShapeMismatch: {} deltas for {} inputs", b.len(), inputs.len()));
                    }
                    b.iter()
                        .zip(inputs)
                        .enumerate()
                        .map(|(j, (d, t))| delta_from_json(d, &t.collection, &format!("{path}.batch[{j}]")))
                        .collect::<Result<_, _>>()?
                }
            };
            let steps = match ev.get("steps") {
                None => StepLimit::Max,
                Some(Json::String(s)) if s == "max" => StepLimit::Max,
                Some(n) => StepLimit::Steps(
                    n.as_u64().ok_or_else(|| ParseError {
                        path: path.clone(),
                        msg: "steps must be a count or \"max\"".into(),
                    })? as usize,
                ),
            };
            let drain = match ev.get("drain") {
                None => DrainPolicy::All,
                Some(Json::String(s)) if s == "all" => DrainPolicy::All,
                Some(Json::String(s)) if s == "none" => DrainPolicy::None,
                Some(d) if d.get("prefix").is_some() => DrainPolicy::Prefix(int_of(&d["prefix"], &path)?.max(0) as usize),
                Some(d) if d.get("random").is_some() => DrainPolicy::RandomPortion(
                    d["random"].as_u64().ok_or_else(|| ParseError {
                        path: path.clone(),
                        msg: "random drain seed must be a natural number".into(),
                    })?,
                ),
                Some(_) => return err(&path, "unknown drain policy"),
            };
            Ok(TraceEvent { batch, steps, drain })
        })
        .collect()
}

pub fn trace_to_json(trace: &[TraceEvent]) -> Json {
    Json::Array(
        trace
            .iter()
            .map(|ev| {
                let steps = match ev.steps {
                    StepLimit::Steps(n) => json!(n),
                    StepLimit::Max => json!("max"),
                };
                let drain = match &ev.drain {
                    DrainPolicy::None => json!("none"),
                    DrainPolicy::All => json!("all"),
                    DrainPolicy::Prefix(n) => json!({"prefix": n}),
                    DrainPolicy::RandomPortion(s) => json!({"random": s}),
                };
                json!({
                    "batch": ev.batch.iter().map(delta_to_json).collect::<Vec<_>>(),
                    "steps": steps,
                    "drain": drain,
                })
            })
            .collect(),
    )
}

/// Typechecks a decoded graph file into a program.
pub fn load_program(v: &Json) -> Result<crate::scheduler::Program, LoadError> {
    let f = graph_file_from_json(v)?;
    Ok(crate::scheduler::Program::new(&f.graph, f.inputs)?)
}

/// Inferred interface as `inputs -> outputs` text.
pub fn signature_text(inputs: &[StreamType], outputs: &[StreamType]) -> String {
    let show = |ts: &[StreamType]| ts.iter().map(ToString::to_string).collect::<Vec<_>>().join(", ");
    format!("({}) -> ({})", show(inputs), show(outputs))
}
