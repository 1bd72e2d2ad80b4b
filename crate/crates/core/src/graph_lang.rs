//! Dataflow graphs: operators with input buffers, composed in sequence and in
//! parallel, with forward type inference and small-step execution.
//!
//! The exterior inputs of a graph are the buffers of the nodes reachable from its
//! left edge; outputs of a step are deltas leaving its right edge.

use std::fmt;

use thiserror::Error;

use crate::core_model::{Collection, Delta, Op, OpError, Operator, Rank, StreamType, TypeError};
use crate::nested_streams::DeferCtx;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GraphExpr {
    /// Outputs of the left graph feed the inputs of the right graph.
    Seq(Box<GraphExpr>, Box<GraphExpr>),
    /// Side by side; inputs and outputs are concatenated left then right.
    Par(Box<GraphExpr>, Box<GraphExpr>),
    /// An operator and one buffer per input. An empty buffer list is filled with
    /// bottoms by [`prepare`].
    Node { buffers: Vec<Collection>, op: Op },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    L,
    R,
}

/// Address of one enabled rule instance: the path to a node and the operator's
/// choice index there.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StepChoice {
    pub path: Vec<Dir>,
    pub choice: usize,
}

impl fmt::Display for StepChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.path {
            f.write_str(match d {
                Dir::L => "L",
                Dir::R => "R",
            })?;
        }
        write!(f, ":{}", self.choice)
    }
}

/// Result of one graph step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphStep {
    pub graph: GraphExpr,
    /// One delta per graph output.
    pub deltas: Vec<Delta>,
    /// Composition rules applied from the root down, ending in `operator`.
    pub rules: Vec<&'static str>,
    pub op: &'static str,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum RunError {
    #[error("StepBudgetExceeded: no stuck configuration within {0} steps")]
    StepBudgetExceeded(usize),
    #[error(transparent)]
    Op(#[from] OpError),
}

impl GraphExpr {
    pub fn node(op: impl Into<Op>) -> GraphExpr {
        GraphExpr::Node {
            buffers: Vec::new(),
            op: op.into(),
        }
    }

    pub fn node_with(op: impl Into<Op>, buffers: Vec<Collection>) -> GraphExpr {
        GraphExpr::Node {
            buffers,
            op: op.into(),
        }
    }

    pub fn seq(a: GraphExpr, b: GraphExpr) -> GraphExpr {
        GraphExpr::Seq(Box::new(a), Box::new(b))
    }

    pub fn par(a: GraphExpr, b: GraphExpr) -> GraphExpr {
        GraphExpr::Par(Box::new(a), Box::new(b))
    }

    /// Right-nested sequence of one or more graphs.
    pub fn seq_all(gs: Vec<GraphExpr>) -> GraphExpr {
        fold_right(gs, GraphExpr::seq)
    }

    /// Right-nested parallel composition of one or more graphs.
    pub fn par_all(gs: Vec<GraphExpr>) -> GraphExpr {
        fold_right(gs, GraphExpr::par)
    }

    /// `(inputs, outputs)`.
    pub fn arity(&self) -> (usize, usize) {
        match self {
            GraphExpr::Seq(a, b) => (a.arity().0, b.arity().1),
            GraphExpr::Par(a, b) => {
                let (ai, ao) = a.arity();
                let (bi, bo) = b.arity();
                (ai + bi, ao + bo)
            }
            GraphExpr::Node { op, .. } => op.arity(),
        }
    }

    /// Visits every node of this graph, left to right. Bodies of nested graphs
    /// are not visited.
    pub fn for_each_node(&self, f: &mut impl FnMut(&[Collection], &Op)) {
        match self {
            GraphExpr::Seq(a, b) | GraphExpr::Par(a, b) => {
                a.for_each_node(f);
                b.for_each_node(f);
            }
            GraphExpr::Node { buffers, op } => f(buffers, op),
        }
    }

    pub fn map_ops(&self, f: &mut impl FnMut(&Op) -> Op) -> GraphExpr {
        match self {
            GraphExpr::Seq(a, b) => GraphExpr::seq(a.map_ops(f), b.map_ops(f)),
            GraphExpr::Par(a, b) => GraphExpr::par(a.map_ops(f), b.map_ops(f)),
            GraphExpr::Node { buffers, op } => GraphExpr::Node {
                buffers: buffers.clone(),
                op: f(op),
            },
        }
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.for_each_node(&mut |_, _| n += 1);
        n
    }
}

fn fold_right(mut gs: Vec<GraphExpr>, f: fn(GraphExpr, GraphExpr) -> GraphExpr) -> GraphExpr {
    let mut acc = gs.pop().expect("at least one graph");
    while let Some(g) = gs.pop() {
        acc = f(g, acc);
    }
    acc
}

fn split<T>(xs: &[T], n: usize, ctx: &str) -> Result<(Vec<T>, Vec<T>), TypeError>
where
    T: Clone,
{
    if xs.len() < n {
        return Err(TypeError::ArityMismatch {
            context: ctx.to_string(),
            expected: n,
            found: xs.len(),
        });
    }
    Ok((xs[..n].to_vec(), xs[n..].to_vec()))
}

/// Fills unset buffers with bottoms of their inferred types, recursively into
/// nest bodies, and returns the inferred output types. Defer scoping is not
/// checked here; see [`typecheck`].
pub fn prepare(g: &GraphExpr, inputs: &[StreamType]) -> Result<(GraphExpr, Vec<StreamType>), TypeError> {
    match g {
        GraphExpr::Seq(a, b) => {
            let (a2, mid) = prepare(a, inputs)?;
            let (b2, outs) = prepare(b, &mid)?;
            Ok((GraphExpr::seq(a2, b2), outs))
        }
        GraphExpr::Par(a, b) => {
            let (ia, ib) = split(inputs, a.arity().0, "par")?;
            let (a2, mut oa) = prepare(a, &ia)?;
            let (b2, ob) = prepare(b, &ib)?;
            oa.extend(ob);
            Ok((GraphExpr::par(a2, b2), oa))
        }
        GraphExpr::Node { buffers, op } => {
            let outs = op.signature(inputs)?;
            let op = match op {
                Op::Nest(n) => n.prepare(&inputs[0])?.into(),
                other => other.clone(),
            };
            let buffers = if buffers.is_empty() {
                Collection::bottoms(inputs)
            } else {
                buffers.clone()
            };
            Ok((GraphExpr::Node { buffers, op }, outs))
        }
    }
}

/// Forward type inference. `ctx` binds deferred keys; `None` at top level, where
/// any deferred read or write is unbound.
pub fn typecheck(g: &GraphExpr, inputs: &[StreamType], ctx: Option<&DeferCtx>) -> Result<Vec<StreamType>, TypeError> {
    match g {
        GraphExpr::Seq(a, b) => {
            let mid = typecheck(a, inputs, ctx)?;
            typecheck(b, &mid, ctx)
        }
        GraphExpr::Par(a, b) => {
            let (ia, ib) = split(inputs, a.arity().0, "par")?;
            let mut oa = typecheck(a, &ia, ctx)?;
            oa.extend(typecheck(b, &ib, ctx)?);
            Ok(oa)
        }
        GraphExpr::Node { buffers, op } => {
            let bound = |k: &str| {
                ctx.and_then(|c| c.get(k))
                    .ok_or_else(|| TypeError::DeferKeyUnbound(k.to_string()))
            };
            if let Some((k, _)) = op.defer_read() {
                bound(k)?;
            }
            if let Some(k) = op.defer_write() {
                if let (Some(want), Some(t)) = (bound(k)?, inputs.first()) {
                    if *want != t.collection {
                        return Err(TypeError::DeferContextMismatch(k.to_string()));
                    }
                }
            }
            let outs = op.signature(inputs)?;
            if !buffers.is_empty() {
                if buffers.len() != inputs.len() {
                    return Err(TypeError::ArityMismatch {
                        context: format!("buffers of {}", op.name()),
                        expected: inputs.len(),
                        found: buffers.len(),
                    });
                }
                for (position, (c, t)) in buffers.iter().zip(inputs).enumerate() {
                    if !c.member(&t.collection) {
                        return Err(TypeError::BufferTypeMismatch {
                            op: op.name().to_string(),
                            position,
                        });
                    }
                }
            }
            Ok(outs)
        }
    }
}

/// Prepares and typechecks a top-level graph.
pub fn check_top(g: &GraphExpr, inputs: &[StreamType]) -> Result<(GraphExpr, Vec<StreamType>), TypeError> {
    let (g, _) = prepare(g, inputs)?;
    let outs = typecheck(&g, inputs, None)?;
    Ok((g, outs))
}

/// Typechecks a graph mid-run, treating every deferred key it mentions as
/// bound. Used to check that steps preserve typing.
pub fn typecheck_open(g: &GraphExpr, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
    let mut ctx = DeferCtx::new();
    g.for_each_node(&mut |_, op| {
        if let Some((k, _)) = op.defer_read() {
            ctx.insert(k.to_string(), None);
        }
        if let Some(k) = op.defer_write() {
            ctx.insert(k.to_string(), None);
        }
    });
    typecheck(g, inputs, Some(&ctx))
}

/// Exterior input buffers, in order.
pub fn inputs(g: &GraphExpr) -> Vec<Collection> {
    match g {
        GraphExpr::Seq(a, _) => inputs(a),
        GraphExpr::Par(a, b) => {
            let mut v = inputs(a);
            v.extend(inputs(b));
            v
        }
        GraphExpr::Node { buffers, .. } => buffers.clone(),
    }
}

/// Replaces the exterior input buffers.
pub fn set_inputs(g: &GraphExpr, cs: &[Collection]) -> Result<GraphExpr, OpError> {
    let (n, _) = g.arity();
    if cs.len() != n {
        return Err(OpError::Arity {
            expected: n,
            found: cs.len(),
        });
    }
    Ok(match g {
        GraphExpr::Seq(a, b) => GraphExpr::Seq(Box::new(set_inputs(a, cs)?), b.clone()),
        GraphExpr::Par(a, b) => {
            let k = a.arity().0;
            GraphExpr::par(set_inputs(a, &cs[..k])?, set_inputs(b, &cs[k..])?)
        }
        GraphExpr::Node { op, .. } => GraphExpr::Node {
            buffers: cs.to_vec(),
            op: op.clone(),
        },
    })
}

/// Concatenates one delta onto each exterior input.
pub fn push_inputs(g: &GraphExpr, ds: &[Delta]) -> Result<GraphExpr, OpError> {
    let cs = Collection::concat_all(&inputs(g), ds)?;
    set_inputs(g, &cs)
}

pub fn enabled_steps(g: &GraphExpr) -> Vec<StepChoice> {
    let mut out = Vec::new();
    collect_steps(g, &mut Vec::new(), &mut out);
    out
}

fn collect_steps(g: &GraphExpr, path: &mut Vec<Dir>, out: &mut Vec<StepChoice>) {
    match g {
        GraphExpr::Seq(a, b) | GraphExpr::Par(a, b) => {
            path.push(Dir::L);
            collect_steps(a, path, out);
            path.pop();
            path.push(Dir::R);
            collect_steps(b, path, out);
            path.pop();
        }
        GraphExpr::Node { buffers, op } => {
            for choice in 0..op.choices(buffers) {
                out.push(StepChoice {
                    path: path.clone(),
                    choice,
                });
            }
        }
    }
}

pub fn is_stuck(g: &GraphExpr) -> bool {
    enabled_steps(g).is_empty()
}

pub fn step_graph(g: &GraphExpr, sc: &StepChoice) -> Result<GraphStep, OpError> {
    step_at(g, &sc.path, sc.choice)
}

fn step_at(g: &GraphExpr, path: &[Dir], choice: usize) -> Result<GraphStep, OpError> {
    let bad = || OpError::InvalidChoice("path does not address a node".into());
    match (g, path.split_first()) {
        (GraphExpr::Node { buffers, op }, None) => {
            let out = op.step(buffers, choice)?;
            Ok(GraphStep {
                graph: GraphExpr::Node {
                    buffers: out.inputs,
                    op: out.op,
                },
                deltas: out.deltas,
                rules: vec!["operator"],
                op: op.name(),
            })
        }
        (GraphExpr::Seq(a, b), Some((Dir::L, rest))) => {
            let s = step_at(a, rest, choice)?;
            let b2 = push_inputs(b, &s.deltas)?;
            Ok(GraphStep {
                graph: GraphExpr::Seq(Box::new(s.graph), Box::new(b2)),
                deltas: Delta::empties(b.arity().1),
                rules: prepend("sequence-left", s.rules),
                op: s.op,
            })
        }
        (GraphExpr::Seq(a, b), Some((Dir::R, rest))) => {
            let s = step_at(b, rest, choice)?;
            Ok(GraphStep {
                graph: GraphExpr::Seq(a.clone(), Box::new(s.graph)),
                deltas: s.deltas,
                rules: prepend("sequence-right", s.rules),
                op: s.op,
            })
        }
        (GraphExpr::Par(a, b), Some((Dir::L, rest))) => {
            let s = step_at(a, rest, choice)?;
            let mut deltas = s.deltas;
            deltas.extend(Delta::empties(b.arity().1));
            Ok(GraphStep {
                graph: GraphExpr::Par(Box::new(s.graph), b.clone()),
                deltas,
                rules: prepend("par-left", s.rules),
                op: s.op,
            })
        }
        (GraphExpr::Par(a, b), Some((Dir::R, rest))) => {
            let s = step_at(b, rest, choice)?;
            let mut deltas = Delta::empties(a.arity().1);
            deltas.extend(s.deltas);
            Ok(GraphStep {
                graph: GraphExpr::Par(a.clone(), Box::new(s.graph)),
                deltas,
                rules: prepend("par-right", s.rules),
                op: s.op,
            })
        }
        _ => Err(bad()),
    }
}

fn prepend(rule: &'static str, mut rules: Vec<&'static str>) -> Vec<&'static str> {
    rules.insert(0, rule);
    rules
}

/// Concatenation of node ranks, left to right.
pub fn graph_rank(g: &GraphExpr) -> Rank {
    let mut parts = Vec::new();
    g.for_each_node(&mut |buffers, op| parts.push(op.rank(buffers)));
    Rank::concat(parts)
}

/// Steps with the first enabled choice until stuck, accumulating outputs onto
/// `outs`.
pub fn run_to_stuck(g: &GraphExpr, outs: Vec<Collection>, budget: usize) -> Result<(GraphExpr, Vec<Collection>), RunError> {
    let mut g = g.clone();
    let mut outs = outs;
    for _ in 0..budget {
        let Some(sc) = enabled_steps(&g).into_iter().next() else {
            return Ok((g, outs));
        };
        let s = step_graph(&g, &sc)?;
        outs = Collection::concat_all(&outs, &s.deltas).map_err(OpError::from)?;
        g = s.graph;
    }
    if is_stuck(&g) {
        Ok((g, outs))
    } else {
        Err(RunError::StepBudgetExceeded(budget))
    }
}

#[cfg(test)]
mod tests;
