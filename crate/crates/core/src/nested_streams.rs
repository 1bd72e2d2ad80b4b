//! Nested streams (sequences of tuples of collections), the `nest` combinator that
//! runs a graph once per tuple, and deferred values carried between iterations.
//!
//! Tuples are stored newest first. Only the newest (leftmost) tuple can still grow;
//! every older tuple has all of its bounded components fixed.

use std::collections::BTreeMap;

use crate::core_model::operator::support::{flag, malformed, mismatch, require_bounded};
use crate::core_model::{
    Collection, CollectionLanguage, CollectionTypeTag, ConcatError, Delta, Op, OpError, Operator,
    Rank, StepOut, StreamType, TypeError,
};
use crate::graph_lang::{self, GraphExpr};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct NestedSeqValue {
    pub inner: Vec<StreamType>,
    /// Newest first.
    pub tuples: Vec<Vec<Collection>>,
    pub terminated: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NestedOp {
    /// Start a new tuple. The previous leftmost tuple must have its bounded
    /// components fixed.
    Push(Vec<Collection>),
    /// Concatenate one delta onto each component of the leftmost tuple.
    Extend(Vec<Delta>),
}

/// Ops applied in order, then the terminator when `end`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NestedDelta {
    pub ops: Vec<NestedOp>,
    pub end: bool,
}

impl NestedSeqValue {
    pub fn empty(inner: Vec<StreamType>) -> NestedSeqValue {
        NestedSeqValue {
            inner,
            tuples: Vec::new(),
            terminated: false,
        }
    }

    /// Builds a value from tuples in arrival order (oldest first).
    pub fn from_arrivals(inner: Vec<StreamType>, arrivals: Vec<Vec<Collection>>, terminated: bool) -> NestedSeqValue {
        let mut tuples = arrivals;
        tuples.reverse();
        NestedSeqValue {
            inner,
            tuples,
            terminated,
        }
    }

    /// The whole value as pushes from oldest to newest.
    pub fn as_delta(&self) -> NestedDelta {
        NestedDelta {
            ops: self.tuples.iter().rev().map(|t| NestedOp::Push(t.clone())).collect(),
            end: self.terminated,
        }
    }

    /// Fixes the bounded components of the leftmost tuple, then terminates.
    pub fn fix(&self) -> NestedSeqValue {
        let mut v = self.terminate();
        if let Some(t) = v.tuples.first_mut() {
            for (c, ty) in t.iter_mut().zip(&self.inner) {
                if ty.is_bounded() {
                    *c = c.fix();
                }
            }
        }
        v
    }

    /// Bounded components of the leftmost tuple are all fixed.
    pub fn leftmost_complete(&self) -> bool {
        self.tuples.first().map_or(true, |t| bounded_fixed(t, &self.inner))
    }

    fn apply(&mut self, op: &NestedOp) -> Result<(), ConcatError> {
        let width = self.inner.len();
        match op {
            NestedOp::Push(cs) => {
                if cs.len() != width {
                    return Err(ConcatError::NestedArity {
                        expected: width,
                        found: cs.len(),
                    });
                }
                if !self.leftmost_complete() {
                    return Err(ConcatError::BoundednessInvariantViolation);
                }
                self.tuples.insert(0, cs.clone());
            }
            NestedOp::Extend(ds) => {
                let t = self.tuples.first_mut().ok_or(ConcatError::ExtendOnEmpty)?;
                *t = Collection::concat_all(t, ds)?;
            }
        }
        Ok(())
    }
}

fn bounded_fixed(t: &[Collection], inner: &[StreamType]) -> bool {
    t.iter().zip(inner).all(|(c, ty)| !ty.is_bounded() || c.is_fixed())
}

impl CollectionLanguage for NestedSeqValue {
    type Delta = NestedDelta;

    fn concat(&self, d: &NestedDelta) -> Result<NestedSeqValue, ConcatError> {
        if self.terminated {
            return Ok(self.clone());
        }
        let mut v = self.clone();
        for op in &d.ops {
            v.apply(op)?;
        }
        v.terminated = d.end;
        Ok(v)
    }

    fn terminate(&self) -> NestedSeqValue {
        NestedSeqValue {
            terminated: true,
            ..self.clone()
        }
    }

    fn is_fixed(&self) -> bool {
        self.terminated
    }

    fn fix(&self) -> NestedSeqValue {
        NestedSeqValue::fix(self)
    }

    fn empty_delta(&self) -> NestedDelta {
        NestedDelta::default()
    }

    fn member(&self, tag: &CollectionTypeTag) -> bool {
        let CollectionTypeTag::Nested(inner) = tag else {
            return false;
        };
        *inner == self.inner
            && self.tuples.iter().enumerate().all(|(i, t)| {
                t.len() == inner.len()
                    && Collection::all_members(t, inner)
                    && (i == 0 || bounded_fixed(t, inner))
            })
    }
}

fn nested_inner<'a>(op: &str, t: &'a StreamType) -> Result<&'a [StreamType], TypeError> {
    match &t.collection {
        CollectionTypeTag::Nested(inner) => Ok(inner),
        _ => Err(mismatch(op, 0, "[_,..]", t)),
    }
}

/// Deferred values written by one iteration, by key.
pub type DeferValues = BTreeMap<String, Collection>;

/// Keys bound by the closest enclosing `nest`, with the type read at, if any.
pub type DeferCtx = BTreeMap<String, Option<CollectionTypeTag>>;

/// Reads and writes of deferred keys made directly by `g`, not by nested graphs.
fn defer_uses(g: &GraphExpr) -> (Vec<(String, CollectionTypeTag)>, Vec<String>) {
    let mut reads = Vec::new();
    let mut writes = Vec::new();
    g.for_each_node(&mut |_, op| {
        if let Some((k, t)) = op.defer_read() {
            reads.push((k.to_string(), t.clone()));
        }
        if let Some(k) = op.defer_write() {
            writes.push(k.to_string());
        }
    });
    (reads, writes)
}

/// Binding context of a nest body: every used key is written exactly once and
/// all reads of a key agree on its type.
pub fn nest_context(g: &GraphExpr) -> Result<DeferCtx, TypeError> {
    let (reads, writes) = defer_uses(g);
    let mut ctx = DeferCtx::new();
    for (k, t) in reads {
        match ctx.get(&k) {
            Some(Some(prev)) if *prev != t => return Err(TypeError::DeferContextMismatch(k)),
            _ => {
                ctx.insert(k, Some(t));
            }
        }
    }
    for k in &writes {
        ctx.entry(k.clone()).or_insert(None);
    }
    for k in ctx.keys() {
        if writes.iter().filter(|w| *w == k).count() != 1 {
            return Err(TypeError::DeferKeyReusedOrUnused(k.clone()));
        }
    }
    Ok(ctx)
}

/// Values currently buffered at each `write_defer` of `g`.
pub fn collect_defer(g: &GraphExpr) -> DeferValues {
    let mut out = DeferValues::new();
    g.for_each_node(&mut |buffers, op| {
        if let (Some(k), Some(c)) = (op.defer_write(), buffers.first()) {
            out.insert(k.to_string(), c.clone());
        }
    });
    out
}

/// Replaces the value of every `read_defer` whose key is in `vals`.
pub fn set_defer(g: &GraphExpr, vals: &DeferValues) -> GraphExpr {
    g.map_ops(&mut |op| match op {
        Op::ReadDefer(r) => match vals.get(&r.key) {
            Some(v) => ReadDefer::new(&r.key, r.tag.clone(), Some(v.clone())).into(),
            None => op.clone(),
        },
        other => other.clone(),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum NestPhase {
    BeforeFirst {
        g: GraphExpr,
    },
    Running {
        g: GraphExpr,
        /// Pristine body used for every tuple.
        g_o: GraphExpr,
        /// Output of the current iteration so far.
        outs: Vec<Collection>,
        out_types: Vec<StreamType>,
    },
}

/// `nest(g)`: runs `g` on each input tuple in turn, emitting one output tuple per
/// input tuple. Deferred writes of one iteration become reads of the next.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Nest {
    pub phase: NestPhase,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum NestAction {
    First,
    FirstFixed,
    RunGraph,
    RunStep,
    RunFixed,
}

impl Nest {
    pub fn new(g: GraphExpr) -> Nest {
        Nest {
            phase: NestPhase::BeforeFirst { g },
        }
    }

    pub fn body(&self) -> &GraphExpr {
        match &self.phase {
            NestPhase::BeforeFirst { g } | NestPhase::Running { g, .. } => g,
        }
    }

    /// Fills unset buffers of the body for the given input type.
    pub fn prepare(&self, input: &StreamType) -> Result<Nest, TypeError> {
        let inner = nested_inner(self.name(), input)?;
        let (g, _) = graph_lang::prepare(self.body(), inner)?;
        Ok(Nest::new(g))
    }

    /// Body with its exterior inputs set to the rightmost tuple.
    fn loaded(g: &GraphExpr, v: &NestedSeqValue) -> Option<GraphExpr> {
        let t = v.tuples.last()?;
        graph_lang::set_inputs(g, t).ok()
    }

    fn action(&self, inputs: &[Collection]) -> Vec<(NestAction, usize)> {
        let Some(v) = inputs.first().and_then(Collection::as_nested) else {
            return Vec::new();
        };
        match &self.phase {
            NestPhase::BeforeFirst { .. } => {
                if !v.tuples.is_empty() {
                    vec![(NestAction::First, 0)]
                } else if v.terminated {
                    vec![(NestAction::FirstFixed, 0)]
                } else {
                    Vec::new()
                }
            }
            NestPhase::Running { g, outs, .. } => {
                let Some(loaded) = Nest::loaded(g, v) else {
                    return Vec::new();
                };
                let n = graph_lang::enabled_steps(&loaded).len();
                if n > 0 {
                    return (0..n).map(|i| (NestAction::RunGraph, i)).collect();
                }
                let settled = outs.iter().all(Collection::is_fixed)
                    && collect_defer(&loaded).values().all(Collection::is_fixed);
                match (settled, v.tuples.len(), v.terminated) {
                    (true, n, _) if n >= 2 => vec![(NestAction::RunStep, 0)],
                    (true, 1, true) => vec![(NestAction::RunFixed, 0)],
                    _ => Vec::new(),
                }
            }
        }
    }
}

impl Operator for Nest {
    fn name(&self) -> &'static str {
        "nest"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let inner = nested_inner(self.name(), &inputs[0])?;
        let ctx = nest_context(self.body())?;
        let outs = graph_lang::typecheck(self.body(), inner, Some(&ctx))?;
        if let Some(position) = outs.iter().position(|t| !t.is_bounded()) {
            return Err(TypeError::NestOutputUnbounded { position });
        }
        Ok(vec![StreamType::new(CollectionTypeTag::Nested(outs), inputs[0].bound)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        self.action(inputs).len()
    }

    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
        let v = inputs
            .first()
            .and_then(Collection::as_nested)
            .ok_or_else(|| malformed(self.name(), "expected a nested input"))?;
        let (action, inner_choice) = self.action(inputs)[choice];
        let push = |out_types: &[StreamType]| {
            Delta::Nested(NestedDelta {
                ops: vec![NestedOp::Push(Collection::bottoms(out_types))],
                end: false,
            })
        };
        match (&self.phase, action) {
            (NestPhase::BeforeFirst { g }, NestAction::First) => {
                let (g, out_types) = graph_lang::prepare(g, &v.inner)?;
                let delta = push(&out_types);
                Ok(StepOut {
                    inputs: inputs.to_vec(),
                    op: Nest {
                        phase: NestPhase::Running {
                            g_o: g.clone(),
                            g,
                            outs: Collection::bottoms(&out_types),
                            out_types,
                        },
                    }
                    .into(),
                    deltas: vec![delta],
                })
            }
            (NestPhase::BeforeFirst { g }, NestAction::FirstFixed) => Ok(StepOut {
                inputs: inputs.to_vec(),
                op: Nest {
                    phase: NestPhase::Running {
                        g: g.clone(),
                        g_o: g.clone(),
                        outs: Vec::new(),
                        out_types: Vec::new(),
                    },
                }
                .into(),
                deltas: vec![Delta::End],
            }),
            (NestPhase::Running { g, g_o, outs, out_types }, NestAction::RunGraph) => {
                let loaded = Nest::loaded(g, v).ok_or_else(|| malformed(self.name(), "no tuple"))?;
                let sc = graph_lang::enabled_steps(&loaded)
                    .into_iter()
                    .nth(inner_choice)
                    .ok_or_else(|| OpError::InvalidChoice("nest inner step".into()))?;
                let stepped = graph_lang::step_graph(&loaded, &sc)?;
                let consumed = graph_lang::inputs(&stepped.graph);
                let mut v2 = v.clone();
                *v2.tuples.last_mut().unwrap() = consumed.clone();
                let blank: Vec<Collection> = consumed.iter().map(Collection::bottom_like).collect();
                let g2 = graph_lang::set_inputs(&stepped.graph, &blank)?;
                let outs2 = Collection::concat_all(outs, &stepped.deltas)?;
                Ok(StepOut {
                    inputs: vec![Collection::Nested(v2)],
                    op: Nest {
                        phase: NestPhase::Running {
                            g: g2,
                            g_o: g_o.clone(),
                            outs: outs2,
                            out_types: out_types.clone(),
                        },
                    }
                    .into(),
                    deltas: vec![Delta::Nested(NestedDelta {
                        ops: vec![NestedOp::Extend(stepped.deltas)],
                        end: false,
                    })],
                })
            }
            (NestPhase::Running { g, g_o, out_types, .. }, NestAction::RunStep) => {
                let loaded = Nest::loaded(g, v).ok_or_else(|| malformed(self.name(), "no tuple"))?;
                let next_g = set_defer(g_o, &collect_defer(&loaded));
                let mut v2 = v.clone();
                v2.tuples.pop();
                Ok(StepOut {
                    inputs: vec![Collection::Nested(v2)],
                    op: Nest {
                        phase: NestPhase::Running {
                            g: next_g,
                            g_o: g_o.clone(),
                            outs: Collection::bottoms(out_types),
                            out_types: out_types.clone(),
                        },
                    }
                    .into(),
                    deltas: vec![push(out_types)],
                })
            }
            (NestPhase::Running { g_o, out_types, .. }, NestAction::RunFixed) => {
                let mut v2 = v.clone();
                v2.tuples.pop();
                Ok(StepOut {
                    inputs: vec![Collection::Nested(v2)],
                    op: Nest {
                        phase: NestPhase::Running {
                            g: g_o.clone(),
                            g_o: g_o.clone(),
                            outs: Collection::bottoms(out_types),
                            out_types: out_types.clone(),
                        },
                    }
                    .into(),
                    deltas: vec![Delta::End],
                })
            }
            _ => Err(OpError::InvalidChoice("nest rule does not match its phase".into())),
        }
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        let v = inputs.first().and_then(Collection::as_nested);
        let tuples = v.map_or(0, |v| v.tuples.len() as u64);
        let (before, g) = match &self.phase {
            NestPhase::BeforeFirst { g } => (true, g),
            NestPhase::Running { g, .. } => (false, g),
        };
        let inner = v
            .and_then(|v| Nest::loaded(g, v))
            .map(|l| graph_lang::graph_rank(&l))
            .unwrap_or_else(|| graph_lang::graph_rank(g));
        Rank::concat([Rank(vec![tuples + flag(before)]), inner])
    }
}

/// `read_defer(key)`: emits the value written under `key` by the previous
/// iteration, or the initial value on the first one.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ReadDefer {
    pub key: String,
    pub tag: CollectionTypeTag,
    pub value: Collection,
    pub emitted: bool,
}

impl ReadDefer {
    pub fn new(key: &str, tag: CollectionTypeTag, value: Option<Collection>) -> ReadDefer {
        let value = value.unwrap_or_else(|| Collection::bottom(&tag));
        ReadDefer {
            key: key.to_string(),
            tag,
            value,
            emitted: false,
        }
    }
}

impl Operator for ReadDefer {
    fn name(&self) -> &'static str {
        "read_defer"
    }

    fn arity(&self) -> (usize, usize) {
        (0, 1)
    }

    fn signature(&self, _inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        if !self.value.member(&self.tag) {
            return Err(TypeError::InvalidParameter {
                op: self.name().into(),
                reason: format!("initial value is not a member of {}", self.tag),
            });
        }
        Ok(vec![StreamType::bounded(self.tag.clone())])
    }

    fn choices(&self, _inputs: &[Collection]) -> usize {
        usize::from(!self.emitted)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        Ok(StepOut {
            inputs: inputs.to_vec(),
            op: ReadDefer {
                emitted: true,
                ..self.clone()
            }
            .into(),
            deltas: vec![self.value.fix().as_delta()],
        })
    }

    fn rank(&self, _inputs: &[Collection]) -> Rank {
        Rank(vec![flag(!self.emitted)])
    }

    fn defer_read(&self) -> Option<(&str, &CollectionTypeTag)> {
        Some((&self.key, &self.tag))
    }
}

/// `write_defer(key)`: a sink whose buffered input becomes the next iteration's
/// value of `key`. It never steps.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WriteDefer {
    pub key: String,
}

impl WriteDefer {
    pub fn new(key: &str) -> WriteDefer {
        WriteDefer { key: key.to_string() }
    }
}

impl Operator for WriteDefer {
    fn name(&self) -> &'static str {
        "write_defer"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 0)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        require_bounded(self.name(), 0, &inputs[0])?;
        Ok(Vec::new())
    }

    fn choices(&self, _inputs: &[Collection]) -> usize {
        0
    }

    fn step(&self, _inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        Err(OpError::InvalidChoice("write_defer never steps".into()))
    }

    fn rank(&self, _inputs: &[Collection]) -> Rank {
        Rank(vec![0])
    }

    fn defer_write(&self) -> Option<&str> {
        Some(&self.key)
    }
}

pub fn nest(g: GraphExpr) -> Op {
    Nest::new(g).into()
}

pub fn read_defer(key: &str, tag: CollectionTypeTag, value: Option<Collection>) -> Op {
    ReadDefer::new(key, tag, value).into()
}

pub fn write_defer(key: &str) -> Op {
    WriteDefer::new(key).into()
}

#[cfg(test)]
mod tests;
