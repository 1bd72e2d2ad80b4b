//! Grow-only sets and the set and nesting operators used by reachability:
//! edge_join, set_union, repeat_nested, zip, nest_once.

use std::collections::BTreeSet;

use crate::core_model::operator::support::{flag, malformed, mismatch, require_bounded};
use crate::core_model::{
    Collection, CollectionLanguage, CollectionTypeTag, ConcatError, Delta, Op, OpError, Operator,
    Rank, StepOut, StreamType, TypeError,
};
use crate::nested_streams::{NestedDelta, NestedOp, NestedSeqValue};
use crate::value::{ElemType, Value};

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SetValue {
    pub elems: BTreeSet<Value>,
    pub fixed: bool,
}

impl SetValue {
    pub fn new(elems: BTreeSet<Value>, fixed: bool) -> SetValue {
        SetValue { elems, fixed }
    }

    pub fn of(elems: impl IntoIterator<Item = Value>, fixed: bool) -> SetValue {
        SetValue::new(elems.into_iter().collect(), fixed)
    }
}

impl CollectionLanguage for SetValue {
    type Delta = SetValue;

    fn concat(&self, d: &SetValue) -> Result<SetValue, ConcatError> {
        if self.fixed {
            return Ok(self.clone());
        }
        let elems = self.elems.union(&d.elems).cloned().collect();
        Ok(SetValue::new(elems, d.fixed))
    }

    fn terminate(&self) -> SetValue {
        SetValue::new(self.elems.clone(), true)
    }

    fn is_fixed(&self) -> bool {
        self.fixed
    }

    fn empty_delta(&self) -> SetValue {
        SetValue::default()
    }

    fn member(&self, tag: &CollectionTypeTag) -> bool {
        match tag {
            CollectionTypeTag::Set(t) => self.elems.iter().all(|v| v.has_type(t)),
            _ => false,
        }
    }
}

fn set_elem<'a>(op: &str, i: usize, t: &'a StreamType) -> Result<&'a ElemType, TypeError> {
    match &t.collection {
        CollectionTypeTag::Set(e) => Ok(e),
        _ => Err(mismatch(op, i, "set<_>", t)),
    }
}

fn set_inputs(inputs: &[Collection]) -> Option<(&SetValue, &SetValue)> {
    Some((inputs.first()?.as_set()?, inputs.get(1)?.as_set()?))
}

fn emptied(s: &SetValue) -> Collection {
    Collection::Set(SetValue::new(BTreeSet::new(), s.fixed))
}

/// Enabled actions of a two-input set operator: consume the left buffer, consume
/// the right buffer, or forward the terminator once both are fixed and empty.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum SetAction {
    Left,
    Right,
    End,
}

fn set_actions(inputs: &[Collection], done: bool) -> Vec<SetAction> {
    let Some((a, b)) = set_inputs(inputs) else {
        return Vec::new();
    };
    let mut acts = Vec::new();
    if !a.elems.is_empty() {
        acts.push(SetAction::Left);
    }
    if !b.elems.is_empty() {
        acts.push(SetAction::Right);
    }
    if acts.is_empty() && a.fixed && b.fixed && !done {
        acts.push(SetAction::End);
    }
    acts
}

fn set_rank(inputs: &[Collection], done: bool) -> Rank {
    match set_inputs(inputs) {
        Some((a, b)) => Rank(vec![
            (a.elems.len() + b.elems.len()) as u64 + flag(a.fixed && b.fixed && !done),
        ]),
        None => Rank(vec![0]),
    }
}

fn emit_set(elems: BTreeSet<Value>) -> Delta {
    Delta::Set(SetValue::new(elems, false))
}

/// `edge_join(nodes, edges)`: emits `{d | (s, d) in edges, s in nodes}`. Consuming
/// either side joins it against everything seen so far on the other side.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct EdgeJoin {
    pub nodes: BTreeSet<Value>,
    pub edges: BTreeSet<(Value, Value)>,
    pub done: bool,
}

fn as_edge(v: &Value) -> Option<(Value, Value)> {
    match v {
        Value::Tuple(vs) if vs.len() == 2 => Some((vs[0].clone(), vs[1].clone())),
        _ => None,
    }
}

impl Operator for EdgeJoin {
    fn name(&self) -> &'static str {
        "edge_join"
    }

    fn arity(&self) -> (usize, usize) {
        (2, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let t = set_elem(self.name(), 0, &inputs[0])?;
        let e = set_elem(self.name(), 1, &inputs[1])?;
        if *e != ElemType::Tuple(vec![t.clone(), t.clone()]) {
            return Err(mismatch(self.name(), 1, &format!("set<({t},{t})>"), &inputs[1]));
        }
        Ok(vec![StreamType::new(
            inputs[0].collection.clone(),
            inputs[0].bound.join(inputs[1].bound),
        )])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        set_actions(inputs, self.done).len()
    }

    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
        let (a, b) = set_inputs(inputs).ok_or_else(|| malformed(self.name(), "bad inputs"))?;
        let mut next = self.clone();
        let (inputs, delta) = match set_actions(inputs, self.done)[choice] {
            SetAction::Left => {
                let out = self
                    .edges
                    .iter()
                    .filter(|(s, _)| a.elems.contains(s))
                    .map(|(_, d)| d.clone())
                    .collect();
                next.nodes.extend(a.elems.iter().cloned());
                (vec![emptied(a), Collection::Set(b.clone())], emit_set(out))
            }
            SetAction::Right => {
                let mut out = BTreeSet::new();
                for v in &b.elems {
                    let (s, d) = as_edge(v).ok_or_else(|| malformed(self.name(), "edge is not a pair"))?;
                    if self.nodes.contains(&s) {
                        out.insert(d.clone());
                    }
                    next.edges.insert((s, d));
                }
                (vec![Collection::Set(a.clone()), emptied(b)], emit_set(out))
            }
            SetAction::End => {
                next.done = true;
                (inputs.to_vec(), Delta::End)
            }
        };
        Ok(StepOut {
            inputs,
            op: next.into(),
            deltas: vec![delta],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        set_rank(inputs, self.done)
    }
}

/// `set_union(a, b)`: forwards each side's pending elements as they arrive.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SetUnion {
    pub done: bool,
}

impl Operator for SetUnion {
    fn name(&self) -> &'static str {
        "set_union"
    }

    fn arity(&self) -> (usize, usize) {
        (2, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let t = set_elem(self.name(), 0, &inputs[0])?;
        let u = set_elem(self.name(), 1, &inputs[1])?;
        if t != u {
            return Err(mismatch(self.name(), 1, &format!("set<{t}>"), &inputs[1]));
        }
        Ok(vec![StreamType::new(
            inputs[0].collection.clone(),
            inputs[0].bound.join(inputs[1].bound),
        )])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        set_actions(inputs, self.done).len()
    }

    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
        let (a, b) = set_inputs(inputs).ok_or_else(|| malformed(self.name(), "bad inputs"))?;
        let (inputs, delta, done) = match set_actions(inputs, self.done)[choice] {
            SetAction::Left => (
                vec![emptied(a), Collection::Set(b.clone())],
                emit_set(a.elems.clone()),
                false,
            ),
            SetAction::Right => (
                vec![Collection::Set(a.clone()), emptied(b)],
                emit_set(b.elems.clone()),
                false,
            ),
            SetAction::End => (inputs.to_vec(), Delta::End, true),
        };
        Ok(StepOut {
            inputs,
            op: SetUnion { done }.into(),
            deltas: vec![delta],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        set_rank(inputs, self.done)
    }
}

fn flat<'a>(op: &str, i: usize, t: &'a StreamType) -> Result<&'a CollectionTypeTag, TypeError> {
    match &t.collection {
        CollectionTypeTag::Nested(_) => Err(mismatch(op, i, "a flat collection", t)),
        c => Ok(c),
    }
}

/// `repeat_nested(data, k)`: once both inputs are fixed, emits `k` fixed copies of
/// `data` as a nested stream, then terminates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RepeatNested {
    /// Absorbed data; `None` until the first step.
    pub buf: Option<Collection>,
    pub closed: bool,
    pub emitted: u64,
    pub done: bool,
}

impl Default for RepeatNested {
    fn default() -> Self {
        RepeatNested {
            buf: None,
            closed: false,
            emitted: 0,
            done: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum RepeatAction {
    Absorb,
    Close,
    Emit,
    End,
}

impl RepeatNested {
    fn target(inputs: &[Collection]) -> Option<u64> {
        let k = inputs.get(1)?.as_nat()?;
        k.fixed.then(|| k.value.unwrap_or(0))
    }

    fn action(&self, inputs: &[Collection]) -> Option<RepeatAction> {
        let data = inputs.first()?;
        if data.content_size() > 0 {
            return Some(RepeatAction::Absorb);
        }
        if data.is_fixed() && !self.closed {
            return Some(RepeatAction::Close);
        }
        let n = RepeatNested::target(inputs)?;
        match (self.closed, self.emitted < n, self.done) {
            (true, true, _) => Some(RepeatAction::Emit),
            (true, false, false) => Some(RepeatAction::End),
            _ => None,
        }
    }
}

impl Operator for RepeatNested {
    fn name(&self) -> &'static str {
        "repeat_nested"
    }

    fn arity(&self) -> (usize, usize) {
        (2, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let c = flat(self.name(), 0, &inputs[0])?;
        if inputs[1].collection != CollectionTypeTag::Nat {
            return Err(mismatch(self.name(), 1, "nat", &inputs[1]));
        }
        require_bounded(self.name(), 0, &inputs[0])?;
        require_bounded(self.name(), 1, &inputs[1])?;
        let inner = vec![StreamType::bounded(c.clone())];
        Ok(vec![StreamType::bounded(CollectionTypeTag::Nested(inner))])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        usize::from(self.action(inputs).is_some())
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let data = inputs.first().ok_or_else(|| malformed(self.name(), "missing data"))?;
        let buf = self.buf.clone().unwrap_or_else(|| data.bottom_like());
        let mut next = self.clone();
        let mut ins = inputs.to_vec();
        let delta = match self.action(inputs) {
            Some(RepeatAction::Absorb) => {
                let (d, rest) = data.take_content().ok_or_else(|| malformed(self.name(), "nested data"))?;
                next.buf = Some(buf.concat(&d)?);
                ins[0] = rest;
                Delta::Empty
            }
            Some(RepeatAction::Close) => {
                next.closed = true;
                next.buf = Some(buf.terminate());
                Delta::Empty
            }
            Some(RepeatAction::Emit) => {
                next.emitted += 1;
                next.buf = Some(buf.clone());
                Delta::Nested(NestedDelta {
                    ops: vec![NestedOp::Push(vec![buf.fix()])],
                    end: false,
                })
            }
            Some(RepeatAction::End) => {
                next.done = true;
                Delta::End
            }
            None => return Err(OpError::InvalidChoice("repeat_nested is stuck".into())),
        };
        Ok(StepOut {
            inputs: ins,
            op: next.into(),
            deltas: vec![delta],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        let Some(data) = inputs.first() else {
            return Rank(vec![0, 0, 0]);
        };
        let pending = data.content_size() as u64 + flag(data.is_fixed() && !self.closed);
        let remaining = RepeatNested::target(inputs)
            .map(|n| n.saturating_sub(self.emitted))
            .unwrap_or(0);
        Rank(vec![pending, remaining, flag(!self.done)])
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Side {
    L,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ZipAction {
    Open,
    Extend(Side, usize),
    Close(Side, usize),
    Pop,
    End,
}

/// `zip(a, b)`: pairs the i-th tuples of two nested streams into one wider tuple
/// and terminates once either side is terminated and exhausted. The padded form
/// instead fills an exhausted side's missing tuples with fixed empty components
/// until both are exhausted; it is typed only for bounded inputs, since padding
/// a side that has merely not terminated yet would be withheld output.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Zip {
    pub padded: bool,
    pub open: bool,
    /// Per side: padding the current tuple.
    pub pad: [bool; 2],
    /// Per output component: terminator already forwarded.
    pub closed: Vec<bool>,
    pub done: bool,
}

fn nested_inputs(inputs: &[Collection]) -> Option<[&NestedSeqValue; 2]> {
    Some([inputs.first()?.as_nested()?, inputs.get(1)?.as_nested()?])
}

fn exhausted(v: &NestedSeqValue) -> bool {
    v.terminated && v.tuples.is_empty()
}

impl Zip {
    fn idx(s: Side) -> usize {
        match s {
            Side::L => 0,
            Side::R => 1,
        }
    }

    fn offset(sides: &[&NestedSeqValue; 2], s: Side) -> usize {
        match s {
            Side::L => 0,
            Side::R => sides[0].inner.len(),
        }
    }

    fn actions(&self, inputs: &[Collection]) -> Vec<ZipAction> {
        let Some(sides) = nested_inputs(inputs) else {
            return Vec::new();
        };
        if !self.open {
            let [l, r] = sides;
            let ended = if self.padded {
                exhausted(l) && exhausted(r)
            } else {
                exhausted(l) || exhausted(r)
            };
            return if ended {
                if self.done { vec![] } else { vec![ZipAction::End] }
            } else if (exhausted(l) || !l.tuples.is_empty()) && (exhausted(r) || !r.tuples.is_empty()) {
                vec![ZipAction::Open]
            } else {
                vec![]
            };
        }
        let mut acts = Vec::new();
        let mut ready = true;
        for s in [Side::L, Side::R] {
            if self.pad[Zip::idx(s)] {
                continue;
            }
            let v = sides[Zip::idx(s)];
            let Some(tuple) = v.tuples.last() else {
                return Vec::new();
            };
            let off = Zip::offset(&sides, s);
            for (j, c) in tuple.iter().enumerate() {
                let closed = self.closed.get(off + j).copied().unwrap_or(false);
                if c.content_size() > 0 {
                    acts.push(ZipAction::Extend(s, j));
                } else if c.is_fixed() && !closed {
                    acts.push(ZipAction::Close(s, j));
                }
                if c.content_size() > 0 || (c.is_fixed() != closed) || (v.inner[j].is_bounded() && !closed) {
                    ready = false;
                }
            }
            if v.tuples.len() == 1 && !v.terminated {
                ready = false;
            }
        }
        if acts.is_empty() && ready {
            acts.push(ZipAction::Pop);
        }
        acts
    }
}

impl Operator for Zip {
    fn name(&self) -> &'static str {
        "zip"
    }

    fn arity(&self) -> (usize, usize) {
        (2, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let mut inner = Vec::new();
        for (i, t) in inputs.iter().enumerate() {
            match &t.collection {
                CollectionTypeTag::Nested(cs)
                    if cs.iter().all(|c| !matches!(c.collection, CollectionTypeTag::Nested(_))) =>
                {
                    inner.extend(cs.iter().cloned())
                }
                _ => return Err(mismatch(self.name(), i, "[flat:_,..]", t)),
            }
        }
        if self.padded {
            for (i, t) in inputs.iter().enumerate() {
                require_bounded(self.name(), i, t)?;
            }
        }
        Ok(vec![StreamType::new(
            CollectionTypeTag::Nested(inner),
            inputs[0].bound.join(inputs[1].bound),
        )])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        self.actions(inputs).len()
    }

    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
        let sides = nested_inputs(inputs).ok_or_else(|| malformed(self.name(), "bad inputs"))?;
        let action = self.actions(inputs)[choice];
        let mut next = self.clone();
        let mut vals = [sides[0].clone(), sides[1].clone()];
        let width = sides[0].inner.len() + sides[1].inner.len();
        let delta = match action {
            ZipAction::End => {
                next.done = true;
                Delta::End
            }
            ZipAction::Open => {
                let mut comps = Vec::with_capacity(width);
                next.closed = Vec::with_capacity(width);
                for (i, v) in sides.iter().enumerate() {
                    let pad = exhausted(v);
                    next.pad[i] = pad;
                    for t in &v.inner {
                        let b = Collection::bottom(&t.collection);
                        comps.push(if pad { b.fix() } else { b });
                        next.closed.push(pad);
                    }
                }
                next.open = true;
                Delta::Nested(NestedDelta {
                    ops: vec![NestedOp::Push(comps)],
                    end: false,
                })
            }
            ZipAction::Extend(s, j) | ZipAction::Close(s, j) => {
                let off = Zip::offset(&sides, s);
                let tuple = vals[Zip::idx(s)]
                    .tuples
                    .last_mut()
                    .ok_or_else(|| malformed(self.name(), "no open tuple"))?;
                let mut ext = Delta::empties(width);
                if let ZipAction::Extend(..) = action {
                    let (d, rest) = tuple[j]
                        .take_content()
                        .ok_or_else(|| malformed(self.name(), "nested component"))?;
                    tuple[j] = rest;
                    ext[off + j] = d;
                } else {
                    ext[off + j] = Delta::End;
                    next.closed[off + j] = true;
                }
                Delta::Nested(NestedDelta {
                    ops: vec![NestedOp::Extend(ext)],
                    end: false,
                })
            }
            ZipAction::Pop => {
                for (i, v) in vals.iter_mut().enumerate() {
                    if !self.pad[i] {
                        v.tuples.pop();
                    }
                }
                next.open = false;
                next.pad = [false; 2];
                next.closed.clear();
                Delta::Empty
            }
        };
        let [l, r] = vals;
        Ok(StepOut {
            inputs: vec![Collection::Nested(l), Collection::Nested(r)],
            op: next.into(),
            deltas: vec![delta],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        let Some(sides) = nested_inputs(inputs) else {
            return Rank(vec![0, 0]);
        };
        let tuples = (sides[0].tuples.len() + sides[1].tuples.len()) as u64;
        let mut pending = 0u64;
        if self.open {
            for s in [Side::L, Side::R] {
                if self.pad[Zip::idx(s)] {
                    continue;
                }
                let off = Zip::offset(&sides, s);
                if let Some(tuple) = sides[Zip::idx(s)].tuples.last() {
                    for (j, c) in tuple.iter().enumerate() {
                        let closed = self.closed.get(off + j).copied().unwrap_or(false);
                        pending += c.content_size() as u64 + flag(c.is_fixed() && !closed);
                    }
                }
            }
        }
        Rank(vec![2 * tuples + flag(!self.open) + flag(!self.done), pending])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum NestOncePhase {
    #[default]
    Start,
    Open,
    Done,
}

/// `nest_once(c)`: wraps a flat stream as a nested stream with exactly one tuple,
/// forwarding content into it as it arrives.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct NestOnce {
    pub phase: NestOncePhase,
}

impl Operator for NestOnce {
    fn name(&self) -> &'static str {
        "nest_once"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let c = flat(self.name(), 0, &inputs[0])?;
        let inner = vec![StreamType::bounded(c.clone())];
        Ok(vec![StreamType::new(CollectionTypeTag::Nested(inner), inputs[0].bound)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        let Some(c) = inputs.first() else { return 0 };
        match self.phase {
            NestOncePhase::Start => 1,
            NestOncePhase::Open => usize::from(c.content_size() > 0 || c.is_fixed()),
            NestOncePhase::Done => 0,
        }
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let c = inputs.first().ok_or_else(|| malformed(self.name(), "missing input"))?;
        let (ins, phase, delta) = match self.phase {
            NestOncePhase::Start => (
                inputs.to_vec(),
                NestOncePhase::Open,
                NestedDelta {
                    ops: vec![NestedOp::Push(vec![c.bottom_like()])],
                    end: false,
                },
            ),
            NestOncePhase::Open if c.content_size() > 0 => {
                let (d, rest) = c.take_content().ok_or_else(|| malformed(self.name(), "nested input"))?;
                (
                    vec![rest],
                    NestOncePhase::Open,
                    NestedDelta {
                        ops: vec![NestedOp::Extend(vec![d])],
                        end: false,
                    },
                )
            }
            _ => (
                inputs.to_vec(),
                NestOncePhase::Done,
                NestedDelta {
                    ops: vec![NestedOp::Extend(vec![Delta::End])],
                    end: true,
                },
            ),
        };
        Ok(StepOut {
            inputs: ins,
            op: NestOnce { phase }.into(),
            deltas: vec![Delta::Nested(delta)],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        let phase = match self.phase {
            NestOncePhase::Start => 2,
            NestOncePhase::Open => 1,
            NestOncePhase::Done => 0,
        };
        let content = inputs.first().map(|c| c.content_size() as u64).unwrap_or(0);
        Rank(vec![phase, content])
    }
}

pub fn edge_join() -> Op {
    EdgeJoin::default().into()
}

pub fn set_union() -> Op {
    SetUnion::default().into()
}

pub fn repeat_nested() -> Op {
    RepeatNested::default().into()
}

pub fn zip() -> Op {
    Zip::default().into()
}

pub fn zip_padded() -> Op {
    Zip {
        padded: true,
        ..Zip::default()
    }
    .into()
}

pub fn nest_once() -> Op {
    NestOnce::default().into()
}

#[cfg(test)]
mod tests;
