//! Ordered sequences and the sequence operators: map, scan, fold, window, tee, id, last.
//!
//! Items are stored newest first. Operators consume from the oldest end, so
//! concatenation (which prepends) never races a consuming step.

use crate::core_model::operator::support::{flag, func_err, malformed, mismatch, require_bounded};
use crate::core_model::{
    Collection, CollectionLanguage, CollectionTypeTag, ConcatError, Delta, Op, OpError, Rank,
    StepOut, StreamType, TypeError,
};
use crate::func::Func;
use crate::nested_streams::{NestedDelta, NestedOp};
use crate::core_model::Operator;
use crate::value::{ElemType, Value};

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SeqValue {
    pub terminated: bool,
    /// Newest first.
    pub items: Vec<Value>,
}

impl SeqValue {
    pub fn new(items: Vec<Value>, terminated: bool) -> SeqValue {
        SeqValue { terminated, items }
    }

    /// Builds a sequence from items in arrival order (oldest first).
    pub fn from_arrivals(arrivals: impl IntoIterator<Item = Value>, terminated: bool) -> SeqValue {
        let mut items: Vec<Value> = arrivals.into_iter().collect();
        items.reverse();
        SeqValue { terminated, items }
    }

    pub fn ints(newest_first: &[i64], terminated: bool) -> SeqValue {
        SeqValue::new(newest_first.iter().map(|&n| Value::Int(n)).collect(), terminated)
    }

    pub fn oldest(&self) -> Option<&Value> {
        self.items.last()
    }

    /// Items in arrival order.
    pub fn arrivals(&self) -> impl Iterator<Item = &Value> {
        self.items.iter().rev()
    }

    fn without_oldest(&self) -> SeqValue {
        let mut s = self.clone();
        s.items.pop();
        s
    }
}

impl CollectionLanguage for SeqValue {
    type Delta = SeqValue;

    fn concat(&self, d: &SeqValue) -> Result<SeqValue, ConcatError> {
        if self.terminated {
            return Ok(self.clone());
        }
        let mut items = d.items.clone();
        items.extend(self.items.iter().cloned());
        Ok(SeqValue::new(items, d.terminated))
    }

    fn terminate(&self) -> SeqValue {
        SeqValue::new(self.items.clone(), true)
    }

    fn is_fixed(&self) -> bool {
        self.terminated
    }

    fn empty_delta(&self) -> SeqValue {
        SeqValue::default()
    }

    fn member(&self, tag: &CollectionTypeTag) -> bool {
        match tag {
            CollectionTypeTag::Seq(t) => self.items.iter().all(|v| v.has_type(t)),
            _ => false,
        }
    }
}

/// A natural-number singleton: at most one value is ever written.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SingletonNat {
    pub value: Option<u64>,
    pub fixed: bool,
}

impl SingletonNat {
    pub fn new(value: Option<u64>, fixed: bool) -> SingletonNat {
        SingletonNat { value, fixed }
    }
}

impl CollectionLanguage for SingletonNat {
    type Delta = SingletonNat;

    fn concat(&self, d: &SingletonNat) -> Result<SingletonNat, ConcatError> {
        if self.fixed {
            return Ok(self.clone());
        }
        let value = match (self.value, d.value) {
            (Some(_), Some(_)) => return Err(ConcatError::SingletonOverwrite),
            (a, b) => a.or(b),
        };
        Ok(SingletonNat::new(value, d.fixed))
    }

    fn terminate(&self) -> SingletonNat {
        SingletonNat::new(self.value, true)
    }

    fn is_fixed(&self) -> bool {
        self.fixed
    }

    fn empty_delta(&self) -> SingletonNat {
        SingletonNat::default()
    }

    fn member(&self, tag: &CollectionTypeTag) -> bool {
        matches!(tag, CollectionTypeTag::Nat)
    }
}

fn seq_elem<'a>(op: &str, i: usize, t: &'a StreamType) -> Result<&'a ElemType, TypeError> {
    match &t.collection {
        CollectionTypeTag::Seq(e) => Ok(e),
        _ => Err(mismatch(op, i, "seq<_>", t)),
    }
}

pub(crate) fn seq_input<'a>(op: &str, inputs: &'a [Collection], i: usize) -> Result<&'a SeqValue, OpError> {
    inputs
        .get(i)
        .and_then(Collection::as_seq)
        .ok_or_else(|| malformed(op, "expected a sequence input"))
}

fn emit_item(v: Value) -> Delta {
    Delta::Seq(SeqValue::new(vec![v], false))
}

fn seq_rank(s: Option<&SeqValue>, done: bool) -> Rank {
    match s {
        Some(s) => Rank(vec![s.items.len() as u64 + flag(s.terminated && !done)]),
        None => Rank(vec![0]),
    }
}

fn seq_choices(s: Option<&SeqValue>, done: bool) -> usize {
    match s {
        Some(s) => usize::from(!s.items.is_empty() || (s.terminated && !done)),
        None => 0,
    }
}

fn first_seq(inputs: &[Collection]) -> Option<&SeqValue> {
    inputs.first().and_then(Collection::as_seq)
}

/// `map(f)`: one element per step, terminator forwarded once.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Map {
    pub f: Func,
    pub done: bool,
}

impl Map {
    pub fn new(f: Func) -> Map {
        Map { f, done: false }
    }
}

impl Operator for Map {
    fn name(&self) -> &'static str {
        "map"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let t = seq_elem(self.name(), 0, &inputs[0])?;
        let u = self.f.output_type(t).map_err(|e| func_err(self.name(), e))?;
        Ok(vec![StreamType::new(CollectionTypeTag::Seq(u), inputs[0].bound)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        seq_choices(first_seq(inputs), self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let s = seq_input(self.name(), inputs, 0)?;
        match s.oldest() {
            Some(h) => Ok(StepOut {
                inputs: vec![Collection::Seq(s.without_oldest())],
                op: self.clone().into(),
                deltas: vec![emit_item(self.f.apply(h)?)],
            }),
            None => Ok(StepOut {
                inputs: inputs.to_vec(),
                op: Map { done: true, ..self.clone() }.into(),
                deltas: vec![Delta::End],
            }),
        }
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        seq_rank(first_seq(inputs), self.done)
    }
}

/// `scan(init, f)`: emits each new accumulator; forwards the terminator without
/// re-emitting, so scan followed by last agrees with fold.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Scan {
    pub acc: Value,
    pub f: Func,
    pub done: bool,
}

impl Scan {
    pub fn new(init: Value, f: Func) -> Scan {
        Scan {
            acc: init,
            f,
            done: false,
        }
    }
}

fn accumulator_type(op: &str, acc: &Value, f: &Func, t: &ElemType) -> Result<ElemType, TypeError> {
    let u = acc.infer_type().ok_or_else(|| TypeError::InvalidParameter {
        op: op.to_string(),
        reason: format!("cannot infer the type of {acc}"),
    })?;
    let out = f
        .output_type(&ElemType::Tuple(vec![u.clone(), t.clone()]))
        .map_err(|e| func_err(op, e))?;
    if out != u {
        return Err(TypeError::InvalidParameter {
            op: op.to_string(),
            reason: format!("{f} maps ({u},{t}) to {out}, not {u}"),
        });
    }
    Ok(u)
}

impl Operator for Scan {
    fn name(&self) -> &'static str {
        "scan"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let t = seq_elem(self.name(), 0, &inputs[0])?;
        let u = accumulator_type(self.name(), &self.acc, &self.f, t)?;
        Ok(vec![StreamType::new(CollectionTypeTag::Seq(u), inputs[0].bound)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        seq_choices(first_seq(inputs), self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let s = seq_input(self.name(), inputs, 0)?;
        match s.oldest() {
            Some(h) => {
                let acc = self.f.apply(&Value::pair(self.acc.clone(), h.clone()))?;
                Ok(StepOut {
                    inputs: vec![Collection::Seq(s.without_oldest())],
                    op: Scan { acc: acc.clone(), ..self.clone() }.into(),
                    deltas: vec![emit_item(acc)],
                })
            }
            None => Ok(StepOut {
                inputs: inputs.to_vec(),
                op: Scan { done: true, ..self.clone() }.into(),
                deltas: vec![Delta::End],
            }),
        }
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        seq_rank(first_seq(inputs), self.done)
    }
}

/// `fold(acc, f)`: bounded input only; silent until the terminator, then `[⊣, acc]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Fold {
    pub acc: Value,
    pub f: Func,
    pub done: bool,
}

impl Fold {
    pub fn new(init: Value, f: Func) -> Fold {
        Fold {
            acc: init,
            f,
            done: false,
        }
    }
}

impl Operator for Fold {
    fn name(&self) -> &'static str {
        "fold"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let t = seq_elem(self.name(), 0, &inputs[0])?;
        require_bounded(self.name(), 0, &inputs[0])?;
        let u = accumulator_type(self.name(), &self.acc, &self.f, t)?;
        Ok(vec![StreamType::bounded(CollectionTypeTag::Seq(u))])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        seq_choices(first_seq(inputs), self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let s = seq_input(self.name(), inputs, 0)?;
        match s.oldest() {
            Some(h) => {
                let acc = self.f.apply(&Value::pair(self.acc.clone(), h.clone()))?;
                Ok(StepOut {
                    inputs: vec![Collection::Seq(s.without_oldest())],
                    op: Fold { acc, ..self.clone() }.into(),
                    deltas: vec![Delta::Empty],
                })
            }
            None => Ok(StepOut {
                inputs: inputs.to_vec(),
                op: Fold { done: true, ..self.clone() }.into(),
                deltas: vec![Delta::Seq(SeqValue::new(vec![self.acc.clone()], true))],
            }),
        }
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        seq_rank(first_seq(inputs), self.done)
    }
}

/// `window(interval)` over `(value, timestamp)` pairs. The open window is the
/// open leftmost output tuple and grows element by element; a timestamp more than
/// `interval` past the window's first one closes it and opens the next. The
/// terminator closes the open window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Window {
    pub interval: i64,
    /// Timestamp of the first element of the open window.
    pub start: Option<i64>,
    pub done: bool,
}

impl Window {
    pub fn new(interval: i64) -> Window {
        Window {
            interval,
            start: None,
            done: false,
        }
    }
}

impl Operator for Window {
    fn name(&self) -> &'static str {
        "window"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let d = match seq_elem(self.name(), 0, &inputs[0])? {
            ElemType::Tuple(ts) if ts.len() == 2 && ts[1] == ElemType::Int => ts[0].clone(),
            _ => return Err(mismatch(self.name(), 0, "seq<(_,int)>", &inputs[0])),
        };
        let inner = vec![StreamType::bounded(CollectionTypeTag::Seq(d))];
        Ok(vec![StreamType::new(CollectionTypeTag::Nested(inner), inputs[0].bound)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        seq_choices(first_seq(inputs), self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let s = seq_input(self.name(), inputs, 0)?;
        let Some(h) = s.oldest() else {
            let ops = match self.start {
                Some(_) => vec![NestedOp::Extend(vec![Delta::End])],
                None => Vec::new(),
            };
            return Ok(StepOut {
                inputs: inputs.to_vec(),
                op: Window {
                    start: None,
                    done: true,
                    ..self.clone()
                }
                .into(),
                deltas: vec![Delta::Nested(NestedDelta { ops, end: true })],
            });
        };
        let (v, t) = match h {
            Value::Tuple(vs) if vs.len() == 2 => match vs[1] {
                Value::Int(t) => (vs[0].clone(), t),
                _ => return Err(malformed(self.name(), "timestamp is not an integer")),
            },
            _ => return Err(malformed(self.name(), "element is not a (value, timestamp) pair")),
        };
        let item = || Collection::Seq(SeqValue::new(vec![v.clone()], false));
        let mut next = self.clone();
        let ops = match self.start {
            Some(first) if t.saturating_sub(first) <= self.interval => {
                vec![NestedOp::Extend(vec![item().as_delta()])]
            }
            Some(_) => {
                next.start = Some(t);
                vec![NestedOp::Extend(vec![Delta::End]), NestedOp::Push(vec![item()])]
            }
            None => {
                next.start = Some(t);
                vec![NestedOp::Push(vec![item()])]
            }
        };
        Ok(StepOut {
            inputs: vec![Collection::Seq(s.without_oldest())],
            op: next.into(),
            deltas: vec![Delta::Nested(NestedDelta { ops, end: false })],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        seq_rank(first_seq(inputs), self.done)
    }
}

fn flat_type<'a>(op: &str, t: &'a StreamType) -> Result<&'a StreamType, TypeError> {
    match t.collection {
        CollectionTypeTag::Nested(_) => Err(mismatch(op, 0, "a flat collection", t)),
        _ => Ok(t),
    }
}

fn forward_choices(inputs: &[Collection], done: bool) -> usize {
    inputs
        .first()
        .map(|c| usize::from(c.content_size() > 0 || (c.is_fixed() && !done)))
        .unwrap_or(0)
}

fn forward_rank(inputs: &[Collection], done: bool) -> Rank {
    let c = inputs.first();
    Rank(vec![c
        .map(|c| c.content_size() as u64 + flag(c.is_fixed() && !done))
        .unwrap_or(0)])
}

/// Moves all pending content of a flat input to `fanout` outputs in one step.
fn forward_step(op: &str, inputs: &[Collection], fanout: usize) -> Result<(Vec<Collection>, Vec<Delta>, bool), OpError> {
    let c = inputs.first().ok_or_else(|| malformed(op, "missing input"))?;
    if c.content_size() > 0 {
        let (d, rest) = c.take_content().ok_or_else(|| malformed(op, "nested input"))?;
        Ok((vec![rest], vec![d; fanout], false))
    } else {
        Ok((inputs.to_vec(), vec![Delta::End; fanout], true))
    }
}

/// `tee`: duplicates every consumed delta onto both outputs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Tee {
    pub done: bool,
}

impl Operator for Tee {
    fn name(&self) -> &'static str {
        "tee"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 2)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let t = flat_type(self.name(), &inputs[0])?;
        Ok(vec![t.clone(), t.clone()])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        forward_choices(inputs, self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let (inputs, deltas, done) = forward_step(self.name(), inputs, 2)?;
        Ok(StepOut {
            inputs,
            op: Tee { done: self.done || done }.into(),
            deltas,
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        forward_rank(inputs, self.done)
    }
}

/// `id`: forwards a flat input unchanged. Used for wiring inside composed graphs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Id {
    pub done: bool,
}

impl Operator for Id {
    fn name(&self) -> &'static str {
        "id"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        Ok(vec![flat_type(self.name(), &inputs[0])?.clone()])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        forward_choices(inputs, self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let (inputs, deltas, done) = forward_step(self.name(), inputs, 1)?;
        Ok(StepOut {
            inputs,
            op: Id { done: self.done || done }.into(),
            deltas,
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        forward_rank(inputs, self.done)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Held {
    Item(Value),
    Inner(Collection),
}

/// `last`: bounded input only. Over a sequence it emits `[⊣, last]`; over a nested
/// stream with one component it emits the final inner collection, fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Last {
    pub held: Option<Held>,
    pub done: bool,
}

impl Last {
    fn pending(inputs: &[Collection]) -> Option<(usize, bool)> {
        match inputs.first()? {
            Collection::Seq(s) => Some((s.items.len(), s.terminated)),
            Collection::Nested(n) => {
                let poppable = if n.terminated { n.tuples.len() } else { n.tuples.len().saturating_sub(1) };
                Some((poppable, n.terminated))
            }
            _ => None,
        }
    }
}

impl Operator for Last {
    fn name(&self) -> &'static str {
        "last"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let t = &inputs[0];
        let out = match &t.collection {
            CollectionTypeTag::Seq(_) => t.collection.clone(),
            CollectionTypeTag::Nested(inner)
                if inner.len() == 1
                    && inner[0].is_bounded()
                    && !matches!(inner[0].collection, CollectionTypeTag::Nested(_)) =>
            {
                inner[0].collection.clone()
            }
            _ => return Err(mismatch(self.name(), 0, "seq<_> or [flat:B]", t)),
        };
        require_bounded(self.name(), 0, t)?;
        Ok(vec![StreamType::bounded(out)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        match Last::pending(inputs) {
            Some((n, terminated)) => usize::from(n > 0 || (terminated && !self.done)),
            None => 0,
        }
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let (n, _) = Last::pending(inputs).ok_or_else(|| malformed(self.name(), "bad input"))?;
        if n > 0 {
            let (rest, held) = match &inputs[0] {
                Collection::Seq(s) => (
                    Collection::Seq(s.without_oldest()),
                    Held::Item(s.oldest().cloned().unwrap()),
                ),
                Collection::Nested(v) => {
                    let mut v = v.clone();
                    let tuple = v.tuples.pop().unwrap();
                    let inner = tuple.into_iter().next().ok_or_else(|| malformed(self.name(), "empty tuple"))?;
                    (Collection::Nested(v), Held::Inner(inner))
                }
                _ => unreachable!(),
            };
            return Ok(StepOut {
                inputs: vec![rest],
                op: Last {
                    held: Some(held),
                    done: false,
                }
                .into(),
                deltas: vec![Delta::Empty],
            });
        }
        let delta = match &self.held {
            None => Delta::End,
            Some(Held::Item(v)) => Delta::Seq(SeqValue::new(vec![v.clone()], true)),
            Some(Held::Inner(c)) => c.fix().as_delta(),
        };
        Ok(StepOut {
            inputs: inputs.to_vec(),
            op: Last {
                held: self.held.clone(),
                done: true,
            }
            .into(),
            deltas: vec![delta],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        match Last::pending(inputs) {
            Some((n, terminated)) => Rank(vec![n as u64 + flag(terminated && !self.done)]),
            None => Rank(vec![0]),
        }
    }
}

/// Convenience constructors for sequence operators as graph nodes.
pub fn map(f: Func) -> Op {
    Map::new(f).into()
}

pub fn scan(init: Value, f: Func) -> Op {
    Scan::new(init, f).into()
}

pub fn fold(init: Value, f: Func) -> Op {
    Fold::new(init, f).into()
}

pub fn window(interval: i64) -> Op {
    Window::new(interval).into()
}

pub fn tee() -> Op {
    Tee::default().into()
}

pub fn id() -> Op {
    Id::default().into()
}

pub fn last() -> Op {
    Last::default().into()
}

#[cfg(test)]
mod tests;
