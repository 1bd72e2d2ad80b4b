//! Lattice-valued collections and the operators that produce and read them.

use std::collections::BTreeSet;
use std::fmt;

use crate::core_model::operator::support::{flag, malformed, mismatch, require_bounded};
use crate::core_model::{
    Collection, CollectionLanguage, CollectionTypeTag, ConcatError, Delta, Op, OpError, Operator,
    Rank, StepOut, StreamType, TypeError,
};
use crate::func::Func;
use crate::stdlib_seq::{seq_input, SeqValue};
use crate::value::{ElemType, Value};

/// Registered join-semilattices. Elements are plain values interpreted per lattice.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Lattice {
    /// Naturals under `max`, bottom 0.
    MaxNat,
    /// Finite sets under union, bottom the empty set.
    SetUnion(ElemType),
    /// Component-wise product of two lattices.
    Product(Box<Lattice>, Box<Lattice>),
}

impl Lattice {
    pub fn bottom(&self) -> Value {
        match self {
            Lattice::MaxNat => Value::Int(0),
            Lattice::SetUnion(_) => Value::Set(BTreeSet::new()),
            Lattice::Product(a, b) => Value::pair(a.bottom(), b.bottom()),
        }
    }

    pub fn elem_type(&self) -> ElemType {
        match self {
            Lattice::MaxNat => ElemType::Int,
            Lattice::SetUnion(t) => ElemType::Set(Box::new(t.clone())),
            Lattice::Product(a, b) => ElemType::Tuple(vec![a.elem_type(), b.elem_type()]),
        }
    }

    pub fn member(&self, v: &Value) -> bool {
        match (self, v) {
            (Lattice::MaxNat, Value::Int(n)) => *n >= 0,
            (Lattice::SetUnion(t), Value::Set(_)) => v.has_type(&ElemType::Set(Box::new(t.clone()))),
            (Lattice::Product(a, b), Value::Tuple(vs)) => {
                vs.len() == 2 && a.member(&vs[0]) && b.member(&vs[1])
            }
            _ => false,
        }
    }

    /// Least upper bound; `None` when an argument is not an element.
    pub fn join(&self, x: &Value, y: &Value) -> Option<Value> {
        match (self, x, y) {
            (Lattice::MaxNat, Value::Int(a), Value::Int(b)) if *a >= 0 && *b >= 0 => {
                Some(Value::Int(*a.max(b)))
            }
            (Lattice::SetUnion(_), Value::Set(a), Value::Set(b)) => {
                Some(Value::Set(a.union(b).cloned().collect()))
            }
            (Lattice::Product(la, lb), Value::Tuple(a), Value::Tuple(b))
                if a.len() == 2 && b.len() == 2 =>
            {
                Some(Value::pair(la.join(&a[0], &b[0])?, lb.join(&a[1], &b[1])?))
            }
            _ => None,
        }
    }

    pub fn leq(&self, x: &Value, y: &Value) -> bool {
        self.join(x, y).as_ref() == Some(y)
    }

    /// Two thresholds are compatible when they have a common upper bound. Every
    /// registered lattice has all binary joins, so distinct thresholds always are.
    pub fn compatible(&self, x: &Value, y: &Value) -> bool {
        self.join(x, y).is_some()
    }
}

impl fmt::Display for Lattice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lattice::MaxNat => write!(f, "max_nat"),
            Lattice::SetUnion(t) => write!(f, "set<{t}>"),
            Lattice::Product(a, b) => write!(f, "product<{a},{b}>"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LVarValue {
    pub lattice: Lattice,
    pub value: Value,
    pub fixed: bool,
}

impl LVarValue {
    pub fn new(lattice: Lattice, value: Value, fixed: bool) -> LVarValue {
        LVarValue {
            lattice,
            value,
            fixed,
        }
    }

    pub fn bottom(lattice: Lattice) -> LVarValue {
        let value = lattice.bottom();
        LVarValue::new(lattice, value, false)
    }

    pub fn max_nat(n: i64, fixed: bool) -> LVarValue {
        LVarValue::new(Lattice::MaxNat, Value::Int(n), fixed)
    }

    pub fn is_bottom(&self) -> bool {
        self.value == self.lattice.bottom()
    }
}

impl CollectionLanguage for LVarValue {
    type Delta = LVarValue;

    fn concat(&self, d: &LVarValue) -> Result<LVarValue, ConcatError> {
        if d.lattice != self.lattice {
            return Err(ConcatError::PayloadShapeMismatch("lvar"));
        }
        if self.fixed {
            return Ok(self.clone());
        }
        let value = self
            .lattice
            .join(&self.value, &d.value)
            .ok_or(ConcatError::PayloadShapeMismatch("lvar"))?;
        Ok(LVarValue::new(self.lattice.clone(), value, d.fixed))
    }

    fn terminate(&self) -> LVarValue {
        LVarValue::new(self.lattice.clone(), self.value.clone(), true)
    }

    fn is_fixed(&self) -> bool {
        self.fixed
    }

    fn empty_delta(&self) -> LVarValue {
        LVarValue::bottom(self.lattice.clone())
    }

    fn member(&self, tag: &CollectionTypeTag) -> bool {
        matches!(tag, CollectionTypeTag::LVar(l) if *l == self.lattice && l.member(&self.value))
    }
}

fn lvar_lattice<'a>(op: &str, t: &'a StreamType) -> Result<&'a Lattice, TypeError> {
    match &t.collection {
        CollectionTypeTag::LVar(l) => Ok(l),
        _ => Err(mismatch(op, 0, "lvar<_>", t)),
    }
}

fn lvar_input<'a>(op: &str, inputs: &'a [Collection]) -> Result<&'a LVarValue, OpError> {
    inputs
        .first()
        .and_then(Collection::as_lvar)
        .ok_or_else(|| malformed(op, "expected an lvar input"))
}

/// `fold_lattice(f)`: lifts each element into the lattice and emits it as a join.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FoldLattice {
    pub f: Func,
    pub lattice: Lattice,
    pub done: bool,
}

impl FoldLattice {
    pub fn new(f: Func, lattice: Lattice) -> FoldLattice {
        FoldLattice {
            f,
            lattice,
            done: false,
        }
    }
}

impl Operator for FoldLattice {
    fn name(&self) -> &'static str {
        "fold_lattice"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let CollectionTypeTag::Seq(t) = &inputs[0].collection else {
            return Err(mismatch(self.name(), 0, "seq<_>", &inputs[0]));
        };
        let u = self.f.output_type(t).map_err(|e| TypeError::Function {
            op: self.name().to_string(),
            source: e,
        })?;
        if u != self.lattice.elem_type() {
            return Err(TypeError::InvalidParameter {
                op: self.name().to_string(),
                reason: format!("{} yields {u}, lattice {} holds {}", self.f, self.lattice, self.lattice.elem_type()),
            });
        }
        Ok(vec![StreamType::new(CollectionTypeTag::LVar(self.lattice.clone()), inputs[0].bound)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        match inputs.first().and_then(Collection::as_seq) {
            Some(s) => usize::from(!s.items.is_empty() || (s.terminated && !self.done)),
            None => 0,
        }
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let s = seq_input(self.name(), inputs, 0)?;
        let Some(h) = s.oldest() else {
            return Ok(StepOut {
                inputs: inputs.to_vec(),
                op: FoldLattice { done: true, ..self.clone() }.into(),
                deltas: vec![Delta::End],
            });
        };
        let l = self.f.apply(h)?;
        if !self.lattice.member(&l) {
            return Err(malformed(self.name(), &format!("{l} is not an element of {}", self.lattice)));
        }
        let mut rest = s.clone();
        rest.items.pop();
        Ok(StepOut {
            inputs: vec![Collection::Seq(rest)],
            op: self.clone().into(),
            deltas: vec![Delta::LVar(LVarValue::new(self.lattice.clone(), l, false))],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        match inputs.first().and_then(Collection::as_seq) {
            Some(s) => Rank(vec![s.items.len() as u64 + flag(s.terminated && !self.done)]),
            None => Rank(vec![0]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ThreshPhase {
    Watching,
    /// A threshold was emitted; the input view is now terminated.
    Fired,
    Done,
}

/// `thresh(t1, ..)`: emits the threshold the value first reaches, then the
/// terminator. Emits only the terminator when the input fixes below all thresholds.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Thresh {
    pub lattice: Lattice,
    pub thresholds: Vec<Value>,
    pub phase: ThreshPhase,
}

impl Thresh {
    /// Fails with `ThresholdsNotIncompatible` when two thresholds share an upper bound.
    pub fn new(lattice: Lattice, thresholds: Vec<Value>) -> Result<Thresh, TypeError> {
        for t in &thresholds {
            if !lattice.member(t) {
                return Err(TypeError::InvalidParameter {
                    op: "thresh".into(),
                    reason: format!("{t} is not an element of {lattice}"),
                });
            }
        }
        for (i, a) in thresholds.iter().enumerate() {
            for b in &thresholds[i + 1..] {
                if lattice.compatible(a, b) {
                    return Err(TypeError::ThresholdsNotIncompatible(format!(
                        "{a} and {b} have the upper bound {}",
                        lattice.join(a, b).unwrap()
                    )));
                }
            }
        }
        Ok(Thresh {
            lattice,
            thresholds,
            phase: ThreshPhase::Watching,
        })
    }

    fn met<'a>(&'a self, v: &LVarValue) -> Option<&'a Value> {
        self.thresholds.iter().find(|t| self.lattice.leq(t, &v.value))
    }
}

impl Operator for Thresh {
    fn name(&self) -> &'static str {
        "thresh"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let l = lvar_lattice(self.name(), &inputs[0])?;
        if *l != self.lattice {
            return Err(mismatch(self.name(), 0, &format!("lvar<{}>", self.lattice), &inputs[0]));
        }
        Thresh::new(self.lattice.clone(), self.thresholds.clone())?;
        Ok(vec![StreamType::new(CollectionTypeTag::Seq(l.elem_type()), inputs[0].bound)])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        match (self.phase, inputs.first().and_then(Collection::as_lvar)) {
            (ThreshPhase::Watching, Some(v)) => usize::from(self.met(v).is_some() || v.fixed),
            (ThreshPhase::Fired, _) => 1,
            _ => 0,
        }
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let v = lvar_input(self.name(), inputs)?;
        let (phase, delta) = match (self.phase, self.met(v)) {
            (ThreshPhase::Watching, Some(t)) => (
                ThreshPhase::Fired,
                Delta::Seq(SeqValue::new(vec![t.clone()], false)),
            ),
            _ => (ThreshPhase::Done, Delta::End),
        };
        Ok(StepOut {
            inputs: inputs.to_vec(),
            op: Thresh { phase, ..self.clone() }.into(),
            deltas: vec![delta],
        })
    }

    fn rank(&self, _inputs: &[Collection]) -> Rank {
        Rank(vec![match self.phase {
            ThreshPhase::Watching => 2,
            ThreshPhase::Fired => 1,
            ThreshPhase::Done => 0,
        }])
    }
}

/// `to_sequence`: bounded input only; once the value is fixed emits `[⊣, v]`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ToSequence {
    pub done: bool,
}

impl Operator for ToSequence {
    fn name(&self) -> &'static str {
        "to_sequence"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let l = lvar_lattice(self.name(), &inputs[0])?;
        require_bounded(self.name(), 0, &inputs[0])?;
        Ok(vec![StreamType::bounded(CollectionTypeTag::Seq(l.elem_type()))])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        let fixed = inputs.first().map(Collection::is_fixed).unwrap_or(false);
        usize::from(fixed && !self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let v = lvar_input(self.name(), inputs)?;
        Ok(StepOut {
            inputs: inputs.to_vec(),
            op: ToSequence { done: true }.into(),
            deltas: vec![Delta::Seq(SeqValue::new(vec![v.value.clone()], true))],
        })
    }

    fn rank(&self, _inputs: &[Collection]) -> Rank {
        Rank(vec![flag(!self.done)])
    }
}

/// Negative fixture: reads the lattice value without waiting for it to be fixed.
/// It violates eager execution.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ToSequenceNaive {
    pub done: bool,
}

impl Operator for ToSequenceNaive {
    fn name(&self) -> &'static str {
        "to_sequence_naive"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let l = lvar_lattice(self.name(), &inputs[0])?;
        Ok(vec![StreamType::new(CollectionTypeTag::Seq(l.elem_type()), inputs[0].bound)])
    }

    fn choices(&self, _inputs: &[Collection]) -> usize {
        usize::from(!self.done)
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let v = lvar_input(self.name(), inputs)?;
        Ok(StepOut {
            inputs: inputs.to_vec(),
            op: ToSequenceNaive { done: true }.into(),
            deltas: vec![Delta::Seq(SeqValue::new(vec![v.value.clone()], false))],
        })
    }

    fn rank(&self, _inputs: &[Collection]) -> Rank {
        Rank(vec![flag(!self.done)])
    }
}

pub fn fold_lattice(f: Func, lattice: Lattice) -> Op {
    FoldLattice::new(f, lattice).into()
}

pub fn thresh(lattice: Lattice, thresholds: Vec<Value>) -> Result<Op, TypeError> {
    Ok(Thresh::new(lattice, thresholds)?.into())
}

pub fn to_sequence() -> Op {
    ToSequence::default().into()
}

pub fn to_sequence_naive() -> Op {
    ToSequenceNaive::default().into()
}
