//! Z-sets (keys with signed multiplicities) and the incremental map and join.
//!
//! The algebra is generic over the weight type; operators run on [`crate::IntZSet`].

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::hash::Hash;

use num_traits::{PrimInt, Signed};

use crate::core_model::operator::support::{flag, func_err, malformed, mismatch};
use crate::core_model::{
    Collection, CollectionLanguage, CollectionTypeTag, ConcatError, Delta, OpError, Operator,
    Rank, StepOut, StreamType, TypeError,
};
use crate::func::Func;
use crate::value::{ElemType, Value};
use crate::IntZSet;

/// Signed integer multiplicity.
pub trait Weight: PrimInt + Signed + Hash + Debug {}

impl<W: PrimInt + Signed + Hash + Debug> Weight for W {}

/// Cardinality map plus fixed flag. Zero weights are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ZSetValue<K: Ord, W> {
    pub cards: BTreeMap<K, W>,
    pub fixed: bool,
}

impl<K: Ord, W> Default for ZSetValue<K, W> {
    fn default() -> Self {
        ZSetValue {
            cards: BTreeMap::new(),
            fixed: false,
        }
    }
}

impl<K: Ord + Clone, W: Weight> ZSetValue<K, W> {
    /// Canonicalizes by dropping zero weights.
    pub fn from_cards(cards: BTreeMap<K, W>, fixed: bool) -> Self {
        let cards = cards.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        ZSetValue { cards, fixed }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (K, W)>, fixed: bool) -> Self {
        let mut z = ZSetValue::default();
        for (k, w) in pairs {
            z.add_weight(k, w);
        }
        z.fixed = fixed;
        z
    }

    /// Absent keys read as zero.
    pub fn get(&self, k: &K) -> W {
        self.cards.get(k).copied().unwrap_or_else(W::zero)
    }

    pub fn add_weight(&mut self, k: K, w: W) {
        let total = self.get(&k) + w;
        if total.is_zero() {
            self.cards.remove(&k);
        } else {
            self.cards.insert(k, total);
        }
    }

    /// `(a + b)[k] = a[k] + b[k]`, ignoring fixed flags.
    pub fn plus(&self, other: &Self) -> Self {
        let mut out = ZSetValue::from_cards(self.cards.clone(), false);
        for (k, w) in &other.cards {
            out.add_weight(k.clone(), *w);
        }
        out
    }

    /// `(a ⋈ b)[k] = a[k] · b[k]`.
    pub fn join(&self, other: &Self) -> Self {
        let (small, large) = if self.cards.len() <= other.cards.len() {
            (self, other)
        } else {
            (other, self)
        };
        let cards = small
            .cards
            .iter()
            .filter_map(|(k, w)| large.cards.get(k).map(|v| (k.clone(), *w * *v)))
            .collect();
        ZSetValue::from_cards(cards, false)
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }
}

impl CollectionLanguage for ZSetValue<Value, i64> {
    type Delta = ZSetValue<Value, i64>;

    fn concat(&self, d: &Self) -> Result<Self, ConcatError> {
        if self.fixed {
            return Ok(self.clone());
        }
        let mut out = self.plus(d);
        out.fixed = d.fixed;
        Ok(out)
    }

    fn terminate(&self) -> Self {
        ZSetValue {
            cards: self.cards.clone(),
            fixed: true,
        }
    }

    fn is_fixed(&self) -> bool {
        self.fixed
    }

    fn empty_delta(&self) -> Self {
        ZSetValue::default()
    }

    fn member(&self, tag: &CollectionTypeTag) -> bool {
        match tag {
            CollectionTypeTag::ZSet(t) => self.cards.iter().all(|(k, w)| *w != 0 && k.has_type(t)),
            _ => false,
        }
    }
}

fn zset_key<'a>(op: &str, i: usize, t: &'a StreamType) -> Result<&'a ElemType, TypeError> {
    match &t.collection {
        CollectionTypeTag::ZSet(k) => Ok(k),
        _ => Err(mismatch(op, i, "zset<_>", t)),
    }
}

fn zset_input<'a>(op: &str, inputs: &'a [Collection], i: usize) -> Result<&'a IntZSet, OpError> {
    inputs
        .get(i)
        .and_then(Collection::as_zset)
        .ok_or_else(|| malformed(op, "expected a z-set input"))
}

fn emptied(z: &IntZSet) -> Collection {
    Collection::ZSet(ZSetValue {
        cards: BTreeMap::new(),
        fixed: z.fixed,
    })
}

/// `map(f)` on z-sets: one key per step, `f` applied to `(key, weight)`. Which
/// key goes next is an internal choice.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ZSetMap {
    pub f: Func,
    pub done: bool,
}

impl ZSetMap {
    pub fn new(f: Func) -> ZSetMap {
        ZSetMap { f, done: false }
    }
}

impl Operator for ZSetMap {
    fn name(&self) -> &'static str {
        "zset_map"
    }

    fn arity(&self) -> (usize, usize) {
        (1, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let k = zset_key(self.name(), 0, &inputs[0])?;
        let arg = ElemType::Tuple(vec![k.clone(), ElemType::Int]);
        let out = self.f.output_type(&arg).map_err(|e| func_err(self.name(), e))?;
        if out != ElemType::Int {
            return Err(TypeError::InvalidParameter {
                op: self.name().into(),
                reason: format!("{} must yield an int weight, yields {out}", self.f),
            });
        }
        Ok(vec![inputs[0].clone()])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        match inputs.first().and_then(Collection::as_zset) {
            Some(z) if !z.is_empty() => z.cards.len(),
            Some(z) => usize::from(z.fixed && !self.done),
            None => 0,
        }
    }

    fn step(&self, inputs: &[Collection], choice: usize) -> Result<StepOut, OpError> {
        let z = zset_input(self.name(), inputs, 0)?;
        let Some((k, w)) = z.cards.iter().nth(choice) else {
            return Ok(StepOut {
                inputs: inputs.to_vec(),
                op: ZSetMap { done: true, ..self.clone() }.into(),
                deltas: vec![Delta::End],
            });
        };
        let v = self.f.apply(&Value::pair(k.clone(), Value::Int(*w)))?;
        let v = v.as_int().ok_or_else(|| malformed(self.name(), "weight is not an int"))?;
        let mut rest = z.clone();
        rest.cards.remove(k);
        Ok(StepOut {
            inputs: vec![Collection::ZSet(rest)],
            op: self.clone().into(),
            deltas: vec![Delta::ZSet(IntZSet::from_pairs([(k.clone(), v)], false))],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        match inputs.first().and_then(Collection::as_zset) {
            Some(z) => Rank(vec![z.cards.len() as u64 + flag(z.fixed && !self.done)]),
            None => Rank(vec![0]),
        }
    }
}

/// Incremental equi-join on keys. Each step drains both pending buffers and emits
/// `M1 ⋈ M2' + M1' ⋈ M2 + M1' ⋈ M2'`. It only steps when something is pending,
/// or to forward the terminator once both inputs are empty and fixed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ZSetJoin {
    pub seen_left: IntZSet,
    pub seen_right: IntZSet,
    pub done: bool,
}

impl ZSetJoin {
    fn pending(inputs: &[Collection]) -> Option<(&IntZSet, &IntZSet)> {
        Some((inputs.first()?.as_zset()?, inputs.get(1)?.as_zset()?))
    }
}

impl Operator for ZSetJoin {
    fn name(&self) -> &'static str {
        "zset_join"
    }

    fn arity(&self) -> (usize, usize) {
        (2, 1)
    }

    fn signature(&self, inputs: &[StreamType]) -> Result<Vec<StreamType>, TypeError> {
        let k = zset_key(self.name(), 0, &inputs[0])?;
        let k2 = zset_key(self.name(), 1, &inputs[1])?;
        if k != k2 {
            return Err(mismatch(self.name(), 1, &format!("zset<{k}>"), &inputs[1]));
        }
        Ok(vec![StreamType::new(
            inputs[0].collection.clone(),
            inputs[0].bound.join(inputs[1].bound),
        )])
    }

    fn choices(&self, inputs: &[Collection]) -> usize {
        match ZSetJoin::pending(inputs) {
            Some((a, b)) => usize::from(
                !a.is_empty() || !b.is_empty() || (a.fixed && b.fixed && !self.done),
            ),
            None => 0,
        }
    }

    fn step(&self, inputs: &[Collection], _choice: usize) -> Result<StepOut, OpError> {
        let (a, b) = ZSetJoin::pending(inputs).ok_or_else(|| malformed(self.name(), "bad inputs"))?;
        if a.is_empty() && b.is_empty() {
            return Ok(StepOut {
                inputs: inputs.to_vec(),
                op: ZSetJoin { done: true, ..self.clone() }.into(),
                deltas: vec![Delta::End],
            });
        }
        let out = self
            .seen_left
            .join(b)
            .plus(&a.join(&self.seen_right))
            .plus(&a.join(b));
        Ok(StepOut {
            inputs: vec![emptied(a), emptied(b)],
            op: ZSetJoin {
                seen_left: self.seen_left.plus(a),
                seen_right: self.seen_right.plus(b),
                done: false,
            }
            .into(),
            deltas: vec![Delta::ZSet(out)],
        })
    }

    fn rank(&self, inputs: &[Collection]) -> Rank {
        match ZSetJoin::pending(inputs) {
            Some((a, b)) => Rank(vec![
                (a.cards.len() + b.cards.len()) as u64 + flag(a.fixed && b.fixed && !self.done),
            ]),
            None => Rank(vec![0]),
        }
    }
}

#[cfg(test)]
mod tests;
