//! Size-bounded, type-directed generators for values and deltas.
//!
//! Bounds: sequences and sets hold at most 5 elements, z-sets at most 8 keys with
//! weights in [-3, 3], nested values at most 3 tuples, integers lie in 0..6.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::core_model::{Collection, CollectionTypeTag, Delta, StreamType};
use crate::nested_streams::{NestedDelta, NestedOp, NestedSeqValue};
use crate::stdlib_lvar::{LVarValue, Lattice};
use crate::stdlib_seq::{SeqValue, SingletonNat};
use crate::stdlib_sets::SetValue;
use crate::value::{ElemType, Value};
use crate::IntZSet;

pub const MAX_SEQ: usize = 5;
pub const MAX_SET: usize = 5;
pub const MAX_ZSET_KEYS: usize = 8;
pub const MAX_TUPLES: usize = 3;
pub const INT_RANGE: i64 = 6;

/// How fixedness is chosen for a generated value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fixing {
    Random,
    Fixed,
    Open,
}

impl Fixing {
    fn pick(self, rng: &mut impl Rng) -> bool {
        match self {
            Fixing::Random => rng.gen_bool(0.5),
            Fixing::Fixed => true,
            Fixing::Open => false,
        }
    }
}

pub fn value(t: &ElemType, rng: &mut impl Rng) -> Value {
    match t {
        ElemType::Bool => Value::Bool(rng.gen()),
        ElemType::Int => Value::Int(rng.gen_range(0..INT_RANGE)),
        ElemType::Str => Value::str(["a", "b", "c"].choose(rng).unwrap()),
        ElemType::Tuple(ts) => Value::Tuple(ts.iter().map(|t| value(t, rng)).collect()),
        ElemType::Set(t) => {
            let n = rng.gen_range(0..=3);
            Value::Set((0..n).map(|_| value(t, rng)).collect())
        }
    }
}

pub fn lattice_value(l: &Lattice, rng: &mut impl Rng) -> Value {
    match l {
        Lattice::MaxNat => Value::Int(rng.gen_range(0..INT_RANGE)),
        Lattice::SetUnion(t) => value(&ElemType::Set(Box::new(t.clone())), rng),
        Lattice::Product(a, b) => Value::pair(lattice_value(a, rng), lattice_value(b, rng)),
    }
}

fn elems(t: &ElemType, max: usize, rng: &mut impl Rng) -> BTreeSet<Value> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| value(t, rng)).collect()
}

fn zset(t: &ElemType, rng: &mut impl Rng) -> IntZSet {
    let n = rng.gen_range(0..=MAX_ZSET_KEYS);
    IntZSet::from_pairs((0..n).map(|_| (value(t, rng), rng.gen_range(-3..=3))), false)
}

/// A member of `tag`. Every non-leftmost nested tuple has its bounded components
/// fixed; with `complete` the leftmost one does too.
pub fn collection(tag: &CollectionTypeTag, fixing: Fixing, complete: bool, rng: &mut impl Rng) -> Collection {
    let fixed = fixing.pick(rng);
    match tag {
        CollectionTypeTag::Seq(t) => {
            let n = rng.gen_range(0..=MAX_SEQ);
            Collection::Seq(SeqValue::new((0..n).map(|_| value(t, rng)).collect(), fixed))
        }
        CollectionTypeTag::Set(t) => Collection::Set(SetValue::new(elems(t, MAX_SET, rng), fixed)),
        CollectionTypeTag::ZSet(t) => {
            let mut z = zset(t, rng);
            z.fixed = fixed;
            Collection::ZSet(z)
        }
        CollectionTypeTag::LVar(l) => {
            Collection::LVar(LVarValue::new(l.clone(), lattice_value(l, rng), fixed))
        }
        CollectionTypeTag::Nat => {
            let v = rng.gen_bool(0.7).then(|| rng.gen_range(0..4));
            Collection::Nat(SingletonNat::new(v, fixed))
        }
        CollectionTypeTag::Nested(inner) => {
            let n = rng.gen_range(0..=MAX_TUPLES);
            let arrivals = (0..n)
                .map(|i| tuple(inner, complete || i + 1 < n, rng))
                .collect();
            Collection::Nested(NestedSeqValue::from_arrivals(inner.clone(), arrivals, fixed))
        }
    }
}

/// One tuple; bounded components are fixed when `closed`.
pub fn tuple(inner: &[StreamType], closed: bool, rng: &mut impl Rng) -> Vec<Collection> {
    inner
        .iter()
        .map(|t| {
            let fixing = if closed && t.is_bounded() { Fixing::Fixed } else { Fixing::Random };
            collection(&t.collection, fixing, true, rng)
        })
        .collect()
}

/// Inputs for a subject. Bounded ports are fixed when `fix_bounded`.
pub fn inputs(types: &[StreamType], fix_bounded: bool, complete: bool, rng: &mut impl Rng) -> Vec<Collection> {
    types
        .iter()
        .map(|t| {
            let fixing = if fix_bounded && t.is_bounded() { Fixing::Fixed } else { Fixing::Random };
            collection(&t.collection, fixing, complete, rng)
        })
        .collect()
}

fn flat_content(tag: &CollectionTypeTag, rng: &mut impl Rng) -> Delta {
    match tag {
        CollectionTypeTag::Seq(t) => {
            let n = rng.gen_range(0..=3);
            Delta::Seq(SeqValue::new((0..n).map(|_| value(t, rng)).collect(), false))
        }
        CollectionTypeTag::Set(t) => Delta::Set(SetValue::new(elems(t, 3, rng), false)),
        CollectionTypeTag::ZSet(t) => Delta::ZSet(zset(t, rng)),
        CollectionTypeTag::LVar(l) => Delta::LVar(LVarValue::new(l.clone(), lattice_value(l, rng), false)),
        CollectionTypeTag::Nat => Delta::Nat(SingletonNat::new(Some(rng.gen_range(0..4)), false)),
        CollectionTypeTag::Nested(_) => Delta::Empty,
    }
}

/// A delta that concatenates cleanly onto `current`: empty, the terminator, fresh
/// content, or content followed by the terminator.
pub fn delta(current: &Collection, tag: &CollectionTypeTag, rng: &mut impl Rng) -> Delta {
    let roll = rng.gen_range(0..10);
    if roll == 0 {
        return Delta::Empty;
    }
    if roll == 1 {
        return Delta::End;
    }
    let end = roll == 2;
    match (current, tag) {
        (Collection::Nat(n), _) if n.value.is_some() => {
            if end { Delta::End } else { Delta::Empty }
        }
        (Collection::Nested(v), CollectionTypeTag::Nested(inner)) => nested_delta(v, inner, end, rng),
        _ => match flat_content(tag, rng) {
            Delta::Seq(mut s) => {
                s.terminated = end;
                Delta::Seq(s)
            }
            Delta::Set(mut s) => {
                s.fixed = end;
                Delta::Set(s)
            }
            Delta::ZSet(mut z) => {
                z.fixed = end;
                Delta::ZSet(z)
            }
            Delta::LVar(mut l) => {
                l.fixed = end;
                Delta::LVar(l)
            }
            Delta::Nat(mut n) => {
                n.fixed = end;
                Delta::Nat(n)
            }
            other => other,
        },
    }
}

fn nested_delta(v: &NestedSeqValue, inner: &[StreamType], end: bool, rng: &mut impl Rng) -> Delta {
    let pushes = rng.gen_range(0..=2usize);
    let mut ops = Vec::new();
    if let Some(left) = v.tuples.first() {
        let ext = left
            .iter()
            .zip(inner)
            .map(|(c, t)| {
                if (pushes > 0 || end) && t.is_bounded() && !c.is_fixed() {
                    Delta::End
                } else {
                    delta(c, &t.collection, rng)
                }
            })
            .collect();
        ops.push(NestedOp::Extend(ext));
    }
    for i in 0..pushes {
        ops.push(NestedOp::Push(tuple(inner, end || i + 1 < pushes, rng)));
    }
    Delta::Nested(NestedDelta { ops, end })
}

/// One delta per input, each valid for the corresponding current value.
pub fn deltas(current: &[Collection], types: &[StreamType], rng: &mut impl Rng) -> Vec<Delta> {
    current
        .iter()
        .zip(types)
        .map(|(c, t)| if rng.gen_bool(0.3) { Delta::Empty } else { delta(c, &t.collection, rng) })
        .collect()
}
